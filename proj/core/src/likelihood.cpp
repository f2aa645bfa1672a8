#include "citereg/likelihood.hpp"

#include <algorithm>
#include <string>

#include "citereg/errors.hpp"
#include "citereg/specfun.hpp"

namespace citereg {

namespace {

void check_dims(const Eigen::MatrixXd& X, Eigen::Index coefs, CountSpan y, const char* fn) {
  if (X.cols() != coefs) {
    throw DimensionError(std::string(fn) + ": design has " + std::to_string(X.cols()) +
                         " columns but " + std::to_string(coefs) + " coefficients were given");
  }
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw DimensionError(std::string(fn) + ": design has " + std::to_string(X.rows()) +
                         " rows but the response has " + std::to_string(y.size()));
  }
}

Eigen::VectorXd clamped_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& coef) {
  Eigen::VectorXd eta = X * coef;
  return eta.cwiseMax(-kLinearPredictorBound).cwiseMin(kLinearPredictorBound);
}

// log(logistic(eta)), stable for either sign
double log_logistic(double eta) {
  return eta < 0.0 ? eta - std::log1p(std::exp(eta)) : -std::log1p(std::exp(-eta));
}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log1m_exp(double log_p) {
  return log_p > -0.693147180559945 ? std::log(-std::expm1(log_p))
                                    : std::log1p(-std::exp(log_p));
}

// Per-observation NB pieces that both the plain and truncated likelihoods share.
struct NbTerm {
  double log_pmf;   // full or proportional
  double d_eta;     // d log pmf / d eta
  double d_log_r;   // d log pmf / d log r
  double log_p0;    // log P(Y = 0)
};

NbTerm nb_term(std::uint64_t y, double eta, double r, double log_r, bool full, bool want_grad) {
  const double a = 1.0 / r;
  const double yd = static_cast<double>(y);
  const double theta = std::exp(eta);
  const double rt = r * theta;
  const double log1p_rt = std::log1p(rt);

  NbTerm t{};
  t.log_pmf = ln_gamma_ratio(a, y) - (a + yd) * log1p_rt + yd * (log_r + eta);
  if (full) t.log_pmf -= ln_gamma(yd + 1.0);
  t.log_p0 = -a * log1p_rt;
  if (want_grad) {
    const double resid = (yd - theta) / (1.0 + rt);
    t.d_eta = resid;
    t.d_log_r = -a * digamma_difference(a, y) + a * log1p_rt + resid;
  }
  return t;
}

}  // namespace

Eigen::VectorXd link_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta) {
  if (X.cols() != beta.size()) throw DimensionError("link_mean: design/coefficient size mismatch");
  return clamped_predictor(X, beta).array().exp().matrix();
}

Eigen::VectorXd link_hurdle(const Eigen::MatrixXd& X_h, const Eigen::VectorXd& delta) {
  if (X_h.cols() != delta.size()) {
    throw DimensionError("link_hurdle: design/coefficient size mismatch");
  }
  return clamped_predictor(X_h, delta).unaryExpr([](double e) { return logistic(e); });
}

double poisson_loglik(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, CountSpan y,
                      LoglikScale scale) {
  check_dims(X, beta.size(), y, "poisson_loglik");
  const Eigen::VectorXd eta = clamped_predictor(X, beta);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yd = static_cast<double>(y[i]);
    const auto e = static_cast<Eigen::Index>(i);
    total += yd * eta[e] - std::exp(eta[e]);
    if (scale == LoglikScale::Full) total -= ln_gamma(yd + 1.0);
  }
  return total;
}

Eigen::VectorXd poisson_score(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, CountSpan y) {
  check_dims(X, beta.size(), y, "poisson_score");
  const Eigen::VectorXd eta = clamped_predictor(X, beta);
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    resid[i] = static_cast<double>(y[static_cast<std::size_t>(i)]) - std::exp(eta[i]);
  }
  return X.transpose() * resid;
}

double nb_loglik(const NbRegParams& params, const Eigen::MatrixXd& X, CountSpan y,
                 LoglikScale scale) {
  check_dims(X, params.beta.size(), y, "nb_loglik");
  const Eigen::VectorXd eta = clamped_predictor(X, params.beta);
  const double r = params.r();
  const bool full = scale == LoglikScale::Full;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    total += nb_term(y[i], eta[static_cast<Eigen::Index>(i)], r, params.log_r, full, false).log_pmf;
  }
  return total;
}

Eigen::VectorXd nb_score(const NbRegParams& params, const Eigen::MatrixXd& X, CountSpan y) {
  check_dims(X, params.beta.size(), y, "nb_score");
  const Eigen::VectorXd eta = clamped_predictor(X, params.beta);
  const double r = params.r();
  Eigen::VectorXd d_eta(eta.size());
  double d_log_r = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const NbTerm t = nb_term(y[i], eta[e], r, params.log_r, false, true);
    d_eta[e] = t.d_eta;
    d_log_r += t.d_log_r;
  }
  Eigen::VectorXd grad(X.cols() + 1);
  grad.head(X.cols()) = X.transpose() * d_eta;
  grad[X.cols()] = d_log_r;
  return grad;
}

double logit_zero_loglik(const Eigen::VectorXd& delta, const Eigen::MatrixXd& X_h, CountSpan y) {
  check_dims(X_h, delta.size(), y, "logit_zero_loglik");
  const Eigen::VectorXd eta = clamped_predictor(X_h, delta);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = eta[static_cast<Eigen::Index>(i)];
    total += y[i] == 0 ? log_logistic(e) : log_logistic(-e);
  }
  return total;
}

Eigen::VectorXd logit_zero_score(const Eigen::VectorXd& delta, const Eigen::MatrixXd& X_h,
                                 CountSpan y) {
  check_dims(X_h, delta.size(), y, "logit_zero_score");
  const Eigen::VectorXd eta = clamped_predictor(X_h, delta);
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    resid[i] = (y[static_cast<std::size_t>(i)] == 0 ? 1.0 : 0.0) - logistic(eta[i]);
  }
  return X_h.transpose() * resid;
}

double truncated_nb_loglik(const NbRegParams& params, const Eigen::MatrixXd& X, CountSpan y,
                           LoglikScale scale) {
  check_dims(X, params.beta.size(), y, "truncated_nb_loglik");
  const Eigen::VectorXd eta = clamped_predictor(X, params.beta);
  const double r = params.r();
  const bool full = scale == LoglikScale::Full;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0) continue;
    const NbTerm t = nb_term(y[i], eta[static_cast<Eigen::Index>(i)], r, params.log_r, full, false);
    total += t.log_pmf - log1m_exp(t.log_p0);
  }
  return total;
}

Eigen::VectorXd truncated_nb_score(const NbRegParams& params, const Eigen::MatrixXd& X,
                                   CountSpan y) {
  check_dims(X, params.beta.size(), y, "truncated_nb_score");
  const Eigen::VectorXd eta = clamped_predictor(X, params.beta);
  const double r = params.r();
  const double a = 1.0 / r;
  Eigen::VectorXd d_eta = Eigen::VectorXd::Zero(eta.size());
  double d_log_r = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0) continue;
    const auto e = static_cast<Eigen::Index>(i);
    const NbTerm t = nb_term(y[i], eta[e], r, params.log_r, false, true);
    const double theta = std::exp(eta[e]);
    const double rt = r * theta;
    // p0 / (1 - p0), written to stay finite as p0 -> 1
    const double odds0 = 1.0 / std::expm1(-t.log_p0);
    d_eta[e] = t.d_eta - odds0 * theta / (1.0 + rt);
    d_log_r += t.d_log_r + odds0 * (a * std::log1p(rt) - theta / (1.0 + rt));
  }
  Eigen::VectorXd grad(X.cols() + 1);
  grad.head(X.cols()) = X.transpose() * d_eta;
  grad[X.cols()] = d_log_r;
  return grad;
}

HurdleLoglik hnb_loglik(const HnbRegParams& params, const Eigen::MatrixXd& X,
                        const Eigen::MatrixXd& X_h, CountSpan y, LoglikScale scale) {
  check_dims(X_h, params.delta.size(), y, "hnb_loglik");
  return {logit_zero_loglik(params.delta, X_h, y), truncated_nb_loglik(params.nb, X, y, scale)};
}

HurdleLoglik hnb_loglik_given_phi(const NbRegParams& nb, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& phi, CountSpan y, LoglikScale scale) {
  if (static_cast<std::size_t>(phi.size()) != y.size()) {
    throw DimensionError("hnb_loglik_given_phi: phi length differs from response length");
  }
  HurdleLoglik out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = phi[static_cast<Eigen::Index>(i)];
    out.binary += y[i] == 0 ? std::log(p) : std::log1p(-p);
  }
  out.truncated = truncated_nb_loglik(nb, X, y, scale);
  return out;
}

Eigen::VectorXd hnb_score(const HnbRegParams& params, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& X_h, CountSpan y) {
  const Eigen::VectorXd count_part = truncated_nb_score(params.nb, X, y);
  const Eigen::VectorXd zero_part = logit_zero_score(params.delta, X_h, y);
  Eigen::VectorXd grad(count_part.size() + zero_part.size());
  grad << count_part, zero_part;
  return grad;
}

}  // namespace citereg
