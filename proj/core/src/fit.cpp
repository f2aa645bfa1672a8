#include "citereg/fit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "citereg/errors.hpp"
#include "citereg/optimize.hpp"

namespace citereg {

namespace {

constexpr double kPoissonBoundaryR = 1e-6;
constexpr double kMinStartR = 1e-3;
constexpr double kCovarianceAgreement = 1e-6;
// |linear predictor| beyond which a logit fitted probability is numerically 0 or 1.
constexpr double kSaturatedLogit = 25.0;

AscentOptions ascent_options(const FitOptions& opts) {
  AscentOptions a;
  a.max_iterations = opts.max_iterations;
  a.gradient_tolerance = opts.gradient_tolerance;
  a.step_halving_limit = opts.step_halving_limit;
  return a;
}

void validate_options(const FitOptions& opts) {
  if (opts.max_iterations <= 0 || !(opts.gradient_tolerance > 0.0) ||
      opts.step_halving_limit <= 0 || !(opts.hessian_step > 0.0)) {
    throw ConfigError("fit options must all be positive");
  }
}

void check_design(const DesignMatrix& X, CountSpan y, std::size_t extra, const char* fn) {
  if (X.rows() != y.size()) {
    throw DimensionError(std::string(fn) + ": design has " + std::to_string(X.rows()) +
                         " rows, response has " + std::to_string(y.size()));
  }
  if (y.size() <= X.cols() + extra) {
    throw StructuralError(std::string(fn) + ": need more observations (" + std::to_string(y.size()) +
                          ") than parameters (" + std::to_string(X.cols() + extra) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.X);
  if (static_cast<std::size_t>(qr.rank()) < X.cols()) {
    throw RankDeficientError(std::string(fn) + ": design matrix is rank deficient (rank " +
                             std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + ")");
  }
}

std::optional<std::size_t> intercept_column(const DesignMatrix& X) {
  if (auto j = X.index_of(DesignMatrix::kIntercept)) return j;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    if ((X.X.col(static_cast<Eigen::Index>(j)).array() == 1.0).all()) return j;
  }
  return std::nullopt;
}

double mean_of(CountSpan y) {
  double s = 0.0;
  for (auto v : y) s += static_cast<double>(v);
  return s / static_cast<double>(y.size());
}

double variance_of(CountSpan y, double mean) {
  double s = 0.0;
  for (auto v : y) {
    const double d = static_cast<double>(v) - mean;
    s += d * d;
  }
  return y.size() > 1 ? s / static_cast<double>(y.size() - 1) : 0.0;
}

// Method-of-moments start from Var = mean + r mean^2.
double moment_start_r(CountSpan y) {
  const double m = mean_of(y);
  const double s2 = variance_of(y, m);
  return std::max((s2 - m) / (m * m), kMinStartR);
}

struct Covariance {
  Eigen::MatrixXd matrix;
  bool negative_definite = true;
};

Covariance invert_information(const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd information = -hessian;
  const Eigen::Index p = information.rows();
  Covariance out;
  Eigen::LLT<Eigen::MatrixXd> llt(information);
  if (llt.info() == Eigen::Success && information.allFinite()) {
    out.matrix = llt.solve(Eigen::MatrixXd::Identity(p, p));
    out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
    return out;
  }
  out.negative_definite = false;
  out.matrix = Eigen::MatrixXd::Zero(p, p);
  if (!information.allFinite()) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
  const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double lambda = eig.eigenvalues()[j];
    if (lambda > 1e-12 * largest) {
      out.matrix += eig.eigenvectors().col(j) * eig.eigenvectors().col(j).transpose() / lambda;
    }
  }
  return out;
}

bool covariances_agree(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double scale = std::sqrt(std::abs(a(i, i) * a(j, j)));
      if (std::abs(a(i, j) - b(i, j)) > kCovarianceAgreement * std::max(scale, 1e-300)) return false;
    }
  }
  return true;
}

struct BlockFit {
  AscentResult ascent;
  Covariance covariance;
  bool conditioning_ok = true;
};

BlockFit run_block(const Objective& objective, Eigen::VectorXd start, const FitOptions& opts) {
  BlockFit out;
  out.ascent = maximize_bfgs(objective, std::move(start), ascent_options(opts));
  const Eigen::MatrixXd h1 = numerical_hessian(objective, out.ascent.x, opts.hessian_step);
  const Eigen::MatrixXd h2 = numerical_hessian(objective, out.ascent.x, 2.0 * opts.hessian_step);
  out.covariance = invert_information(h1);
  if (out.covariance.negative_definite) {
    const Covariance check = invert_information(h2);
    out.conditioning_ok =
        check.negative_definite && covariances_agree(out.covariance.matrix, check.matrix);
  }
  return out;
}

void add_warning(FittedModel& m, const char* code) {
  if (!m.has_warning(code)) m.warnings.emplace_back(code);
}

void record_block(FittedModel& m, const BlockFit& block) {
  if (!block.ascent.converged) add_warning(m, fit_warning::kNotConverged);
  if (!block.covariance.negative_definite) add_warning(m, fit_warning::kHessianNotNegativeDefinite);
  if (!block.conditioning_ok) add_warning(m, fit_warning::kCovarianceConditioning);
}

void finish_natural_scale(FittedModel& m) {
  m.covariance_natural = m.covariance;
  if (!m.has_dispersion()) return;
  const auto j = static_cast<Eigen::Index>(m.dispersion_index());
  const double r = m.r();
  // d r / d log r = r
  m.covariance_natural.row(j) *= r;
  m.covariance_natural.col(j) *= r;
  if (r < kPoissonBoundaryR) add_warning(m, fit_warning::kPoissonBoundary);
}

Eigen::VectorXd poisson_start(const DesignMatrix& X, CountSpan y) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(X.cols()));
  if (auto j = intercept_column(X)) beta[static_cast<Eigen::Index>(*j)] = std::log(mean_of(y));
  return beta;
}

std::vector<std::uint64_t> positives_of(CountSpan y, std::vector<bool>& mask) {
  mask.assign(y.size(), false);
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > 0) {
      mask[i] = true;
      out.push_back(y[i]);
    }
  }
  return out;
}

void check_separation_precondition(const DesignMatrix& X_h, CountSpan y) {
  for (std::size_t j = 0; j < X_h.cols(); ++j) {
    const auto col = X_h.X.col(static_cast<Eigen::Index>(j));
    const bool binary = (col.array() == 0.0 || col.array() == 1.0).all();
    if (!binary || (col.array() == 1.0).all()) continue;
    std::size_t zeros[2] = {0, 0};
    std::size_t total[2] = {0, 0};
    for (std::size_t i = 0; i < y.size(); ++i) {
      const int level = col[static_cast<Eigen::Index>(i)] == 1.0 ? 1 : 0;
      ++total[level];
      if (y[i] == 0) ++zeros[level];
    }
    for (int level = 0; level < 2; ++level) {
      if (total[level] > 0 && (zeros[level] == 0 || zeros[level] == total[level])) {
        throw SeparationError("hurdle equation: column '" + X_h.labels[j] +
                                  "' separates zero from positive counts (" +
                                  (zeros[level] == 0 ? "no" : "only") + " zeros where it equals " +
                                  std::to_string(level) + ")",
                              X_h.labels[j]);
      }
    }
  }
}

std::size_t most_extreme_column(const DesignMatrix& X_h, const Eigen::VectorXd& delta) {
  std::size_t worst = 0;
  double worst_value = -1.0;
  for (std::size_t j = 0; j < X_h.cols(); ++j) {
    const auto col = X_h.X.col(static_cast<Eigen::Index>(j));
    const double spread = col.maxCoeff() - col.minCoeff();
    const double value = std::abs(delta[static_cast<Eigen::Index>(j)]) * (spread > 0.0 ? spread : 1.0);
    if (X_h.labels[j] != DesignMatrix::kIntercept && value > worst_value) {
      worst_value = value;
      worst = j;
    }
  }
  return worst;
}

}  // namespace

std::string_view family_code(Family family) {
  switch (family) {
    case Family::Poisson: return "P";
    case Family::NegativeBinomial: return "NB";
    case Family::HurdleNegativeBinomial: return "HNB";
  }
  return "?";
}

Family parse_family(std::string_view code) {
  std::string upper(code);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "P" || upper == "POISSON") return Family::Poisson;
  if (upper == "NB") return Family::NegativeBinomial;
  if (upper == "HNB") return Family::HurdleNegativeBinomial;
  throw ConfigError("unknown model family '" + std::string(code) + "' (expected P, NB or HNB)");
}

std::size_t FittedModel::num_params() const noexcept {
  return k() + (has_dispersion() ? 1 : 0) + (has_hurdle() ? k_hurdle() : 0);
}

bool FittedModel::has_warning(std::string_view code) const {
  return std::find(warnings.begin(), warnings.end(), code) != warnings.end();
}

Eigen::VectorXd FittedModel::beta() const { return params.head(static_cast<Eigen::Index>(k())); }

double FittedModel::log_r() const {
  if (!has_dispersion()) throw UnsupportedFamilyError("Poisson model has no dispersion parameter");
  return params[static_cast<Eigen::Index>(dispersion_index())];
}

double FittedModel::r() const { return std::exp(log_r()); }

Eigen::VectorXd FittedModel::delta() const {
  if (!has_hurdle()) return {};
  return params.segment(static_cast<Eigen::Index>(hurdle_offset()),
                        static_cast<Eigen::Index>(k_hurdle()));
}

Eigen::VectorXd FittedModel::natural_estimates() const {
  Eigen::VectorXd out = params;
  if (has_dispersion()) out[static_cast<Eigen::Index>(dispersion_index())] = r();
  return out;
}

Eigen::VectorXd FittedModel::natural_std_errors() const {
  return covariance_natural.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::vector<ParameterInfo> FittedModel::parameters() const {
  std::vector<ParameterInfo> out;
  for (const auto& l : mean_labels) out.push_back({l, Equation::Mean});
  if (has_dispersion()) out.push_back({"r", Equation::Dispersion});
  if (has_hurdle()) {
    for (const auto& l : hurdle_labels) out.push_back({l, Equation::Hurdle});
  }
  return out;
}

NbRegParams FittedModel::nb_params() const { return {beta(), log_r()}; }

HnbRegParams FittedModel::hnb_params() const { return {nb_params(), delta()}; }

HomogeneousEstimates FittedModel::homogeneous() const {
  if (k() != 1) throw StructuralError("homogeneous(): model has covariates in the mean equation");
  HomogeneousEstimates out;
  out.theta = std::exp(params[0]);
  if (has_dispersion()) out.r = r();
  if (has_hurdle()) {
    if (k_hurdle() != 1) throw StructuralError("homogeneous(): model has hurdle covariates");
    out.phi = 1.0 / (1.0 + std::exp(-delta()[0]));
  }
  return out;
}

FittedModel fit_poisson(const DesignMatrix& X, CountSpan y, const FitOptions& opts) {
  validate_options(opts);
  check_design(X, y, 0, "fit_poisson");
  if (std::all_of(y.begin(), y.end(), [](auto v) { return v == 0; })) {
    throw StructuralError("fit_poisson: response is identically zero");
  }
  const Eigen::MatrixXd& M = X.X;
  const Objective objective = [&](const Eigen::VectorXd& beta, Eigen::VectorXd* grad) {
    if (grad) *grad = poisson_score(beta, M, y);
    return poisson_loglik(beta, M, y);
  };
  const BlockFit block = run_block(objective, poisson_start(X, y), opts);

  FittedModel m;
  m.family = Family::Poisson;
  m.mean_labels = X.labels;
  m.params = block.ascent.x;
  m.covariance = block.covariance.matrix;
  m.loglik = block.ascent.value;
  m.n = y.size();
  m.converged = block.ascent.converged;
  m.iterations = block.ascent.iterations;
  m.gradient_norm = max_abs(block.ascent.gradient);
  record_block(m, block);
  finish_natural_scale(m);
  return m;
}

FittedModel fit_nb(const DesignMatrix& X, CountSpan y, const FitOptions& opts) {
  validate_options(opts);
  check_design(X, y, 1, "fit_nb");
  const FittedModel start = fit_poisson(X, y, opts);
  const auto k = static_cast<Eigen::Index>(X.cols());

  const Eigen::MatrixXd& M = X.X;
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const NbRegParams p{x.head(k), x[k]};
    if (grad) *grad = nb_score(p, M, y);
    return nb_loglik(p, M, y);
  };
  Eigen::VectorXd x0(k + 1);
  x0 << start.params, std::log(moment_start_r(y));
  const BlockFit block = run_block(objective, x0, opts);

  FittedModel m;
  m.family = Family::NegativeBinomial;
  m.mean_labels = X.labels;
  m.params = block.ascent.x;
  m.covariance = block.covariance.matrix;
  m.loglik = block.ascent.value;
  m.n = y.size();
  m.converged = block.ascent.converged;
  m.iterations = start.iterations + block.ascent.iterations;
  m.gradient_norm = max_abs(block.ascent.gradient);
  record_block(m, block);
  finish_natural_scale(m);
  return m;
}

FittedModel fit_hnb(const DesignMatrix& X, const DesignMatrix& X_h, CountSpan y,
                    const FitOptions& opts) {
  validate_options(opts);
  if (X.rows() != y.size() || X_h.rows() != y.size()) {
    throw DimensionError("fit_hnb: design row counts differ from the response length");
  }
  std::vector<bool> mask;
  const std::vector<std::uint64_t> positives = positives_of(y, mask);
  if (positives.empty()) throw StructuralError("fit_hnb: response has no positive counts");
  if (positives.size() == y.size()) throw StructuralError("fit_hnb: response has no zeros");
  check_design(X_h, y, 0, "fit_hnb (hurdle part)");
  check_separation_precondition(X_h, y);

  // Binary part: logit model for I(y = 0).
  const Eigen::MatrixXd& H = X_h.X;
  const Objective zero_objective = [&](const Eigen::VectorXd& d, Eigen::VectorXd* grad) {
    if (grad) *grad = logit_zero_score(d, H, y);
    return logit_zero_loglik(d, H, y);
  };
  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(X_h.cols()));
  if (auto j = intercept_column(X_h)) {
    const double zero_fraction =
        1.0 - static_cast<double>(positives.size()) / static_cast<double>(y.size());
    d0[static_cast<Eigen::Index>(*j)] = std::log(zero_fraction / (1.0 - zero_fraction));
  }
  const BlockFit zero_block = run_block(zero_objective, d0, opts);
  if (!zero_block.ascent.converged) {
    const Eigen::VectorXd eta = H * zero_block.ascent.x;
    if (max_abs(eta) > kSaturatedLogit) {
      const std::size_t j = most_extreme_column(X_h, zero_block.ascent.x);
      throw SeparationError("hurdle equation did not converge: fitted probabilities saturate; '" +
                                X_h.labels[j] + "' (nearly) separates zero from positive counts",
                            X_h.labels[j]);
    }
  }

  // Truncated part on the positive rows only.
  const DesignMatrix X_pos = X.subset_rows(mask);
  // As many positives as count-part parameters is enough for the truncated fit.
  check_design(X_pos, positives, 0, "fit_hnb (count part)");
  const FittedModel start = fit_poisson(X_pos, positives, opts);
  const auto k = static_cast<Eigen::Index>(X.cols());
  const Eigen::MatrixXd& P = X_pos.X;
  const CountSpan pos_span(positives);
  const Objective count_objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const NbRegParams p{x.head(k), x[k]};
    if (grad) *grad = truncated_nb_score(p, P, pos_span);
    return truncated_nb_loglik(p, P, pos_span);
  };
  Eigen::VectorXd x0(k + 1);
  x0 << start.params, std::log(moment_start_r(positives));
  const BlockFit count_block = run_block(count_objective, x0, opts);

  FittedModel m;
  m.family = Family::HurdleNegativeBinomial;
  m.mean_labels = X.labels;
  m.hurdle_labels = X_h.labels;
  const Eigen::Index kc = k + 1;
  const auto kh = static_cast<Eigen::Index>(X_h.cols());
  m.params.resize(kc + kh);
  m.params << count_block.ascent.x, zero_block.ascent.x;
  m.covariance = Eigen::MatrixXd::Zero(kc + kh, kc + kh);
  m.covariance.topLeftCorner(kc, kc) = count_block.covariance.matrix;
  m.covariance.bottomRightCorner(kh, kh) = zero_block.covariance.matrix;
  m.loglik_binary = zero_block.ascent.value;
  m.loglik_truncated = count_block.ascent.value;
  m.loglik = m.loglik_binary + m.loglik_truncated;
  m.n = y.size();
  m.converged = zero_block.ascent.converged && count_block.ascent.converged;
  m.iterations = zero_block.ascent.iterations + start.iterations + count_block.ascent.iterations;
  m.gradient_norm =
      std::max(max_abs(zero_block.ascent.gradient), max_abs(count_block.ascent.gradient));
  record_block(m, zero_block);
  record_block(m, count_block);
  finish_natural_scale(m);
  return m;
}

FittedModel fit_homogeneous(Family family, CountSpan y, const FitOptions& opts) {
  if (y.empty()) throw StructuralError("fit_homogeneous: empty response");
  const DesignMatrix X = DesignMatrix::intercept_only(y.size());
  return fit_model(family, X, X, y, opts);
}

FittedModel fit_model(Family family, const DesignMatrix& X, const DesignMatrix& X_h, CountSpan y,
                      const FitOptions& opts) {
  switch (family) {
    case Family::Poisson: return fit_poisson(X, y, opts);
    case Family::NegativeBinomial: return fit_nb(X, y, opts);
    case Family::HurdleNegativeBinomial: return fit_hnb(X, X_h, y, opts);
  }
  throw UnsupportedFamilyError("unknown family");
}

double model_loglik(const FittedModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_h,
                    CountSpan y) {
  switch (model.family) {
    case Family::Poisson: return poisson_loglik(model.beta(), X, y);
    case Family::NegativeBinomial: return nb_loglik(model.nb_params(), X, y);
    case Family::HurdleNegativeBinomial: return hnb_loglik(model.hnb_params(), X, X_h, y).total();
  }
  throw UnsupportedFamilyError("unknown family");
}

}  // namespace citereg
