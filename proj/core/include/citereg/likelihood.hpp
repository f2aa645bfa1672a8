#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>

namespace citereg {

/// Linear predictors are clamped to this range before exponentiation.
inline constexpr double kLinearPredictorBound = 700.0;

/// Mean-equation coefficients plus the dispersion on the log scale.
struct NbRegParams {
  Eigen::VectorXd beta;
  double log_r = 0.0;

  double r() const { return std::exp(log_r); }
};

struct HnbRegParams {
  NbRegParams nb;       ///< zero-truncated count part
  Eigen::VectorXd delta;  ///< logit hurdle coefficients
};

enum class LoglikScale {
  Full,          ///< includes -sum log Gamma(y_i + 1); comparable across families
  Proportional,  ///< drops the data-only constant
};

/// The hurdle log-likelihood split into its two separable parts.
struct HurdleLoglik {
  double binary = 0.0;     ///< sum I(y=0) log phi + I(y>0) log(1 - phi)
  double truncated = 0.0;  ///< sum over y>0 of log NB pmf - log(1 - p0)

  double total() const { return binary + truncated; }
};

using CountSpan = std::span<const std::uint64_t>;

/// theta_i = exp(x_i' beta).
Eigen::VectorXd link_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta);
/// phi_i = logistic(x_i' delta).
Eigen::VectorXd link_hurdle(const Eigen::MatrixXd& X_h, const Eigen::VectorXd& delta);

double poisson_loglik(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, CountSpan y,
                      LoglikScale scale = LoglikScale::Full);
Eigen::VectorXd poisson_score(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, CountSpan y);

double nb_loglik(const NbRegParams& params, const Eigen::MatrixXd& X, CountSpan y,
                 LoglikScale scale = LoglikScale::Full);
/// Gradient with respect to (beta, log r); length k + 1.
Eigen::VectorXd nb_score(const NbRegParams& params, const Eigen::MatrixXd& X, CountSpan y);

/// Binary (logit) part of the hurdle likelihood.
double logit_zero_loglik(const Eigen::VectorXd& delta, const Eigen::MatrixXd& X_h, CountSpan y);
Eigen::VectorXd logit_zero_score(const Eigen::VectorXd& delta, const Eigen::MatrixXd& X_h,
                                 CountSpan y);

/// Zero-truncated NB part of the hurdle likelihood; rows with y = 0 are skipped.
double truncated_nb_loglik(const NbRegParams& params, const Eigen::MatrixXd& X, CountSpan y,
                           LoglikScale scale = LoglikScale::Full);
Eigen::VectorXd truncated_nb_score(const NbRegParams& params, const Eigen::MatrixXd& X,
                                   CountSpan y);

HurdleLoglik hnb_loglik(const HnbRegParams& params, const Eigen::MatrixXd& X,
                        const Eigen::MatrixXd& X_h, CountSpan y,
                        LoglikScale scale = LoglikScale::Full);
/// Same likelihood with the hurdle probabilities supplied directly.
HurdleLoglik hnb_loglik_given_phi(const NbRegParams& nb, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& phi, CountSpan y,
                                  LoglikScale scale = LoglikScale::Full);
/// Gradient ordered (beta, log r, delta); length k + 1 + k_h.
Eigen::VectorXd hnb_score(const HnbRegParams& params, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& X_h, CountSpan y);

}  // namespace citereg
