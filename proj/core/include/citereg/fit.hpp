#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citereg/datamodel.hpp"
#include "citereg/likelihood.hpp"

namespace citereg {

enum class Family { Poisson, NegativeBinomial, HurdleNegativeBinomial };

/// "P", "NB" or "HNB".
std::string_view family_code(Family family);
/// Accepts the codes above (case-insensitive). Throws ConfigError otherwise.
Family parse_family(std::string_view code);

struct FitOptions {
  int max_iterations = 500;
  /// Scaled by (1 + |loglik|) at the convergence check.
  double gradient_tolerance = 1e-7;
  int step_halving_limit = 30;
  /// Relative step of the central-difference Hessian.
  double hessian_step = 1e-5;
};

/// Which equation a parameter belongs to.
enum class Equation { Mean, Dispersion, Hurdle };

struct ParameterInfo {
  std::string name;
  Equation equation;
};

/// Warning codes attached to a FittedModel.
namespace fit_warning {
inline constexpr const char* kNotConverged = "not_converged";
inline constexpr const char* kPoissonBoundary = "poisson_boundary";
inline constexpr const char* kHessianNotNegativeDefinite = "hessian_not_negative_definite";
inline constexpr const char* kCovarianceConditioning = "covariance_conditioning";
}  // namespace fit_warning

/// Intercept-only estimates on the natural scale.
struct HomogeneousEstimates {
  double theta = 0.0;
  std::optional<double> r;
  std::optional<double> phi;
};

/// Immutable result of a maximum-likelihood fit.
///
/// `params` is the unconstrained vector (beta, log r, delta) with the
/// dispersion and hurdle blocks present only for the families that have
/// them. `covariance` is the inverse observed information on that scale;
/// `covariance_natural` replaces log r by r through the delta method.
struct FittedModel {
  Family family = Family::Poisson;
  std::vector<std::string> mean_labels;
  std::vector<std::string> hurdle_labels;

  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd covariance_natural;

  double loglik = 0.0;            ///< full (includes -sum log y!)
  double loglik_binary = 0.0;     ///< HNB only
  double loglik_truncated = 0.0;  ///< HNB only

  std::size_t n = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  ///< max |score| at the returned point
  std::vector<std::string> warnings;

  std::size_t k() const noexcept { return mean_labels.size(); }
  std::size_t k_hurdle() const noexcept { return hurdle_labels.size(); }
  bool has_dispersion() const noexcept { return family != Family::Poisson; }
  bool has_hurdle() const noexcept { return family == Family::HurdleNegativeBinomial; }
  /// P: k; NB: k + 1; HNB: k + 1 + k_h.
  std::size_t num_params() const noexcept;
  bool has_warning(std::string_view code) const;

  Eigen::VectorXd beta() const;
  double log_r() const;  ///< throws for Poisson
  double r() const;
  Eigen::VectorXd delta() const;  ///< empty unless HNB
  std::size_t dispersion_index() const { return k(); }
  std::size_t hurdle_offset() const { return k() + 1; }

  /// params with log r replaced by r.
  Eigen::VectorXd natural_estimates() const;
  Eigen::VectorXd natural_std_errors() const;
  std::vector<ParameterInfo> parameters() const;

  NbRegParams nb_params() const;
  HnbRegParams hnb_params() const;

  HomogeneousEstimates homogeneous() const;
};

FittedModel fit_poisson(const DesignMatrix& X, CountSpan y, const FitOptions& opts = {});
FittedModel fit_nb(const DesignMatrix& X, CountSpan y, const FitOptions& opts = {});
/// The logit part and the zero-truncated part are maximized separately.
FittedModel fit_hnb(const DesignMatrix& X, const DesignMatrix& X_h, CountSpan y,
                    const FitOptions& opts = {});
FittedModel fit_homogeneous(Family family, CountSpan y, const FitOptions& opts = {});

/// Dispatches on family; X_h is ignored unless the family is HNB.
FittedModel fit_model(Family family, const DesignMatrix& X, const DesignMatrix& X_h, CountSpan y,
                      const FitOptions& opts = {});

/// Full log-likelihood of `model` evaluated on (X, X_h, y).
double model_loglik(const FittedModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_h,
                    CountSpan y);

}  // namespace citereg
