#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

namespace citereg {

/// Objective evaluated at x; fills grad (same length as x) when non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct AscentOptions {
  int max_iterations = 500;
  /// Converged when max |grad| < gradient_tolerance * (1 + |f|).
  double gradient_tolerance = 1e-7;
  int step_halving_limit = 30;
  /// Largest coordinate change allowed in one step before halving starts.
  double max_step = 10.0;
};

struct AscentResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

/// BFGS maximization with Armijo step halving. inverse_hessian0, when given,
/// seeds the approximation to (-Hessian)^{-1}; otherwise one is built from a
/// finite-difference Hessian at x0.
AscentResult maximize_bfgs(const Objective& f, Eigen::VectorXd x0, const AscentOptions& options,
                           std::optional<Eigen::MatrixXd> inverse_hessian0 = std::nullopt);

/// Central differences of the analytic gradient, symmetrized. Step for
/// coordinate j is relative_step * max(1, |x_j|).
Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x,
                                  double relative_step);

double max_abs(const Eigen::VectorXd& v);

}  // namespace citereg
