#include "citereg/optimize.hpp"

#include <cmath>
#include <limits>

namespace citereg {

namespace {

Eigen::MatrixXd initial_inverse(const Objective& f, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd H = numerical_hessian(f, x, 1e-5);
  const Eigen::MatrixXd neg = -H;
  Eigen::LLT<Eigen::MatrixXd> llt(neg);
  if (llt.info() == Eigen::Success && neg.allFinite()) {
    return llt.solve(Eigen::MatrixXd::Identity(x.size(), x.size()));
  }
  // Fall back to the reciprocal curvature along each axis.
  Eigen::VectorXd diag(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double c = std::abs(H(j, j));
    diag[j] = std::isfinite(c) && c > 1e-12 ? 1.0 / c : 1.0;
  }
  return diag.asDiagonal();
}

}  // namespace

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x,
                                  double relative_step) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd H(p, p);
  Eigen::VectorXd g_plus(p), g_minus(p);
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double h = relative_step * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    f(probe, &g_plus);
    probe[j] = x[j] - h;
    f(probe, &g_minus);
    probe[j] = x[j];
    H.col(j) = (g_plus - g_minus) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

AscentResult maximize_bfgs(const Objective& f, Eigen::VectorXd x0, const AscentOptions& options,
                           std::optional<Eigen::MatrixXd> inverse_hessian0) {
  const Eigen::Index p = x0.size();
  AscentResult result;
  result.x = std::move(x0);
  result.gradient.resize(p);
  result.value = f(result.x, &result.gradient);
  if (!std::isfinite(result.value)) return result;

  Eigen::MatrixXd inv = inverse_hessian0 ? *inverse_hessian0 : initial_inverse(f, result.x);
  Eigen::VectorXd x_new(p), g_new(p);
  bool fresh = true;  // inv was just (re)initialized

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (max_abs(result.gradient) < options.gradient_tolerance * (1.0 + std::abs(result.value))) {
      result.converged = true;
      return result;
    }
    Eigen::VectorXd direction = inv * result.gradient;
    double slope = result.gradient.dot(direction);
    if (!(slope > 0.0) || !direction.allFinite()) {
      inv = initial_inverse(f, result.x);
      fresh = true;
      direction = inv * result.gradient;
      slope = result.gradient.dot(direction);
      if (!(slope > 0.0)) {
        inv = Eigen::MatrixXd::Identity(p, p);
        direction = result.gradient;
        slope = direction.squaredNorm();
      }
    }
    const double longest = max_abs(direction);
    if (longest > options.max_step) {
      direction *= options.max_step / longest;
      slope *= options.max_step / longest;
    }

    double step = 1.0;
    double value_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving <= options.step_halving_limit; ++halving) {
      x_new = result.x + step * direction;
      value_new = f(x_new, &g_new);
      if (std::isfinite(value_new) && g_new.allFinite() &&
          value_new >= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = iter + 1;
    if (!accepted) {
      if (fresh) break;  // no ascent even from a fresh curvature estimate
      inv = initial_inverse(f, result.x);
      fresh = true;
      continue;
    }

    const Eigen::VectorXd s = x_new - result.x;
    // curvature pair for the minimization of -f
    const Eigen::VectorXd yv = result.gradient - g_new;
    const double sy = s.dot(yv);
    result.x = x_new;
    result.value = value_new;
    result.gradient = g_new;
    fresh = false;
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd inv_y = inv * yv;
      inv += (rho * rho * yv.dot(inv_y) + rho) * s * s.transpose() -
             rho * (inv_y * s.transpose() + s * inv_y.transpose());
    }
  }
  result.converged =
      max_abs(result.gradient) < options.gradient_tolerance * (1.0 + std::abs(result.value));
  return result;
}

}  // namespace citereg
