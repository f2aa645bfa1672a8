#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "citereg/countdist.hpp"

namespace testsupport {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240611);
  return engine;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng());
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

/// Intercept plus k-1 U(-1,1) columns.
inline Eigen::MatrixXd random_design(std::size_t n, std::size_t k) {
  Eigen::MatrixXd X(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t j = 1; j < k; ++j) X(i, j) = uniform(-1.0, 1.0);
  }
  return X;
}

inline citereg::Counts random_counts(std::size_t n, std::uint64_t max) {
  citereg::Counts y(n);
  for (auto& v : y) v = uniform_int(0, max);
  return y;
}

/// Central finite-difference gradient with step h * max(1, |x_j|).
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd up = x, down = x;
    up[j] += step;
    down[j] -= step;
    g[j] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

}  // namespace testsupport
