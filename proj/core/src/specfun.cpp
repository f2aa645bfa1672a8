#include "citereg/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "citereg/errors.hpp"

namespace citereg {

namespace {

constexpr double kAsymptoticThreshold = 10.0;

// Past this many terms the explicit sum is slower than two ln_gamma calls
// and no more accurate.
constexpr std::uint64_t kDirectSumLimit = 1024;

// B_{2k} / (2k (2k - 1)), k = 1..8
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,       -1.0 / 360.0,  1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0,     -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0};

// B_{2k} / (2k), k = 1..7
constexpr std::array<double, 7> kDigammaSeries = {
    1.0 / 12.0,  -1.0 / 120.0,      1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0,  1.0 / 12.0};

void require_positive(double z, const char* fn) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(z));
  }
}

double stirling_ln_gamma(double z) {
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  double series = 0.0;
  double power = inv;
  for (double c : kStirling) {
    series += c * power;
    power *= inv2;
  }
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

}  // namespace

double ln_gamma(double z) {
  require_positive(z, "ln_gamma");
  if (z >= kAsymptoticThreshold) {
    return stirling_ln_gamma(z);
  }
  // Gamma(z) = Gamma(z + m) / (z (z+1) ... (z+m-1))
  double product = 1.0;
  while (z < kAsymptoticThreshold) {
    product *= z;
    z += 1.0;
  }
  return stirling_ln_gamma(z) - std::log(product);
}

double ln_gamma_approx(double z) {
  require_positive(z, "ln_gamma_approx");
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z - 0.5) * std::log(z) - z +
         0.5 * z * std::log(z * std::sinh(1.0 / z));
}

double digamma(double z) {
  require_positive(z, "digamma");
  double shift = 0.0;
  while (z < kAsymptoticThreshold) {
    shift -= 1.0 / z;
    z += 1.0;
  }
  const double inv2 = 1.0 / (z * z);
  double series = 0.0;
  double power = inv2;
  for (double c : kDigammaSeries) {
    series += c * power;
    power *= inv2;
  }
  return shift + std::log(z) - 0.5 / z - series;
}

double ln_gamma_ratio(double a, std::uint64_t b) {
  require_positive(a, "ln_gamma_ratio");
  if (b == 0) return 0.0;
  if (b > kDirectSumLimit) {
    return ln_gamma(a + static_cast<double>(b)) - ln_gamma(a);
  }
  // Accumulate the product in blocks and take one log per block.
  double total = 0.0;
  double block = 1.0;
  for (std::uint64_t j = 0; j < b; ++j) {
    block *= a + static_cast<double>(j);
    if (block > 1e250 || block < 1e-250) {
      total += std::log(block);
      block = 1.0;
    }
  }
  return total + std::log(block);
}

double digamma_difference(double a, std::uint64_t b) {
  require_positive(a, "digamma_difference");
  if (b == 0) return 0.0;
  if (b > kDirectSumLimit) {
    return digamma(a + static_cast<double>(b)) - digamma(a);
  }
  double total = 0.0;
  for (std::uint64_t j = 0; j < b; ++j) {
    total += 1.0 / (a + static_cast<double>(j));
  }
  return total;
}

}  // namespace citereg
