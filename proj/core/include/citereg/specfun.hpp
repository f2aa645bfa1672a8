#pragma once

#include <cstdint>

namespace citereg {

/// Natural log of the Euler gamma function for z > 0.
///
/// Shifts the argument upward to z >= 10 and evaluates the Stirling series
/// with Bernoulli terms through B16. Absolute error is below 1e-12 on
/// [0.5, 1e3]; beyond that the error is a few ulps of the result.
/// Throws DomainError for z <= 0 or non-finite z.
double ln_gamma(double z);

/// Closed-form sinh-corrected Stirling approximation to log Gamma(z):
///
///   0.5 log(2 pi) + (z - 0.5) log z - z + 0.5 z log(z sinh(1/z))
///
/// Evaluated exactly as written. Kept as a cross-check utility; the
/// likelihoods always use ln_gamma.
double ln_gamma_approx(double z);

/// Digamma psi(z) = d/dz log Gamma(z) for z > 0, via upward recurrence to
/// z >= 10 followed by the asymptotic series.
double digamma(double z);

/// log Gamma(a + b) - log Gamma(a) for a > 0 and integer b >= 0, computed as
/// sum_{j=0}^{b-1} log(a + j). Large b falls back to a difference of
/// ln_gamma values.
double ln_gamma_ratio(double a, std::uint64_t b);

/// psi(a + b) - psi(a) = sum_{j=0}^{b-1} 1 / (a + j), with the same large-b
/// fallback as ln_gamma_ratio.
double digamma_difference(double a, std::uint64_t b);

}  // namespace citereg
