#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace citereg {

using Counts = std::vector<std::uint64_t>;

/// Engine used by every sampler. Replication streams are split by seeding
/// with (seed, stream) through std::seed_seq; see make_engine.
using Engine = std::mt19937_64;

Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0);

/// Negative binomial with mean theta and index of dispersion r:
/// E[Y] = theta, Var[Y] = theta + r theta^2.
class NbParams {
 public:
  NbParams(double theta, double r);

  double theta() const noexcept { return theta_; }
  double r() const noexcept { return r_; }

 private:
  double theta_;
  double r_;
};

/// Hurdle at zero: P(Y = 0) = phi, positives follow the zero-truncated NB
/// scaled by 1 - phi.
class HurdleParams {
 public:
  HurdleParams(NbParams nb, double phi);

  const NbParams& nb() const noexcept { return nb_; }
  double phi() const noexcept { return phi_; }

 private:
  NbParams nb_;
  double phi_;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

double poisson_log_pmf(std::uint64_t y, double lambda);

double nb_log_pmf(std::uint64_t y, const NbParams& p);

/// P(Y = 0) = (1 + r theta)^(-1/r).
double nb_zero_prob(const NbParams& p);

/// log P(Y = 0) = -(1/r) log(1 + r theta).
double nb_log_zero_prob(const NbParams& p);

Moments nb_mean_var(const NbParams& p);

/// log P(Y = y) under the hurdle model. Returns -infinity when phi = 1 and
/// y > 0 (or phi = 0 and y = 0).
double hnb_log_pmf(std::uint64_t y, const HurdleParams& h);

/// Mean in closed form; variance as sum y^2 pmf(y) - mean^2 over the
/// adaptive support. phi = 1 gives (0, 0).
Moments hnb_mean_var(const HurdleParams& h);

/// Variance obtained algebraically from the hurdle pmf:
/// mean * (1 + theta (1 + r) - mean).
double hnb_variance_closed_form(const HurdleParams& h);

/// The published variance expression taken literally, reading the unadorned
/// phi-bar as 1 - phi:
///   mean * { phi + (1 - p0) + mean / (1 - phi) * [ r (1 - p0) + phi - p0 ] }
/// Only used to audit against the summation result.
double hnb_variance_as_printed(const HurdleParams& h);

/// Result of walking the NB support outward from its mode.
struct SupportScan {
  std::uint64_t upper = 0;  ///< last y included
  double mass = 0.0;        ///< sum of pmf over [0, upper]
  double first_moment = 0.0;
  double second_moment = 0.0;
  double tail_bound = 0.0;  ///< bound on the mass beyond upper
};

/// Sums the NB pmf over y = 0, 1, ... until the remaining tail mass is bounded
/// by tail_tolerance (and the tail of sum y^2 pmf by tail_tolerance relative
/// to the accumulated second moment), or y reaches 10 (mean + 10 sd),
/// whichever comes first.
SupportScan nb_support_scan(const NbParams& p, double tail_tolerance = 1e-12);

/// Largest y the adaptive truncation would consider for these parameters.
std::uint64_t nb_support_cap(const NbParams& p);

std::uint64_t draw_poisson(double lambda, Engine& engine);
/// Gamma(shape 1/r, scale r theta) mixed Poisson draw.
std::uint64_t draw_nb(const NbParams& p, Engine& engine);
std::uint64_t draw_zero_truncated_nb(const NbParams& p, Engine& engine);
std::uint64_t draw_hnb(const HurdleParams& h, Engine& engine);

Counts sample(const NbParams& p, std::size_t n, std::uint64_t seed);
Counts sample(const HurdleParams& h, std::size_t n, std::uint64_t seed);

}  // namespace citereg
