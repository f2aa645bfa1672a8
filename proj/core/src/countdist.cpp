#include "citereg/countdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "citereg/errors.hpp"
#include "citereg/specfun.hpp"

namespace citereg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Below this r the gamma mixing distribution is numerically a point mass.
constexpr double kPoissonLimitR = 1e-12;

double log1m_exp(double log_p) {
  // log(1 - exp(log_p)) for log_p < 0
  return log_p > -0.693147180559945 ? std::log(-std::expm1(log_p))
                                    : std::log1p(-std::exp(log_p));
}

}  // namespace

Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

NbParams::NbParams(double theta, double r) : theta_(theta), r_(r) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw DomainError("NbParams: theta must be positive and finite, got " + std::to_string(theta));
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw DomainError("NbParams: r must be positive and finite, got " + std::to_string(r));
  }
}

HurdleParams::HurdleParams(NbParams nb, double phi) : nb_(nb), phi_(phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) {
    throw DomainError("HurdleParams: phi must lie in [0, 1], got " + std::to_string(phi));
  }
}

double poisson_log_pmf(std::uint64_t y, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("poisson_log_pmf: lambda must be nonnegative and finite");
  }
  if (lambda == 0.0) return y == 0 ? 0.0 : kNegInf;
  const double yd = static_cast<double>(y);
  return -lambda + yd * std::log(lambda) - ln_gamma(yd + 1.0);
}

double nb_log_pmf(std::uint64_t y, const NbParams& p) {
  const double r = p.r();
  const double theta = p.theta();
  const double a = 1.0 / r;
  const double yd = static_cast<double>(y);
  return ln_gamma_ratio(a, y) - ln_gamma(yd + 1.0) - (a + yd) * std::log1p(r * theta) +
         yd * (std::log(r) + std::log(theta));
}

double nb_log_zero_prob(const NbParams& p) { return -std::log1p(p.r() * p.theta()) / p.r(); }

double nb_zero_prob(const NbParams& p) { return std::exp(nb_log_zero_prob(p)); }

Moments nb_mean_var(const NbParams& p) {
  return {p.theta(), p.theta() + p.r() * p.theta() * p.theta()};
}

double hnb_log_pmf(std::uint64_t y, const HurdleParams& h) {
  const double phi = h.phi();
  if (y == 0) return phi > 0.0 ? std::log(phi) : kNegInf;
  if (phi >= 1.0) return kNegInf;
  return std::log1p(-phi) - log1m_exp(nb_log_zero_prob(h.nb())) + nb_log_pmf(y, h.nb());
}

std::uint64_t nb_support_cap(const NbParams& p) {
  const Moments m = nb_mean_var(p);
  const double cap = 10.0 * (m.mean + 10.0 * std::sqrt(m.variance));
  const double limit = static_cast<double>(std::numeric_limits<std::uint32_t>::max());
  return static_cast<std::uint64_t>(std::clamp(std::ceil(cap), 1.0, limit));
}

SupportScan nb_support_scan(const NbParams& p, double tail_tolerance) {
  const double a = 1.0 / p.r();
  const double q = p.r() * p.theta() / (1.0 + p.r() * p.theta());
  const std::uint64_t cap = nb_support_cap(p);
  const double mode_real = p.r() < 1.0 ? std::floor(p.theta() * (1.0 - p.r())) : 0.0;
  const std::uint64_t mode = std::min<std::uint64_t>(static_cast<std::uint64_t>(mode_real), cap);

  SupportScan scan;
  const double p_mode = std::exp(nb_log_pmf(mode, p));
  auto add = [&scan](std::uint64_t y, double pmf) {
    const double yd = static_cast<double>(y);
    scan.mass += pmf;
    scan.first_moment += yd * pmf;
    scan.second_moment += yd * yd * pmf;
  };

  // Downward from the mode: p(y-1) = p(y) * y / ((a + y - 1) q).
  double pmf = p_mode;
  for (std::uint64_t y = mode; y > 0; --y) {
    const double yd = static_cast<double>(y);
    pmf *= yd / ((a + yd - 1.0) * q);
    add(y - 1, pmf);
  }

  // Upward: p(y+1) = p(y) (a + y) q / (y + 1).
  add(mode, p_mode);
  pmf = p_mode;
  std::uint64_t y = mode;
  while (true) {
    const double yd = static_cast<double>(y);
    const double ratio = (a + yd) * q / (yd + 1.0);
    // Successive ratios decrease toward q when a >= 1 and increase toward q otherwise.
    const double sup_ratio = a >= 1.0 ? ratio : q;
    if (sup_ratio < 1.0) {
      const double s0 = sup_ratio / (1.0 - sup_ratio);
      const double s1 = s0 / (1.0 - sup_ratio);
      const double s2 = s1 * (1.0 + sup_ratio) / (1.0 - sup_ratio);
      scan.tail_bound = pmf * s0;
      // bound on sum_{k>=1} (y + k)^2 p(y + k), so the variance is covered too
      const double second_tail = pmf * (yd * yd * s0 + 2.0 * yd * s1 + s2);
      if (scan.tail_bound < tail_tolerance &&
          second_tail < tail_tolerance * std::max(1.0, scan.second_moment)) {
        break;
      }
    } else {
      scan.tail_bound = std::numeric_limits<double>::infinity();
    }
    if (y >= cap) break;
    pmf *= ratio;
    ++y;
    add(y, pmf);
  }
  scan.upper = y;
  return scan;
}

Moments hnb_mean_var(const HurdleParams& h) {
  if (h.phi() >= 1.0) return {0.0, 0.0};
  const NbParams& nb = h.nb();
  const double positive_mass = -std::expm1(nb_log_zero_prob(nb));
  const double scale = (1.0 - h.phi()) / positive_mass;
  const double mean = scale * nb.theta();
  const SupportScan scan = nb_support_scan(nb);
  const double second = scale * scan.second_moment;
  return {mean, second - mean * mean};
}

double hnb_variance_closed_form(const HurdleParams& h) {
  if (h.phi() >= 1.0) return 0.0;
  const NbParams& nb = h.nb();
  const double positive_mass = -std::expm1(nb_log_zero_prob(nb));
  const double mean = (1.0 - h.phi()) * nb.theta() / positive_mass;
  return mean * (1.0 + nb.theta() * (1.0 + nb.r()) - mean);
}

double hnb_variance_as_printed(const HurdleParams& h) {
  if (h.phi() >= 1.0) return 0.0;
  const NbParams& nb = h.nb();
  const double phi = h.phi();
  const double p0 = nb_zero_prob(nb);
  const double positive_mass = 1.0 - p0;
  const double mean = (1.0 - phi) * nb.theta() / positive_mass;
  return mean * (phi + positive_mass + mean / (1.0 - phi) * (nb.r() * positive_mass + phi - p0));
}

std::uint64_t draw_poisson(double lambda, Engine& engine) {
  if (!(lambda > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(lambda);
  return dist(engine);
}

std::uint64_t draw_nb(const NbParams& p, Engine& engine) {
  if (p.r() < kPoissonLimitR) return draw_poisson(p.theta(), engine);
  std::gamma_distribution<double> mixing(1.0 / p.r(), p.r() * p.theta());
  return draw_poisson(mixing(engine), engine);
}

std::uint64_t draw_zero_truncated_nb(const NbParams& p, Engine& engine) {
  const double log_p0 = nb_log_zero_prob(p);
  const double p0 = std::exp(log_p0);
  if (p0 < 0.75) {
    while (true) {
      const std::uint64_t y = draw_nb(p, engine);
      if (y > 0) return y;
    }
  }
  // Most of the mass sits at zero: invert the truncated CDF directly.
  const double a = 1.0 / p.r();
  const double q = p.r() * p.theta() / (1.0 + p.r() * p.theta());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double target = unif(engine) * -std::expm1(log_p0);
  const std::uint64_t cap = nb_support_cap(p);
  double pmf = std::exp(nb_log_pmf(1, p));
  double cumulative = pmf;
  std::uint64_t y = 1;
  while (cumulative < target && y < cap) {
    const double yd = static_cast<double>(y);
    pmf *= (a + yd) * q / (yd + 1.0);
    cumulative += pmf;
    ++y;
  }
  return y;
}

std::uint64_t draw_hnb(const HurdleParams& h, Engine& engine) {
  std::bernoulli_distribution zero(h.phi());
  if (zero(engine)) return 0;
  return draw_zero_truncated_nb(h.nb(), engine);
}

Counts sample(const NbParams& p, std::size_t n, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  Counts out(n);
  for (auto& v : out) v = draw_nb(p, engine);
  return out;
}

Counts sample(const HurdleParams& h, std::size_t n, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  Counts out(n);
  for (auto& v : out) v = draw_hnb(h, engine);
  return out;
}

}  // namespace citereg
