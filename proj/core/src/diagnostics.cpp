#include "citereg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "citereg/countdist.hpp"
#include "citereg/csv.hpp"
#include "citereg/errors.hpp"

namespace citereg {

namespace {

constexpr std::size_t kChunk = 4096;

std::string num(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

double round_sig(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

template <typename Fn>
void parallel_rows(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2 * kChunk) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

double nb_deviance_squared(std::uint64_t y, double theta, double r) {
  const double a = 1.0 / r;
  if (y == 0) return 2.0 * a * std::log1p(r * theta);
  const double yd = static_cast<double>(y);
  const double d2 = 2.0 * (yd * std::log(yd / theta) -
                           (yd + a) * (std::log1p(r * yd) - std::log1p(r * theta)));
  return std::max(d2, 0.0);
}

double nb_deviance_residual(std::uint64_t y, double theta, double r) {
  const double diff = static_cast<double>(y) - theta;
  if (diff == 0.0) return 0.0;
  return std::copysign(std::sqrt(nb_deviance_squared(y, theta, r)), diff);
}

double deterministic_sum(std::span<const double> values, unsigned threads) {
  const std::size_t chunks = (values.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  auto reduce_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(values.size(), begin + kChunk);
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += values[i];
    partial[c] = s;
  };
  threads = std::max(1u, threads);
  if (threads == 1 || chunks < 2) {
    for (std::size_t c = 0; c < chunks; ++c) reduce_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < chunks; c += threads) reduce_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

ResidualSet pearson(const FittedModel& m, const DesignMatrix& X, const DesignMatrix& X_h,
                    CountSpan y, unsigned threads) {
  if (X.rows() != y.size() || X.cols() != m.k()) {
    throw DimensionError("pearson: design does not match the model or response");
  }
  if (m.has_hurdle() && (X_h.rows() != y.size() || X_h.cols() != m.k_hurdle())) {
    throw DimensionError("pearson: hurdle design does not match the model or response");
  }
  const std::size_t n = y.size();
  ResidualSet rs;
  rs.family = m.family;
  rs.y.resize(n);
  rs.mu.resize(n);
  rs.sigma2.resize(n);
  rs.pearson.resize(n);
  const bool nb = m.family == Family::NegativeBinomial;
  if (nb) rs.deviance.resize(n);

  const Eigen::VectorXd theta = link_mean(X.X, m.beta());
  const Eigen::VectorXd phi = m.has_hurdle() ? link_hurdle(X_h.X, m.delta()) : Eigen::VectorXd();
  const double r = m.has_dispersion() ? m.r() : 0.0;

  parallel_rows(n, threads, [&](std::size_t i) {
    const auto e = static_cast<Eigen::Index>(i);
    Moments mom;
    switch (m.family) {
      case Family::Poisson: mom = {theta[e], theta[e]}; break;
      case Family::NegativeBinomial: mom = nb_mean_var(NbParams(theta[e], r)); break;
      case Family::HurdleNegativeBinomial:
        mom = hnb_mean_var(HurdleParams(NbParams(theta[e], r), phi[e]));
        break;
    }
    rs.y[i] = static_cast<double>(y[i]);
    rs.mu[i] = mom.mean;
    rs.sigma2[i] = mom.variance;
    rs.pearson[i] = mom.variance > 0.0 ? (rs.y[i] - mom.mean) / std::sqrt(mom.variance) : 0.0;
    if (nb) rs.deviance[i] = nb_deviance_residual(y[i], theta[e], r);
  });

  std::vector<double> squares(n);
  for (std::size_t i = 0; i < n; ++i) squares[i] = rs.pearson[i] * rs.pearson[i];
  rs.pearson_statistic = deterministic_sum(squares, threads);
  if (nb) {
    rs.deviance_signed_sum = deterministic_sum(rs.deviance, threads);
    for (std::size_t i = 0; i < n; ++i) squares[i] = rs.deviance[i] * rs.deviance[i];
    rs.deviance_squared_sum = deterministic_sum(squares, threads);
  }
  rs.df = static_cast<double>(n) - static_cast<double>(m.num_params());
  if (!(rs.df > 0.0)) throw StructuralError("pearson: no residual degrees of freedom");
  return rs;
}

ResidualSet pearson(const FittedModel& m, const DesignMatrix& X, CountSpan y, unsigned threads) {
  if (m.has_hurdle()) throw DimensionError("pearson: HNB models need the hurdle design");
  return pearson(m, X, X, y, threads);
}

ResidualSet deviance_residuals(const FittedModel& m, const DesignMatrix& X, CountSpan y,
                               unsigned threads) {
  if (m.family != Family::NegativeBinomial) {
    throw UnsupportedFamilyError(std::string("deviance residuals are defined for NB fits only, not ") +
                                 std::string(family_code(m.family)));
  }
  return pearson(m, X, X, y, threads);
}

FrequencyTable frequency_table(CountSpan y, const FittedModel& m, const DesignMatrix& X,
                               const DesignMatrix& X_h, std::uint64_t y_max) {
  const std::size_t buckets = static_cast<std::size_t>(y_max) + 2;
  FrequencyTable table;
  table.empirical.assign(buckets, 0);
  table.fitted.assign(buckets, 0.0);
  for (auto v : y) ++table.empirical[std::min<std::size_t>(v, buckets - 1)];

  const Eigen::VectorXd theta = link_mean(X.X, m.beta());
  const Eigen::VectorXd phi = m.has_hurdle() ? link_hurdle(X_h.X, m.delta()) : Eigen::VectorXd();
  const double r = m.has_dispersion() ? m.r() : 0.0;
  double covered = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    // log pmf by the ratio recurrence p(v+1)/p(v)
    const double t = theta[i];
    double log_p0;
    double log_q = 0.0;
    double a = 0.0;
    if (m.family == Family::Poisson) {
      log_p0 = -t;
    } else {
      const NbParams nb(t, r);
      log_p0 = nb_log_zero_prob(nb);
      a = 1.0 / r;
      log_q = std::log(r * t) - std::log1p(r * t);
    }
    double scale_positive = 1.0;  // hurdle rescaling for v > 0
    if (m.has_hurdle()) {
      scale_positive = (1.0 - phi[i]) / -std::expm1(log_p0);
    }
    double log_p = log_p0;
    for (std::uint64_t v = 0; v <= y_max; ++v) {
      if (v > 0) {
        const double vd = static_cast<double>(v);
        log_p += m.family == Family::Poisson ? std::log(t) - std::log(vd)
                                             : std::log(a + vd - 1.0) + log_q - std::log(vd);
      }
      double p = std::exp(log_p);
      if (m.has_hurdle()) p = v == 0 ? phi[i] : scale_positive * p;
      table.fitted[v] += p;
      covered += p;
    }
  }
  table.fitted.back() = std::max(0.0, static_cast<double>(y.size()) - covered);
  return table;
}

FrequencyTable frequency_table(CountSpan y, const FittedModel& m, std::uint64_t y_max) {
  const DesignMatrix X = DesignMatrix::intercept_only(y.size());
  return frequency_table(y, m, X, X, y_max);
}

nlohmann::ordered_json residual_summary_json(const ResidualSet& rs) {
  nlohmann::ordered_json j;
  j["family"] = std::string(family_code(rs.family));
  j["n"] = rs.y.size();
  j["df"] = rs.df;
  j["pearson_statistic"] = round_sig(rs.pearson_statistic, 6);
  j["pearson_over_df"] = round_sig(rs.pearson_statistic / rs.df, 6);
  if (rs.has_deviance()) {
    j["deviance_signed_sum"] = round_sig(rs.deviance_signed_sum, 6);
    j["deviance_signed_over_df"] = round_sig(rs.deviance_signed_sum / rs.df, 6);
    j["deviance_squared_sum"] = round_sig(rs.deviance_squared_sum, 6);
    j["deviance_squared_over_df"] = round_sig(rs.deviance_squared_sum / rs.df, 6);
  }
  return j;
}

void write_residuals_csv(std::ostream& out, const ResidualSet& rs) {
  csv::Row header{"index", "y", "mu", "sigma2", "pearson"};
  if (rs.has_deviance()) header.push_back("deviance");
  csv::write_record(out, header);
  for (std::size_t i = 0; i < rs.y.size(); ++i) {
    csv::Row row{std::to_string(i + 1), num(rs.y[i]), num(rs.mu[i]), num(rs.sigma2[i]),
                 num(rs.pearson[i])};
    if (rs.has_deviance()) row.push_back(num(rs.deviance[i]));
    csv::write_record(out, row);
  }
}

void write_frequency_csv(std::ostream& out, const FrequencyTable& table) {
  csv::write_record(out, {"value", "empirical", "fitted"});
  for (std::size_t v = 0; v < table.empirical.size(); ++v) {
    const bool overflow = v + 1 == table.empirical.size();
    csv::write_record(out, {overflow ? std::string("overflow") : std::to_string(v),
                            std::to_string(table.empirical[v]), num(table.fitted[v])});
  }
}

void write_deviance_distribution_csv(std::ostream& out, const ResidualSet& rs) {
  if (!rs.has_deviance()) throw UnsupportedFamilyError("no deviance residuals to write");
  std::vector<double> sorted = rs.deviance;
  std::sort(sorted.begin(), sorted.end());
  const boost::math::normal_distribution<double> standard;
  const double n = static_cast<double>(sorted.size());
  csv::write_record(out, {"rank", "deviance", "normal_score"});
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double prob = (static_cast<double>(i + 1) - 0.375) / (n + 0.25);
    csv::write_record(out, {std::to_string(i + 1), num(sorted[i]),
                            num(boost::math::quantile(standard, prob))});
  }
}

}  // namespace citereg
