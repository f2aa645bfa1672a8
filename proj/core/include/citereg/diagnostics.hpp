#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "citereg/fit.hpp"

namespace citereg {

struct ResidualSet {
  Family family = Family::Poisson;
  std::vector<double> y;
  std::vector<double> mu;
  std::vector<double> sigma2;
  std::vector<double> pearson;
  std::vector<double> deviance;  ///< NB only; empty otherwise

  double pearson_statistic = 0.0;     ///< sum pearson_i^2
  double deviance_signed_sum = 0.0;   ///< sum d_i
  double deviance_squared_sum = 0.0;  ///< sum d_i^2, the usual deviance
  double df = 0.0;                    ///< n - number of free parameters

  bool has_deviance() const noexcept { return !deviance.empty(); }
};

/// Squared deviance contribution of one NB observation:
///   y > 0: 2 [ y log(y / theta) - (y + 1/r) log((1 + r y) / (1 + r theta)) ]
///   y = 0: (2 / r) log(1 + r theta)
double nb_deviance_squared(std::uint64_t y, double theta, double r);
/// sign(y - theta) * sqrt(nb_deviance_squared).
double nb_deviance_residual(std::uint64_t y, double theta, double r);

/// Sum over fixed-size chunks reduced in index order. The result does not
/// depend on `threads`.
double deterministic_sum(std::span<const double> values, unsigned threads = 1);

/// Pearson residuals under the model's own mean and variance (HNB variance by
/// summation over the support). NB fits also get deviance residuals.
ResidualSet pearson(const FittedModel& m, const DesignMatrix& X, const DesignMatrix& X_h,
                    CountSpan y, unsigned threads = 1);
ResidualSet pearson(const FittedModel& m, const DesignMatrix& X, CountSpan y, unsigned threads = 1);

/// NB only; throws UnsupportedFamilyError otherwise.
ResidualSet deviance_residuals(const FittedModel& m, const DesignMatrix& X, CountSpan y,
                               unsigned threads = 1);

struct FrequencyTable {
  /// Index v = 0..y_max; the final entry is the overflow bucket (> y_max).
  std::vector<std::size_t> empirical;
  std::vector<double> fitted;

  std::size_t y_max() const noexcept { return empirical.size() - 2; }
};

/// Empirical counts and fitted expected counts sum_i P(Y_i = v).
FrequencyTable frequency_table(CountSpan y, const FittedModel& m, const DesignMatrix& X,
                               const DesignMatrix& X_h, std::uint64_t y_max);
/// Intercept-only models.
FrequencyTable frequency_table(CountSpan y, const FittedModel& m, std::uint64_t y_max);

nlohmann::ordered_json residual_summary_json(const ResidualSet& rs);

/// index,y,mu,sigma2,pearson[,deviance]
void write_residuals_csv(std::ostream& out, const ResidualSet& rs);
/// value,empirical,fitted with a final "overflow" row.
void write_frequency_csv(std::ostream& out, const FrequencyTable& table);
/// Sorted deviance residuals with Blom normal scores, for probability plots.
void write_deviance_distribution_csv(std::ostream& out, const ResidualSet& rs);

}  // namespace citereg
