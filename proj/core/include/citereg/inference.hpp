#pragma once

#include <span>
#include <string>
#include <vector>

#include "citereg/fit.hpp"

namespace citereg {

/// One row of a Wald coefficient table.
struct CoefficientReport {
  std::string name;
  Equation equation = Equation::Mean;
  double estimate = 0.0;
  double std_err = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string stars;
};

struct IrrReport {
  std::string name;
  double irr = 1.0;
  double irr_std_err = 0.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
};

/// "***" below 0.01, "**" below 0.05, "*" below 0.10, "" otherwise.
std::string significance_stars(double p_value);

/// Two-sided standard normal quantile z such that P(|Z| <= z) = level.
double normal_critical_value(double level);

/// Wald row for a single estimate. A zero standard error gives an infinite
/// |z| and p = 0 (or z = 0, p = 1 when the estimate is also zero).
CoefficientReport wald_row(std::string name, double estimate, double std_err, double level = 0.95,
                           Equation equation = Equation::Mean);

/// Rows in parameter order (mean, r, hurdle); r is reported on the natural
/// scale with its delta-method standard error.
std::vector<CoefficientReport> wald_table(const FittedModel& m, double level = 0.95);

/// exp(estimate) with delta-method SE exp(est) * se; CI endpoints are the
/// exponentiated coefficient endpoints. Names are matched against the mean
/// equation unless prefixed with "zero:" (hurdle equation). Throws
/// ConfigError for an unknown name.
std::vector<IrrReport> irr(const std::vector<CoefficientReport>& report,
                           const std::vector<std::string>& names);
IrrReport irr(const CoefficientReport& row);

/// d phi / d x_j = delta_j phi (1 - phi) at the given hurdle-design row.
double marginal_effect_hurdle(const FittedModel& m, const std::string& covariate,
                              std::span<const double> hurdle_row);

/// d E[Y] / d x_j for the log link of P / NB models: beta_j theta(x).
double marginal_effect_mean(const FittedModel& m, const std::string& covariate,
                            std::span<const double> row);

/// -2 loglik + 2 p with p = num_params().
double aic(const FittedModel& m);

struct RankedModel {
  std::size_t index = 0;  ///< position in the input list
  Family family = Family::Poisson;
  double aic = 0.0;
  double delta = 0.0;  ///< AIC minus the best AIC
};

/// Stable sort by AIC ascending. All models must share n.
std::vector<RankedModel> compare(std::span<const FittedModel> models);

}  // namespace citereg
