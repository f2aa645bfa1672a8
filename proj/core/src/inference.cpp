#include "citereg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "citereg/errors.hpp"

namespace citereg {

std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.10) return "*";
  return "";
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError("confidence level must lie in (0, 1), got " + std::to_string(level));
  }
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 + 0.5 * level);
}

CoefficientReport wald_row(std::string name, double estimate, double std_err, double level,
                           Equation equation) {
  CoefficientReport row;
  row.name = std::move(name);
  row.equation = equation;
  row.estimate = estimate;
  row.std_err = std_err;
  if (std_err > 0.0) {
    row.z = estimate / std_err;
    row.p_value = std::erfc(std::abs(row.z) / std::sqrt(2.0));
  } else if (estimate != 0.0) {
    row.z = std::copysign(std::numeric_limits<double>::infinity(), estimate);
    row.p_value = 0.0;
  } else {
    row.z = 0.0;
    row.p_value = 1.0;
  }
  const double half_width = normal_critical_value(level) * std_err;
  row.ci_low = estimate - half_width;
  row.ci_high = estimate + half_width;
  row.stars = significance_stars(row.p_value);
  return row;
}

std::vector<CoefficientReport> wald_table(const FittedModel& m, double level) {
  if (m.covariance_natural.rows() != static_cast<Eigen::Index>(m.num_params())) {
    throw StructuralError("wald_table: model has no covariance matrix");
  }
  const Eigen::VectorXd est = m.natural_estimates();
  const Eigen::VectorXd se = m.natural_std_errors();
  const auto params = m.parameters();
  std::vector<CoefficientReport> rows;
  rows.reserve(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    rows.push_back(wald_row(params[j].name, est[e], se[e], level, params[j].equation));
  }
  return rows;
}

IrrReport irr(const CoefficientReport& row) {
  IrrReport out;
  out.name = row.name;
  out.irr = std::exp(row.estimate);
  out.irr_std_err = out.irr * row.std_err;
  out.ci_low = std::exp(row.ci_low);
  out.ci_high = std::exp(row.ci_high);
  return out;
}

std::vector<IrrReport> irr(const std::vector<CoefficientReport>& report,
                           const std::vector<std::string>& names) {
  static const std::string kZeroPrefix = "zero:";
  std::vector<IrrReport> out;
  for (const auto& requested : names) {
    Equation equation = Equation::Mean;
    std::string name = requested;
    if (name.rfind(kZeroPrefix, 0) == 0) {
      equation = Equation::Hurdle;
      name = name.substr(kZeroPrefix.size());
    }
    auto it = std::find_if(report.begin(), report.end(), [&](const CoefficientReport& r) {
      return r.name == name && r.equation == equation;
    });
    if (it == report.end()) throw ConfigError("irr: no coefficient named '" + requested + "'");
    out.push_back(irr(*it));
    out.back().name = requested;
  }
  return out;
}

double marginal_effect_hurdle(const FittedModel& m, const std::string& covariate,
                              std::span<const double> hurdle_row) {
  if (!m.has_hurdle()) throw UnsupportedFamilyError("marginal_effect_hurdle: model has no hurdle");
  const auto it = std::find(m.hurdle_labels.begin(), m.hurdle_labels.end(), covariate);
  if (it == m.hurdle_labels.end()) {
    throw ConfigError("marginal_effect_hurdle: '" + covariate + "' is not in the hurdle equation");
  }
  if (hurdle_row.size() != m.k_hurdle()) {
    throw DimensionError("marginal_effect_hurdle: row length differs from hurdle design width");
  }
  const Eigen::VectorXd delta = m.delta();
  const Eigen::Map<const Eigen::VectorXd> x(hurdle_row.data(), delta.size());
  const double eta = std::clamp(x.dot(delta), -kLinearPredictorBound, kLinearPredictorBound);
  const double phi = 1.0 / (1.0 + std::exp(-eta));
  return delta[it - m.hurdle_labels.begin()] * phi * (1.0 - phi);
}

double marginal_effect_mean(const FittedModel& m, const std::string& covariate,
                            std::span<const double> row) {
  const auto it = std::find(m.mean_labels.begin(), m.mean_labels.end(), covariate);
  if (it == m.mean_labels.end()) {
    throw ConfigError("marginal_effect_mean: '" + covariate + "' is not in the mean equation");
  }
  if (row.size() != m.k()) {
    throw DimensionError("marginal_effect_mean: row length differs from design width");
  }
  const Eigen::VectorXd beta = m.beta();
  const Eigen::Map<const Eigen::VectorXd> x(row.data(), beta.size());
  const double eta = std::clamp(x.dot(beta), -kLinearPredictorBound, kLinearPredictorBound);
  return beta[it - m.mean_labels.begin()] * std::exp(eta);
}

double aic(const FittedModel& m) {
  return -2.0 * m.loglik + 2.0 * static_cast<double>(m.num_params());
}

std::vector<RankedModel> compare(std::span<const FittedModel> models) {
  std::vector<RankedModel> ranking;
  if (models.empty()) return ranking;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].n != models[0].n) {
      throw DimensionError("compare: models were fit on different sample sizes");
    }
    ranking.push_back({i, models[i].family, aic(models[i]), 0.0});
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const RankedModel& a, const RankedModel& b) { return a.aic < b.aic; });
  for (auto& r : ranking) r.delta = r.aic - ranking.front().aic;
  return ranking;
}

}  // namespace citereg
