#include "cli/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace citereg::cli {

double round4(double v) {
  if (!std::isfinite(v)) return v;
  const double r = std::round(v * 1e4) / 1e4;
  return r == 0.0 ? 0.0 : r;  // no "-0"
}

double round6(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::strtod(buf, nullptr);
}

namespace {

nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json coefficient_json(const CoefficientReport& row) {
  nlohmann::ordered_json j;
  j["name"] = row.name;
  j["estimate"] = round4(row.estimate);
  j["std_err"] = round4(row.std_err);
  j["z"] = finite_or_null(round6(row.z));
  j["p_value"] = round6(row.p_value);
  j["ci_low"] = round4(row.ci_low);
  j["ci_high"] = round4(row.ci_high);
  j["stars"] = row.stars;
  return j;
}

nlohmann::ordered_json irr_json(const IrrReport& row) {
  nlohmann::ordered_json j;
  j["name"] = row.name;
  j["irr"] = round4(row.irr);
  j["std_err"] = round4(row.irr_std_err);
  j["ci_low"] = round4(row.ci_low);
  j["ci_high"] = round4(row.ci_high);
  return j;
}

nlohmann::ordered_json model_report(const FittedModel& m, const std::vector<std::string>& irr_names,
                                    const ResidualSet* residuals, double ci_level) {
  const auto table = wald_table(m, ci_level);
  auto rows_for = [&](Equation eq) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : table) {
      if (row.equation == eq) arr.push_back(coefficient_json(row));
    }
    return arr;
  };
  auto irr_rows = nlohmann::ordered_json::array();
  for (const auto& row : irr(table, irr_names)) irr_rows.push_back(irr_json(row));

  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["family"] = std::string(family_code(m.family));
  j["n"] = m.n;
  j["parameters"] = m.num_params();
  j["converged"] = m.converged;
  j["iterations"] = m.iterations;
  j["gradient_norm"] = round6(m.gradient_norm);
  j["warnings"] = m.warnings;
  j["loglik"] = round6(m.loglik);
  j["aic"] = std::llround(aic(m));
  j["ci_level"] = ci_level;

  nlohmann::ordered_json dispersion;
  for (const auto& row : table) {
    if (row.equation == Equation::Dispersion) {
      dispersion["r"] = round4(row.estimate);
      dispersion["std_err"] = round4(row.std_err);
      dispersion["stars"] = row.stars;
    }
  }

  if (m.has_hurdle()) {
    nlohmann::ordered_json positives;
    positives["coefficients"] = rows_for(Equation::Mean);
    positives["dispersion"] = dispersion;
    positives["irr"] = irr_rows;
    positives["loglik"] = round6(m.loglik_truncated);
    nlohmann::ordered_json zeros;
    zeros["coefficients"] = rows_for(Equation::Hurdle);
    zeros["loglik"] = round6(m.loglik_binary);
    j["positives"] = std::move(positives);
    j["zeros"] = std::move(zeros);
  } else {
    j["coefficients"] = rows_for(Equation::Mean);
    if (m.has_dispersion()) j["dispersion"] = dispersion;
    j["irr"] = irr_rows;
  }
  if (residuals) j["residuals"] = residual_summary_json(*residuals);
  return j;
}

}  // namespace citereg::cli
