#pragma once

#include <json.hpp>
#include <vector>

#include "citereg/diagnostics.hpp"
#include "citereg/fit.hpp"
#include "citereg/inference.hpp"

namespace citereg::cli {

inline constexpr int kSchemaVersion = 1;

/// Rounds to 4 decimals, the precision of published coefficient tables.
double round4(double v);
/// Rounds to 6 significant digits for machine-oriented fields.
double round6(double v);

nlohmann::ordered_json coefficient_json(const CoefficientReport& row);
nlohmann::ordered_json irr_json(const IrrReport& row);

/// Model report. HNB fits get separate "positives" (count part) and "zeros"
/// (hurdle part) blocks; P and NB fits get a single "coefficients" list.
nlohmann::ordered_json model_report(const FittedModel& m, const std::vector<std::string>& irr_names,
                                    const ResidualSet* residuals, double ci_level);

}  // namespace citereg::cli
