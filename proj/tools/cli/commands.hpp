#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "citereg/datamodel.hpp"
#include "citereg/fit.hpp"

namespace citereg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,          ///< I/O, schema or configuration problem
  kExitNotConverged = 2,   ///< statistical non-convergence; reports are still written
};

/// Run configuration document: an encoding config plus run settings.
///
///   {
///     "data": "citations.csv",          // relative to the config file
///     "response": "cites",
///     "predictors": [ ... ],             // see EncodingConfig
///     "hurdle": [ ... ],
///     "families": ["P", "NB", "HNB"],
///     "fit_options": {"max_iterations": 500, "gradient_tolerance": 1e-7,
///                     "step_halving_limit": 30, "hessian_step": 1e-5},
///     "ci_level": 0.95,
///     "level": 0.10,                     // restrict: keep p < level
///     "frequency_max": 100,
///     "irr": ["access=Green"]            // default: categorical and binary terms
///   }
struct RunConfig {
  std::filesystem::path data;
  EncodingConfig encoding;
  std::vector<Family> families;
  FitOptions fit_options;
  std::filesystem::path out_dir = ".";
  double ci_level = 0.95;
  double restrict_level = 0.10;
  unsigned threads = 1;
  std::uint64_t frequency_max = 100;
  std::optional<std::vector<std::string>> irr_names;

  static RunConfig from_json(const nlohmann::json& doc,
                             const std::filesystem::path& base_dir = {});
};

RunConfig load_run_config(const std::filesystem::path& path);

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err);
/// One-shot prune-and-refit: drops every non-intercept column with
/// p >= level, mean and hurdle equations independently.
int cmd_restrict(const RunConfig& config, std::ostream& out, std::ostream& err);

struct SimulateOptions {
  std::filesystem::path design;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::size_t replications = 0;  ///< > 0 runs a recovery study as well
  unsigned threads = 1;
  FitOptions fit_options;
};

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to the subcommands fit, compare, simulate and
/// restrict. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace citereg::cli
