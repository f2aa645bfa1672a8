#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citereg/datamodel.hpp"
#include "citereg/fit.hpp"

namespace citereg {

enum class CovariateKind { Uniform, Normal, Binary, Categorical };

struct CovariateSpec {
  std::string name;
  CovariateKind kind = CovariateKind::Uniform;
  double min = 0.0;   ///< uniform
  double max = 1.0;   ///< uniform
  double mean = 0.0;  ///< normal
  double sd = 1.0;    ///< normal
  double prob = 0.5;  ///< binary: P(x = 1)
  std::vector<std::string> levels;  ///< categorical
  std::vector<double> probs;        ///< categorical, sums to 1
  std::string base;                 ///< categorical
  bool in_hurdle = true;
};

/// Ground truth for one synthetic data set.
///
/// JSON form:
///
///   {
///     "n": 40000, "family": "HNB", "seed": 7,
///     "covariates": [
///       {"name": "x", "kind": "uniform", "min": -1, "max": 1},
///       {"name": "oa", "kind": "categorical", "levels": ["Closed", "Green"],
///        "probs": [0.7, 0.3], "base": "Closed", "in_hurdle": false}
///     ],
///     "beta": [1.2, 0.4, 0.1], "r": 0.6, "delta": [-2.0, 1.0]
///   }
///
/// beta follows the encoded mean design (intercept, then covariates in
/// order, categoricals expanded to non-base dummies); delta follows the
/// hurdle design built from the covariates with in_hurdle = true.
struct SimDesign {
  std::size_t n = 1000;
  Family family = Family::NegativeBinomial;
  std::vector<CovariateSpec> covariates;
  std::vector<double> beta;
  double r = 1.0;
  std::vector<double> delta;
  std::uint64_t seed = 1;

  static SimDesign from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;
  /// Throws ConfigError describing the first problem found.
  void validate() const;
  EncodingConfig encoding() const;
  std::size_t mean_width() const;
  std::size_t hurdle_width() const;
};

struct SimTruth {
  Family family = Family::NegativeBinomial;
  std::vector<std::string> mean_labels;
  std::vector<double> beta;
  std::optional<double> r;
  std::vector<std::string> hurdle_labels;
  std::vector<double> delta;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t n = 0;

  /// Truth in FittedModel parameter order with r on the natural scale.
  std::vector<double> natural_vector() const;
  nlohmann::ordered_json to_json() const;
};

struct SimulatedData {
  Dataset dataset;
  EncodingConfig config;
  DesignMatrix X;
  DesignMatrix X_h;
  SimTruth truth;
};

/// Draws covariates for every row, then responses, from one engine seeded
/// by (design.seed, stream).
SimulatedData generate(const SimDesign& design, std::uint64_t stream = 0);

/// The shape of the bibliometric application: n = 43190, 30 covariates
/// (access type, discipline and rating dummies, a funding flag, publication
/// age and standardized numeric scores), r = 0.6425.
SimDesign paper_scale_design(Family family = Family::NegativeBinomial, std::uint64_t seed = 2014);

struct ParameterRecovery {
  std::string name;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;      ///< fraction of 95% Wald intervals covering truth
  double within_3se = 0.0;    ///< fraction with |est - truth| <= 3 SE
};

struct ReplicationRecord {
  std::size_t index = 0;
  bool ok = false;
  bool converged = false;
  bool boundary = false;  ///< r estimate hit the Poisson boundary
  std::string error;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  double loglik = 0.0;
};

struct RecoverySummary {
  Family family = Family::NegativeBinomial;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::size_t boundary_hits = 0;
  /// Fraction of successful replications in which every parameter lies
  /// within 3 reported SEs of its truth.
  double all_within_3se = 0.0;
  std::vector<ParameterRecovery> parameters;
  std::vector<ReplicationRecord> records;

  nlohmann::ordered_json to_json(bool include_records = true) const;
};

/// Refits `replications` independent data sets drawn from `design` with the
/// generating family. Fit errors are counted in `failures`.
RecoverySummary recovery_study(const SimDesign& design, std::size_t replications,
                               unsigned threads = 1, const FitOptions& opts = {});

struct RankingStudy {
  std::size_t replications = 0;
  std::size_t failures = 0;
  /// Per replication, family codes sorted by ascending AIC.
  std::vector<std::vector<std::string>> orders;
  /// Fraction of successful replications whose order equals `expected`.
  double fraction_matching = 0.0;
};

/// Fits every family in `families` to each replication and records the AIC
/// order.
RankingStudy aic_ranking_study(const SimDesign& design, const std::vector<Family>& families,
                               const std::vector<Family>& expected, std::size_t replications,
                               unsigned threads = 1, const FitOptions& opts = {});

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace citereg
