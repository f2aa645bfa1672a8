#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "citereg/countdist.hpp"

namespace citereg {

enum class ColumnKind { CountResponse, Numeric, Categorical, Binary };

/// Applied when the design matrix is assembled, never at ingestion.
enum class Transform {
  None,
  Log,     ///< natural log; values must be strictly positive
  Offset,  ///< value - origin (e.g. publication year - 2014)
};

struct PredictorSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  Transform transform = Transform::None;
  double origin = 0.0;
  /// Categorical only. Declared order fixes dummy column order; when empty,
  /// levels are taken in order of first appearance in the data.
  std::vector<std::string> levels;
  std::string base;
};

/// Declarative description of how a CSV file maps onto the model:
///
///   {
///     "response": "cites",
///     "predictors": [
///       {"name": "access", "kind": "categorical",
///        "levels": ["Closed", "Green", "Gold"], "base": "Closed"},
///       {"name": "year", "kind": "numeric", "transform": "offset", "origin": 2014},
///       {"name": "founded", "kind": "numeric", "transform": "log"},
///       {"name": "funded", "kind": "binary"}
///     ],
///     "hurdle": ["access", "year"]
///   }
///
/// "hurdle" is optional and defaults to every predictor.
struct EncodingConfig {
  std::string response;
  std::vector<PredictorSpec> predictors;
  std::optional<std::vector<std::string>> hurdle;

  static EncodingConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;

  const PredictorSpec& predictor(const std::string& name) const;
  std::vector<std::string> mean_predictors() const;
  std::vector<std::string> hurdle_predictors() const;
};

std::string to_string(ColumnKind kind);
std::string to_string(Transform transform);

/// Raw (untransformed) predictor values. Categorical columns keep their
/// labels; numeric and binary columns keep parsed doubles.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<double> values;
  std::vector<std::string> labels;
};

struct Dataset {
  std::string response_name;
  Counts y;
  std::vector<Column> columns;

  std::size_t n() const noexcept { return y.size(); }
  const Column& column(const std::string& name) const;
};

/// n x k design with a leading intercept column. Dummy columns are labelled
/// "<var>=<level>"; the omitted base level of each categorical is recorded
/// in base_levels.
struct DesignMatrix {
  static constexpr const char* kIntercept = "(Intercept)";

  Eigen::MatrixXd X;
  std::vector<std::string> labels;
  /// Source variable per column ("" for the intercept).
  std::vector<std::string> sources;
  std::map<std::string, std::string> base_levels;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(X.cols()); }
  std::optional<std::size_t> index_of(const std::string& label) const;

  /// Keeps the intercept plus the named columns, preserving column order.
  DesignMatrix select(const std::vector<std::string>& keep) const;
  /// Rows whose mask entry is true, in order.
  DesignMatrix subset_rows(const std::vector<bool>& mask) const;

  static DesignMatrix intercept_only(std::size_t n);
  /// Wraps an existing matrix; labels default to (Intercept), x1, x2, ...
  static DesignMatrix from_matrix(Eigen::MatrixXd X, std::vector<std::string> labels = {});
};

/// Encodes the named predictors (in config declaration order) into a design.
DesignMatrix encode(const Dataset& ds, const EncodingConfig& config,
                    const std::vector<std::string>& predictors);
DesignMatrix encode_mean(const Dataset& ds, const EncodingConfig& config);
DesignMatrix encode_hurdle(const Dataset& ds, const EncodingConfig& config);

Dataset read_csv(const std::filesystem::path& path, const EncodingConfig& config);
Dataset parse_csv(std::istream& in, const EncodingConfig& config);

/// Writes the response followed by every column. Numbers use the shortest
/// round-trip representation, so the bytes are a pure function of the values.
void write_csv(std::ostream& out, const Dataset& ds);

}  // namespace citereg
