#include "citereg/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "citereg/csv.hpp"
#include "citereg/errors.hpp"

namespace citereg {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ColumnKind parse_kind(const std::string& s) {
  if (s == "numeric") return ColumnKind::Numeric;
  if (s == "categorical") return ColumnKind::Categorical;
  if (s == "binary") return ColumnKind::Binary;
  throw ConfigError("unknown predictor kind '" + s + "' (expected numeric, categorical or binary)");
}

Transform parse_transform(const std::string& s) {
  if (s == "none") return Transform::None;
  if (s == "log" || s == "natural-log") return Transform::Log;
  if (s == "offset" || s == "subtract-origin") return Transform::Offset;
  throw ConfigError("unknown transform '" + s + "' (expected none, log or offset)");
}

std::string row_col(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::CountResponse: return "count-response";
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Binary: return "binary";
  }
  return "unknown";
}

std::string to_string(Transform transform) {
  switch (transform) {
    case Transform::None: return "none";
    case Transform::Log: return "log";
    case Transform::Offset: return "offset";
  }
  return "unknown";
}

EncodingConfig EncodingConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("encoding config must be a JSON object");
  EncodingConfig config;
  try {
    if (!doc.contains("response")) throw ConfigError("encoding config has no \"response\"");
    config.response = doc.at("response").get<std::string>();
    std::set<std::string> seen;
    for (const auto& item : doc.value("predictors", nlohmann::json::array())) {
      PredictorSpec spec;
      spec.name = item.at("name").get<std::string>();
      if (spec.name == config.response) {
        throw ConfigError("predictor '" + spec.name + "' is also the response");
      }
      if (!seen.insert(spec.name).second) {
        throw ConfigError("predictor '" + spec.name + "' declared twice");
      }
      spec.kind = parse_kind(item.value("kind", std::string("numeric")));
      spec.transform = parse_transform(item.value("transform", std::string("none")));
      spec.origin = item.value("origin", 0.0);
      if (spec.kind == ColumnKind::Categorical) {
        spec.levels = item.value("levels", std::vector<std::string>{});
        if (!item.contains("base")) {
          throw ConfigError("categorical predictor '" + spec.name + "' needs a base level");
        }
        spec.base = item.at("base").get<std::string>();
        if (!spec.levels.empty() &&
            std::find(spec.levels.begin(), spec.levels.end(), spec.base) == spec.levels.end()) {
          throw ConfigError("base level '" + spec.base + "' of '" + spec.name +
                            "' is not among its declared levels");
        }
        if (spec.transform != Transform::None) {
          throw ConfigError("categorical predictor '" + spec.name + "' cannot be transformed");
        }
      }
      config.predictors.push_back(std::move(spec));
    }
    if (doc.contains("hurdle")) {
      auto names = doc.at("hurdle").get<std::vector<std::string>>();
      for (const auto& name : names) {
        if (!seen.count(name)) {
          throw ConfigError("hurdle predictor '" + name + "' is not a declared predictor");
        }
      }
      config.hurdle = std::move(names);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed encoding config: ") + e.what());
  }
  return config;
}

nlohmann::ordered_json EncodingConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["response"] = response;
  auto preds = nlohmann::ordered_json::array();
  for (const auto& p : predictors) {
    nlohmann::ordered_json item;
    item["name"] = p.name;
    item["kind"] = to_string(p.kind);
    if (p.transform != Transform::None) item["transform"] = to_string(p.transform);
    if (p.transform == Transform::Offset) item["origin"] = p.origin;
    if (p.kind == ColumnKind::Categorical) {
      item["levels"] = p.levels;
      item["base"] = p.base;
    }
    preds.push_back(std::move(item));
  }
  doc["predictors"] = std::move(preds);
  if (hurdle) doc["hurdle"] = *hurdle;
  return doc;
}

const PredictorSpec& EncodingConfig::predictor(const std::string& name) const {
  for (const auto& p : predictors) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown predictor '" + name + "'");
}

std::vector<std::string> EncodingConfig::mean_predictors() const {
  std::vector<std::string> names;
  for (const auto& p : predictors) names.push_back(p.name);
  return names;
}

std::vector<std::string> EncodingConfig::hurdle_predictors() const {
  return hurdle ? *hurdle : mean_predictors();
}

const Column& Dataset::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw ConfigError("dataset has no column '" + name + "'");
}

std::optional<std::size_t> DesignMatrix::index_of(const std::string& label) const {
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == label) return j;
  }
  return std::nullopt;
}

DesignMatrix DesignMatrix::select(const std::vector<std::string>& keep) const {
  const std::set<std::string> wanted(keep.begin(), keep.end());
  for (const auto& name : keep) {
    if (!index_of(name)) throw ConfigError("design has no column '" + name + "'");
  }
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == kIntercept || wanted.count(labels[j])) cols.push_back(static_cast<Eigen::Index>(j));
  }
  DesignMatrix out;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.X.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
    out.labels.push_back(labels[static_cast<std::size_t>(cols[c])]);
    out.sources.push_back(sources[static_cast<std::size_t>(cols[c])]);
  }
  for (const auto& [var, level] : base_levels) {
    if (std::find(out.sources.begin(), out.sources.end(), var) != out.sources.end()) {
      out.base_levels.emplace(var, level);
    }
  }
  return out;
}

DesignMatrix DesignMatrix::subset_rows(const std::vector<bool>& mask) const {
  if (mask.size() != rows()) throw DimensionError("subset_rows: mask length differs from row count");
  const auto kept = static_cast<Eigen::Index>(std::count(mask.begin(), mask.end(), true));
  DesignMatrix out = *this;
  out.X.resize(kept, X.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) out.X.row(r++) = X.row(i);
  }
  return out;
}

DesignMatrix DesignMatrix::intercept_only(std::size_t n) {
  DesignMatrix out;
  out.X = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  out.labels = {kIntercept};
  out.sources = {""};
  return out;
}

DesignMatrix DesignMatrix::from_matrix(Eigen::MatrixXd X, std::vector<std::string> labels) {
  const auto k = static_cast<std::size_t>(X.cols());
  if (labels.empty()) {
    labels.push_back(kIntercept);
    for (std::size_t j = 1; j < k; ++j) labels.push_back("x" + std::to_string(j));
  }
  if (labels.size() != k) throw DimensionError("from_matrix: label count differs from column count");
  DesignMatrix out;
  out.X = std::move(X);
  out.sources.reserve(k);
  for (const auto& l : labels) out.sources.push_back(l == kIntercept ? "" : l);
  out.labels = std::move(labels);
  return out;
}

DesignMatrix encode(const Dataset& ds, const EncodingConfig& config,
                    const std::vector<std::string>& predictors) {
  const std::set<std::string> wanted(predictors.begin(), predictors.end());
  for (const auto& name : predictors) config.predictor(name);

  const std::size_t n = ds.n();
  std::vector<std::vector<double>> blocks;
  DesignMatrix out;
  out.labels.push_back(DesignMatrix::kIntercept);
  out.sources.push_back("");
  blocks.emplace_back(n, 1.0);

  for (const auto& spec : config.predictors) {
    if (!wanted.count(spec.name)) continue;
    const Column& col = ds.column(spec.name);
    if (spec.kind == ColumnKind::Categorical) {
      std::vector<std::string> levels = spec.levels;
      if (levels.empty()) {
        for (const auto& label : col.labels) {
          if (std::find(levels.begin(), levels.end(), label) == levels.end()) levels.push_back(label);
        }
      }
      if (std::find(col.labels.begin(), col.labels.end(), spec.base) == col.labels.end()) {
        throw ConfigError("base level '" + spec.base + "' of '" + spec.name +
                          "' does not occur in the data");
      }
      out.base_levels.emplace(spec.name, spec.base);
      for (const auto& level : levels) {
        if (level == spec.base) continue;
        std::vector<double> dummy(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) dummy[i] = col.labels[i] == level ? 1.0 : 0.0;
        blocks.push_back(std::move(dummy));
        out.labels.push_back(spec.name + "=" + level);
        out.sources.push_back(spec.name);
      }
      continue;
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = col.values[i];
      switch (spec.transform) {
        case Transform::None: values[i] = v; break;
        case Transform::Offset: values[i] = v - spec.origin; break;
        case Transform::Log:
          if (!(v > 0.0)) {
            throw ValidationError("log transform needs a positive value at " +
                                      row_col(i + 1, spec.name) + ", got " + format_number(v),
                                  i + 1, spec.name);
          }
          values[i] = std::log(v);
          break;
      }
    }
    blocks.push_back(std::move(values));
    out.labels.push_back(spec.transform == Transform::Log ? "log(" + spec.name + ")" : spec.name);
    out.sources.push_back(spec.name);
  }

  out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    out.X.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(blocks[j].data(), static_cast<Eigen::Index>(n));
  }
  return out;
}

DesignMatrix encode_mean(const Dataset& ds, const EncodingConfig& config) {
  return encode(ds, config, config.mean_predictors());
}

DesignMatrix encode_hurdle(const Dataset& ds, const EncodingConfig& config) {
  return encode(ds, config, config.hurdle_predictors());
}

Dataset parse_csv(std::istream& in, const EncodingConfig& config) {
  csv::Row header;
  if (!csv::read_record(in, header) || (header.size() == 1 && trim(header[0]).empty())) {
    throw ParseError("CSV input is empty", 0, "");
  }
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < header.size(); ++j) position.emplace(trim(header[j]), j);

  auto locate = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw ConfigError("missing column '" + name + "' in CSV header");
    return it->second;
  };
  const std::size_t response_pos = locate(config.response);
  std::vector<std::size_t> predictor_pos;
  for (const auto& spec : config.predictors) predictor_pos.push_back(locate(spec.name));

  Dataset ds;
  ds.response_name = config.response;
  for (const auto& spec : config.predictors) {
    Column c;
    c.name = spec.name;
    c.kind = spec.kind;
    ds.columns.push_back(std::move(c));
  }

  csv::Row row;
  std::size_t row_number = 0;
  while (csv::read_record(in, row)) {
    if (row.size() == 1 && trim(row[0]).empty()) continue;  // blank line
    ++row_number;
    if (row.size() != header.size()) {
      throw ParseError("row " + std::to_string(row_number) + " has " + std::to_string(row.size()) +
                           " fields, header has " + std::to_string(header.size()),
                       row_number, "");
    }
    auto cell = [&](std::size_t pos, const std::string& name) -> const std::string& {
      if (trim(row[pos]).empty()) {
        throw ParseError("empty cell at " + row_col(row_number, name), row_number, name);
      }
      return row[pos];
    };

    const std::string& raw_y = cell(response_pos, config.response);
    const auto y = parse_double(raw_y);
    if (!y || *y != std::floor(*y)) {
      throw ParseError("cannot parse '" + raw_y + "' as a count at " +
                           row_col(row_number, config.response),
                       row_number, config.response);
    }
    if (*y < 0.0) {
      throw ValidationError("negative count " + raw_y + " at " + row_col(row_number, config.response),
                            row_number, config.response);
    }
    ds.y.push_back(static_cast<std::uint64_t>(*y));

    for (std::size_t p = 0; p < config.predictors.size(); ++p) {
      const PredictorSpec& spec = config.predictors[p];
      Column& col = ds.columns[p];
      const std::string& raw = cell(predictor_pos[p], spec.name);
      switch (spec.kind) {
        case ColumnKind::Categorical: {
          std::string label = trim(raw);
          if (!spec.levels.empty() &&
              std::find(spec.levels.begin(), spec.levels.end(), label) == spec.levels.end()) {
            throw ValidationError("undeclared level '" + label + "' at " + row_col(row_number, spec.name),
                                  row_number, spec.name);
          }
          col.labels.push_back(std::move(label));
          break;
        }
        case ColumnKind::Binary: {
          const std::string s = trim(raw);
          double v;
          if (s == "1" || s == "true" || s == "TRUE") {
            v = 1.0;
          } else if (s == "0" || s == "false" || s == "FALSE") {
            v = 0.0;
          } else {
            throw ParseError("cannot parse '" + raw + "' as binary at " + row_col(row_number, spec.name),
                             row_number, spec.name);
          }
          col.values.push_back(v);
          break;
        }
        default: {
          const auto v = parse_double(raw);
          if (!v) {
            throw ParseError("cannot parse '" + raw + "' as a number at " +
                                 row_col(row_number, spec.name),
                             row_number, spec.name);
          }
          col.values.push_back(*v);
        }
      }
    }
  }
  if (ds.y.empty()) throw ParseError("CSV input has a header but no data rows", 0, "");
  return ds;
}

Dataset read_csv(const std::filesystem::path& path, const EncodingConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return parse_csv(in, config);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  csv::Row header{ds.response_name};
  for (const auto& c : ds.columns) header.push_back(c.name);
  csv::write_record(out, header);
  csv::Row row(header.size());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    row[0] = std::to_string(ds.y[i]);
    for (std::size_t j = 0; j < ds.columns.size(); ++j) {
      const Column& c = ds.columns[j];
      row[j + 1] = c.kind == ColumnKind::Categorical ? c.labels[i] : format_number(c.values[i]);
    }
    csv::write_record(out, row);
  }
}

}  // namespace citereg
