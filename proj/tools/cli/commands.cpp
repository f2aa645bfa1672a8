#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "citereg/diagnostics.hpp"
#include "citereg/errors.hpp"
#include "citereg/inference.hpp"
#include "citereg/simulate.hpp"
#include "cli/report.hpp"

namespace citereg::cli {

namespace fs = std::filesystem;

namespace {

struct Prepared {
  Dataset dataset;
  DesignMatrix X;
  DesignMatrix X_h;
};

Prepared prepare(const RunConfig& config) {
  if (config.data.empty()) throw ConfigError("no data file given (use --data or \"data\")");
  Prepared p;
  p.dataset = read_csv(config.data, config.encoding);
  p.X = encode_mean(p.dataset, config.encoding);
  p.X_h = encode_hurdle(p.dataset, config.encoding);
  return p;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
  }
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  writer(out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::ordered_json& doc) {
  write_file(path, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
}

std::string lower(std::string_view code) {
  std::string s(code);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> default_irr_names(const RunConfig& config, const DesignMatrix& X) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    if (X.sources[j].empty()) continue;
    const ColumnKind kind = config.encoding.predictor(X.sources[j]).kind;
    if (kind == ColumnKind::Categorical || kind == ColumnKind::Binary) names.push_back(X.labels[j]);
  }
  return names;
}

std::vector<std::string> irr_names_for(const RunConfig& config, const DesignMatrix& X) {
  if (!config.irr_names) return default_irr_names(config, X);
  std::vector<std::string> names;
  for (const auto& n : *config.irr_names) {
    if (X.index_of(n)) names.push_back(n);
  }
  return names;
}

// Fits one family and writes its report and plot-data files. Returns the model.
FittedModel fit_and_report(Family family, const RunConfig& config, const Prepared& data,
                           const DesignMatrix& X, const DesignMatrix& X_h, const std::string& stem,
                           nlohmann::ordered_json extra = {}) {
  const FittedModel m = fit_model(family, X, X_h, data.dataset.y, config.fit_options);
  std::optional<ResidualSet> residuals;
  try {
    residuals = pearson(m, X, X_h, data.dataset.y, config.threads);
  } catch (const StructuralError&) {
    // no residual degrees of freedom; the report omits the residual block
  }
  nlohmann::ordered_json report =
      model_report(m, irr_names_for(config, X), residuals ? &*residuals : nullptr, config.ci_level);
  for (auto& [key, value] : extra.items()) report[key] = value;

  write_json(config.out_dir / (stem + "_report.json"), report);
  write_file(config.out_dir / (stem + "_frequency.csv"), [&](std::ostream& o) {
    write_frequency_csv(o, frequency_table(data.dataset.y, m, X, X_h, config.frequency_max));
  });
  if (residuals) {
    write_file(config.out_dir / (stem + "_residuals.csv"),
               [&](std::ostream& o) { write_residuals_csv(o, *residuals); });
    if (residuals->has_deviance()) {
      write_file(config.out_dir / (stem + "_deviance.csv"),
                 [&](std::ostream& o) { write_deviance_distribution_csv(o, *residuals); });
    }
  }
  return m;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

FitOptions parse_fit_options(const nlohmann::json& doc, FitOptions base) {
  base.max_iterations = doc.value("max_iterations", base.max_iterations);
  base.gradient_tolerance = doc.value("gradient_tolerance", base.gradient_tolerance);
  base.step_halving_limit = doc.value("step_halving_limit", base.step_halving_limit);
  base.hessian_step = doc.value("hessian_step", base.hessian_step);
  return base;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  RunConfig config;
  config.encoding = EncodingConfig::from_json(doc);
  try {
    if (doc.contains("data")) {
      fs::path data = doc.at("data").get<std::string>();
      config.data = data.is_relative() && !base_dir.empty() ? base_dir / data : data;
    }
    if (doc.contains("families")) {
      for (const auto& f : doc.at("families")) config.families.push_back(parse_family(f.get<std::string>()));
    }
    if (doc.contains("fit_options")) {
      config.fit_options = parse_fit_options(doc.at("fit_options"), config.fit_options);
    }
    config.ci_level = doc.value("ci_level", config.ci_level);
    config.restrict_level = doc.value("level", config.restrict_level);
    config.frequency_max = doc.value("frequency_max", config.frequency_max);
    if (doc.contains("irr")) config.irr_names = doc.at("irr").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  return RunConfig::from_json(read_json(path), path.parent_path());
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::vector<Family> families =
        config.families.empty() ? std::vector<Family>{Family::NegativeBinomial} : config.families;
    const Prepared data = prepare(config);
    ensure_dir(config.out_dir);
    int code = kExitOk;
    for (Family family : families) {
      const FittedModel m = fit_and_report(family, config, data, data.X, data.X_h,
                                           lower(family_code(family)),
                                           nlohmann::ordered_json{{"command", "fit"}});
      out << family_code(family) << ": loglik " << std::setprecision(10) << m.loglik << ", AIC "
          << std::llround(aic(m)) << (m.converged ? "" : " (NOT CONVERGED)") << '\n';
      if (!m.converged) code = kExitNotConverged;
    }
    return code;
  });
}

int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.families.size() < 2) {
      throw ConfigError("compare needs at least two families (got " +
                        std::to_string(config.families.size()) + ")");
    }
    const Prepared data = prepare(config);
    ensure_dir(config.out_dir);
    std::vector<FittedModel> models;
    for (Family f : config.families) {
      models.push_back(fit_and_report(f, config, data, data.X, data.X_h, lower(family_code(f)),
                                      nlohmann::ordered_json{{"command", "compare"}}));
    }
    const auto ranking = compare(models);

    nlohmann::ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "compare";
    doc["n"] = data.dataset.n();
    auto rows = nlohmann::ordered_json::array();
    out << "rank  family         AIC    delta\n";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      const auto& r = ranking[i];
      const FittedModel& m = models[r.index];
      nlohmann::ordered_json row;
      row["rank"] = i + 1;
      row["family"] = std::string(family_code(r.family));
      row["aic"] = std::llround(r.aic);
      row["delta_aic"] = std::llround(r.delta);
      row["loglik"] = round6(m.loglik);
      row["parameters"] = m.num_params();
      row["converged"] = m.converged;
      rows.push_back(std::move(row));
      out << std::setw(4) << i + 1 << "  " << std::setw(6) << family_code(r.family) << std::setw(12)
          << std::llround(r.aic) << std::setw(9) << std::llround(r.delta) << '\n';
    }
    doc["ranking"] = std::move(rows);
    write_json(config.out_dir / "compare.json", doc);
    const bool all_converged =
        std::all_of(models.begin(), models.end(), [](const FittedModel& m) { return m.converged; });
    return all_converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_restrict(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Family family =
        config.families.empty() ? Family::HurdleNegativeBinomial : config.families.front();
    const Prepared data = prepare(config);
    ensure_dir(config.out_dir);

    const FittedModel full = fit_model(family, data.X, data.X_h, data.dataset.y, config.fit_options);
    const auto table = wald_table(full, config.ci_level);
    std::vector<std::string> keep_mean, keep_zero, drop_mean, drop_zero;
    for (const auto& row : table) {
      if (row.name == DesignMatrix::kIntercept || row.equation == Equation::Dispersion) continue;
      const bool keep = row.p_value < config.restrict_level;
      auto& target = row.equation == Equation::Mean ? (keep ? keep_mean : drop_mean)
                                                    : (keep ? keep_zero : drop_zero);
      target.push_back(row.name);
    }
    std::vector<std::string> warnings;
    if (keep_mean.empty() && data.X.cols() > 1) warnings.emplace_back("mean_equation_intercept_only");
    if (full.has_hurdle() && keep_zero.empty() && data.X_h.cols() > 1) {
      warnings.emplace_back("hurdle_equation_intercept_only");
    }
    for (const auto& w : warnings) err << "warning: " << w << " (every covariate was dropped)\n";

    const DesignMatrix X = data.X.select(keep_mean);
    const DesignMatrix X_h = full.has_hurdle() ? data.X_h.select(keep_zero) : X;
    nlohmann::ordered_json extra;
    extra["command"] = "restrict";
    extra["level"] = config.restrict_level;
    extra["dropped"] = {{"positives", drop_mean}, {"zeros", drop_zero}};
    extra["restriction_warnings"] = warnings;
    extra["full_model_aic"] = std::llround(aic(full));
    const FittedModel restricted = fit_and_report(
        family, config, data, X, X_h, "restricted_" + lower(family_code(family)), extra);

    out << "dropped " << drop_mean.size() << " mean and " << drop_zero.size()
        << " hurdle terms; AIC " << std::llround(aic(full)) << " -> "
        << std::llround(aic(restricted)) << '\n';
    return full.converged && restricted.converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SimDesign design = SimDesign::from_json(read_json(options.design));
    if (options.seed) design.seed = *options.seed;
    ensure_dir(options.out_dir);

    const SimulatedData data = generate(design);
    write_file(options.out_dir / "data.csv", [&](std::ostream& o) { write_csv(o, data.dataset); });
    write_json(options.out_dir / "truth.json", data.truth.to_json());
    nlohmann::ordered_json config = data.config.to_json();
    config["data"] = "data.csv";
    config["families"] = {std::string(family_code(design.family))};
    write_json(options.out_dir / "config.json", config);
    out << "wrote " << data.dataset.n() << " rows to " << (options.out_dir / "data.csv").string()
        << '\n';

    if (options.replications > 0) {
      const RecoverySummary summary =
          recovery_study(design, options.replications, options.threads, options.fit_options);
      nlohmann::ordered_json doc = summary.to_json();
      doc["schema_version"] = kSchemaVersion;
      write_json(options.out_dir / "recovery.json", doc);
      out << "recovery: " << summary.replications << " replications, " << summary.failures
          << " failures, all-within-3SE fraction " << summary.all_within_3se << '\n';
    }
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Count regression for citation data: Poisson, negative binomial and hurdle NB"};
  app.require_subcommand(1);

  std::string data, config_path, out_dir = ".";
  std::vector<std::string> families;
  double level = 0.10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t replications = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--data", data, "CSV data file (overrides \"data\" in the config)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--families", families, "Model families: P, NB, HNB")->delimiter(',');
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit models and write reports and plot data");
  add_common(fit);
  CLI::App* cmp = app.add_subcommand("compare", "Rank families by AIC");
  add_common(cmp);
  CLI::App* restrict = app.add_subcommand("restrict", "Drop insignificant terms and refit once");
  add_common(restrict);
  auto* level_opt = restrict->add_option("--level", level, "Keep terms with p < level (default 0.10)");
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic data set from a design");
  sim->add_option("--config", config_path, "Simulation design (JSON)")->required();
  sim->add_option("--out", out_dir, "Output directory");
  auto* seed_opt = sim->add_option("--seed", seed, "Override the design seed");
  sim->add_option("--replications", replications, "Also run a recovery study with this many fits");
  sim->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitError;
  }

  if (sim->parsed()) {
    SimulateOptions options;
    options.design = config_path;
    options.out_dir = out_dir;
    if (seed_opt->count() > 0) options.seed = seed;
    options.replications = replications;
    options.threads = threads;
    return cmd_simulate(options, out, err);
  }

  RunConfig config;
  const int loaded = guarded(err, [&] {
    config = load_run_config(config_path);
    return kExitOk;
  });
  if (loaded != kExitOk) return loaded;
  if (!data.empty()) config.data = data;
  config.out_dir = out_dir;
  config.threads = threads;
  if (!families.empty()) {
    const int parsed = guarded(err, [&] {
      config.families.clear();
      for (const auto& f : families) config.families.push_back(parse_family(f));
      return kExitOk;
    });
    if (parsed != kExitOk) return parsed;
  }
  if (level_opt->count() > 0) config.restrict_level = level;

  if (fit->parsed()) return cmd_fit(config, out, err);
  if (cmp->parsed()) return cmd_compare(config, out, err);
  return cmd_restrict(config, out, err);
}

}  // namespace citereg::cli
