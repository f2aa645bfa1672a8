#include "citereg/simulate.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "citereg/countdist.hpp"
#include "citereg/errors.hpp"
#include "citereg/inference.hpp"

namespace citereg {

namespace {

CovariateKind parse_covariate_kind(const std::string& s) {
  if (s == "uniform" || s == "numeric") return CovariateKind::Uniform;
  if (s == "normal") return CovariateKind::Normal;
  if (s == "binary") return CovariateKind::Binary;
  if (s == "categorical") return CovariateKind::Categorical;
  throw ConfigError("unknown covariate kind '" + s + "'");
}

std::string covariate_kind_name(CovariateKind k) {
  switch (k) {
    case CovariateKind::Uniform: return "uniform";
    case CovariateKind::Normal: return "normal";
    case CovariateKind::Binary: return "binary";
    case CovariateKind::Categorical: return "categorical";
  }
  return "uniform";
}

std::size_t width_of(const CovariateSpec& c) {
  return c.kind == CovariateKind::Categorical ? c.levels.size() - 1 : 1;
}

}  // namespace

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

SimDesign SimDesign::from_json(const nlohmann::json& doc) {
  SimDesign d;
  try {
    d.n = doc.at("n").get<std::size_t>();
    d.family = parse_family(doc.value("family", std::string("NB")));
    d.seed = doc.value("seed", std::uint64_t{1});
    for (const auto& item : doc.value("covariates", nlohmann::json::array())) {
      CovariateSpec c;
      c.name = item.at("name").get<std::string>();
      c.kind = parse_covariate_kind(item.value("kind", std::string("uniform")));
      c.min = item.value("min", 0.0);
      c.max = item.value("max", 1.0);
      c.mean = item.value("mean", 0.0);
      c.sd = item.value("sd", 1.0);
      c.prob = item.value("prob", 0.5);
      c.levels = item.value("levels", std::vector<std::string>{});
      c.probs = item.value("probs", std::vector<double>{});
      c.base = item.value("base", c.levels.empty() ? std::string() : c.levels.front());
      c.in_hurdle = item.value("in_hurdle", true);
      d.covariates.push_back(std::move(c));
    }
    d.beta = doc.at("beta").get<std::vector<double>>();
    d.r = doc.value("r", 1.0);
    d.delta = doc.value("delta", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed simulation design: ") + e.what());
  }
  d.validate();
  return d;
}

nlohmann::ordered_json SimDesign::to_json() const {
  nlohmann::ordered_json doc;
  doc["n"] = n;
  doc["family"] = std::string(family_code(family));
  doc["seed"] = seed;
  auto covs = nlohmann::ordered_json::array();
  for (const auto& c : covariates) {
    nlohmann::ordered_json item;
    item["name"] = c.name;
    item["kind"] = covariate_kind_name(c.kind);
    switch (c.kind) {
      case CovariateKind::Uniform: item["min"] = c.min; item["max"] = c.max; break;
      case CovariateKind::Normal: item["mean"] = c.mean; item["sd"] = c.sd; break;
      case CovariateKind::Binary: item["prob"] = c.prob; break;
      case CovariateKind::Categorical:
        item["levels"] = c.levels;
        item["probs"] = c.probs;
        item["base"] = c.base;
        break;
    }
    item["in_hurdle"] = c.in_hurdle;
    covs.push_back(std::move(item));
  }
  doc["covariates"] = std::move(covs);
  doc["beta"] = beta;
  if (family != Family::Poisson) doc["r"] = r;
  if (family == Family::HurdleNegativeBinomial) doc["delta"] = delta;
  return doc;
}

std::size_t SimDesign::mean_width() const {
  std::size_t k = 1;
  for (const auto& c : covariates) k += width_of(c);
  return k;
}

std::size_t SimDesign::hurdle_width() const {
  std::size_t k = 1;
  for (const auto& c : covariates) {
    if (c.in_hurdle) k += width_of(c);
  }
  return k;
}

void SimDesign::validate() const {
  if (n < 1) throw ConfigError("simulation design: n must be at least 1");
  for (const auto& c : covariates) {
    if (c.name.empty()) throw ConfigError("simulation design: covariate without a name");
    switch (c.kind) {
      case CovariateKind::Uniform:
        if (!(c.max > c.min)) throw ConfigError("covariate '" + c.name + "': need max > min");
        break;
      case CovariateKind::Normal:
        if (!(c.sd > 0.0)) throw ConfigError("covariate '" + c.name + "': need sd > 0");
        break;
      case CovariateKind::Binary:
        if (!(c.prob >= 0.0 && c.prob <= 1.0)) {
          throw ConfigError("covariate '" + c.name + "': prob must lie in [0, 1]");
        }
        break;
      case CovariateKind::Categorical: {
        if (c.levels.size() < 2 || c.levels.size() != c.probs.size()) {
          throw ConfigError("covariate '" + c.name + "': need >= 2 levels with one prob each");
        }
        const double total = std::accumulate(c.probs.begin(), c.probs.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9 ||
            std::any_of(c.probs.begin(), c.probs.end(), [](double p) { return p < 0.0; })) {
          throw ConfigError("covariate '" + c.name + "': probs must be nonnegative and sum to 1");
        }
        if (std::find(c.levels.begin(), c.levels.end(), c.base) == c.levels.end()) {
          throw ConfigError("covariate '" + c.name + "': base level is not a declared level");
        }
        break;
      }
    }
  }
  if (beta.size() != mean_width()) {
    throw ConfigError("simulation design: beta has " + std::to_string(beta.size()) +
                      " entries, mean design has " + std::to_string(mean_width()) + " columns");
  }
  if (family != Family::Poisson && !(r > 0.0 && std::isfinite(r))) {
    throw ConfigError("simulation design: r must be positive");
  }
  if (family == Family::HurdleNegativeBinomial && delta.size() != hurdle_width()) {
    throw ConfigError("simulation design: delta has " + std::to_string(delta.size()) +
                      " entries, hurdle design has " + std::to_string(hurdle_width()) + " columns");
  }
}

EncodingConfig SimDesign::encoding() const {
  EncodingConfig config;
  config.response = "y";
  std::vector<std::string> hurdle;
  for (const auto& c : covariates) {
    PredictorSpec p;
    p.name = c.name;
    switch (c.kind) {
      case CovariateKind::Uniform:
      case CovariateKind::Normal: p.kind = ColumnKind::Numeric; break;
      case CovariateKind::Binary: p.kind = ColumnKind::Binary; break;
      case CovariateKind::Categorical:
        p.kind = ColumnKind::Categorical;
        p.levels = c.levels;
        p.base = c.base;
        break;
    }
    config.predictors.push_back(std::move(p));
    if (c.in_hurdle) hurdle.push_back(c.name);
  }
  if (family == Family::HurdleNegativeBinomial) config.hurdle = std::move(hurdle);
  return config;
}

std::vector<double> SimTruth::natural_vector() const {
  std::vector<double> out = beta;
  if (r) out.push_back(*r);
  out.insert(out.end(), delta.begin(), delta.end());
  return out;
}

nlohmann::ordered_json SimTruth::to_json() const {
  nlohmann::ordered_json doc;
  doc["family"] = std::string(family_code(family));
  doc["n"] = n;
  doc["seed"] = seed;
  doc["stream"] = stream;
  nlohmann::ordered_json mean;
  for (std::size_t j = 0; j < beta.size(); ++j) mean[mean_labels[j]] = beta[j];
  doc["beta"] = std::move(mean);
  if (r) doc["r"] = *r;
  if (family == Family::HurdleNegativeBinomial) {
    nlohmann::ordered_json zero;
    for (std::size_t j = 0; j < delta.size(); ++j) zero[hurdle_labels[j]] = delta[j];
    doc["delta"] = std::move(zero);
  }
  return doc;
}

SimulatedData generate(const SimDesign& design, std::uint64_t stream) {
  design.validate();
  Engine engine = make_engine(design.seed, stream);
  const std::size_t n = design.n;

  SimulatedData out;
  out.config = design.encoding();
  out.dataset.response_name = out.config.response;
  out.dataset.y.assign(n, 0);
  for (const auto& c : design.covariates) {
    Column col;
    col.name = c.name;
    col.kind = c.kind == CovariateKind::Categorical ? ColumnKind::Categorical
               : c.kind == CovariateKind::Binary    ? ColumnKind::Binary
                                                    : ColumnKind::Numeric;
    switch (c.kind) {
      case CovariateKind::Uniform: {
        std::uniform_real_distribution<double> dist(c.min, c.max);
        for (std::size_t i = 0; i < n; ++i) col.values.push_back(dist(engine));
        break;
      }
      case CovariateKind::Normal: {
        std::normal_distribution<double> dist(c.mean, c.sd);
        for (std::size_t i = 0; i < n; ++i) col.values.push_back(dist(engine));
        break;
      }
      case CovariateKind::Binary: {
        std::bernoulli_distribution dist(c.prob);
        for (std::size_t i = 0; i < n; ++i) col.values.push_back(dist(engine) ? 1.0 : 0.0);
        break;
      }
      case CovariateKind::Categorical: {
        std::discrete_distribution<std::size_t> dist(c.probs.begin(), c.probs.end());
        for (std::size_t i = 0; i < n; ++i) col.labels.push_back(c.levels[dist(engine)]);
        break;
      }
    }
    out.dataset.columns.push_back(std::move(col));
  }

  out.X = encode_mean(out.dataset, out.config);
  out.X_h = design.family == Family::HurdleNegativeBinomial ? encode_hurdle(out.dataset, out.config)
                                                            : out.X;
  const Eigen::Map<const Eigen::VectorXd> beta(design.beta.data(),
                                               static_cast<Eigen::Index>(design.beta.size()));
  const Eigen::VectorXd theta = link_mean(out.X.X, beta);
  Eigen::VectorXd phi;
  if (design.family == Family::HurdleNegativeBinomial) {
    const Eigen::Map<const Eigen::VectorXd> delta(design.delta.data(),
                                                  static_cast<Eigen::Index>(design.delta.size()));
    phi = link_hurdle(out.X_h.X, delta);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    switch (design.family) {
      case Family::Poisson: out.dataset.y[i] = draw_poisson(theta[e], engine); break;
      case Family::NegativeBinomial:
        out.dataset.y[i] = draw_nb(NbParams(theta[e], design.r), engine);
        break;
      case Family::HurdleNegativeBinomial:
        out.dataset.y[i] = draw_hnb(HurdleParams(NbParams(theta[e], design.r), phi[e]), engine);
        break;
    }
  }

  SimTruth& t = out.truth;
  t.family = design.family;
  t.mean_labels = out.X.labels;
  t.beta = design.beta;
  if (design.family != Family::Poisson) t.r = design.r;
  if (design.family == Family::HurdleNegativeBinomial) {
    t.hurdle_labels = out.X_h.labels;
    t.delta = design.delta;
  }
  t.seed = design.seed;
  t.stream = stream;
  t.n = n;
  return out;
}

SimDesign paper_scale_design(Family family, std::uint64_t seed) {
  SimDesign d;
  d.n = 43190;
  d.family = family;
  d.seed = seed;
  d.r = 0.6425;

  auto categorical = [](std::string name, std::vector<std::string> levels, std::vector<double> probs) {
    CovariateSpec c;
    c.name = std::move(name);
    c.kind = CovariateKind::Categorical;
    c.base = levels.front();
    c.levels = std::move(levels);
    c.probs = std::move(probs);
    return c;
  };
  d.covariates.push_back(categorical("access", {"Closed", "Green", "Bronze", "Gold", "Hybrid"},
                                     {0.45, 0.30, 0.10, 0.05, 0.10}));
  d.covariates.push_back(categorical(
      "discipline",
      {"Statistics", "Accounting and Finance", "Applied Economics", "Business", "Commerce",
       "Economic Theory", "Marketing", "Tourism"},
      {0.03, 0.10, 0.44, 0.25, 0.07, 0.04, 0.04, 0.03}));
  d.covariates.push_back(categorical("rating", {"4", "3", "2", "1"}, {0.25, 0.35, 0.25, 0.15}));

  CovariateSpec funded;
  funded.name = "funded";
  funded.kind = CovariateKind::Binary;
  funded.prob = 0.21;
  d.covariates.push_back(funded);

  CovariateSpec age;
  age.name = "age";
  age.kind = CovariateKind::Uniform;
  age.min = 0.0;
  age.max = 7.0;
  d.covariates.push_back(age);

  for (int j = 1; j <= 14; ++j) {
    CovariateSpec z;
    z.name = "score" + std::to_string(j);
    z.kind = CovariateKind::Normal;
    z.mean = 0.0;
    z.sd = 1.0;
    d.covariates.push_back(z);
  }

  // intercept, access(4), discipline(7), rating(3), funded, age, 14 scores = 31
  d.beta = {2.6,
            0.13, 0.10, 0.06, 0.05,
            0.35, 0.30, 0.25, 0.20, 0.28, 0.15, 0.10,
            -0.10, -0.25, -0.40,
            0.15,
            -0.14};
  const double scores[] = {0.20, -0.10, 0.05, 0.15, -0.05, 0.08, 0.0,
                           0.12, -0.15, 0.03, 0.0, 0.06, -0.08, 0.10};
  d.beta.insert(d.beta.end(), std::begin(scores), std::end(scores));
  if (family == Family::HurdleNegativeBinomial) {
    d.delta.assign(d.hurdle_width(), 0.0);
    d.delta[0] = -2.9;  // roughly the observed 5.5% zero mass
  }
  return d;
}

nlohmann::ordered_json RecoverySummary::to_json(bool include_records) const {
  nlohmann::ordered_json doc;
  doc["family"] = std::string(family_code(family));
  doc["replications"] = replications;
  doc["failures"] = failures;
  doc["boundary_hits"] = boundary_hits;
  doc["all_within_3se"] = all_within_3se;
  auto params = nlohmann::ordered_json::array();
  for (const auto& p : parameters) {
    nlohmann::ordered_json item;
    item["name"] = p.name;
    item["truth"] = p.truth;
    item["mean_estimate"] = p.mean_estimate;
    item["bias"] = p.bias;
    item["rmse"] = p.rmse;
    item["coverage_95"] = p.coverage;
    item["within_3se"] = p.within_3se;
    params.push_back(std::move(item));
  }
  doc["parameters"] = std::move(params);
  if (include_records) {
    auto recs = nlohmann::ordered_json::array();
    for (const auto& r : records) {
      nlohmann::ordered_json item;
      item["index"] = r.index;
      item["ok"] = r.ok;
      item["converged"] = r.converged;
      item["boundary"] = r.boundary;
      if (!r.error.empty()) item["error"] = r.error;
      item["estimates"] = r.estimates;
      item["std_errors"] = r.std_errors;
      item["loglik"] = r.loglik;
      recs.push_back(std::move(item));
    }
    doc["records"] = std::move(recs);
  }
  return doc;
}

RecoverySummary recovery_study(const SimDesign& design, std::size_t replications, unsigned threads,
                               const FitOptions& opts) {
  if (replications < 1) throw ConfigError("recovery_study: replications must be at least 1");
  design.validate();

  RecoverySummary summary;
  summary.family = design.family;
  summary.replications = replications;
  summary.records.resize(replications);
  std::vector<std::string> names;
  std::vector<double> truth;

  {
    // Labels are built from the design directly; generating a data set just
    // for its column names could miss a rare categorical level.
    names.push_back(DesignMatrix::kIntercept);
    for (const auto& c : design.covariates) {
      if (c.kind == CovariateKind::Categorical) {
        for (const auto& l : c.levels) {
          if (l != c.base) names.push_back(c.name + "=" + l);
        }
      } else {
        names.push_back(c.name);
      }
    }
    truth = design.beta;
    if (design.family != Family::Poisson) {
      names.push_back("r");
      truth.push_back(design.r);
    }
    if (design.family == Family::HurdleNegativeBinomial) {
      names.push_back("zero:" + std::string(DesignMatrix::kIntercept));
      for (const auto& c : design.covariates) {
        if (!c.in_hurdle) continue;
        if (c.kind == CovariateKind::Categorical) {
          for (const auto& l : c.levels) {
            if (l != c.base) names.push_back("zero:" + c.name + "=" + l);
          }
        } else {
          names.push_back("zero:" + c.name);
        }
      }
      truth.insert(truth.end(), design.delta.begin(), design.delta.end());
    }
  }

  parallel_for(replications, threads, [&](std::size_t rep) {
    ReplicationRecord& rec = summary.records[rep];
    rec.index = rep;
    try {
      const SimulatedData data = generate(design, rep);
      const FittedModel m = fit_model(design.family, data.X, data.X_h, data.dataset.y, opts);
      const Eigen::VectorXd est = m.natural_estimates();
      const Eigen::VectorXd se = m.natural_std_errors();
      rec.estimates.assign(est.data(), est.data() + est.size());
      rec.std_errors.assign(se.data(), se.data() + se.size());
      rec.loglik = m.loglik;
      rec.converged = m.converged;
      rec.boundary = m.has_warning(fit_warning::kPoissonBoundary);
      rec.ok = m.converged;
      if (!m.converged) rec.error = "not converged";
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  const double z = normal_critical_value(0.95);
  std::size_t ok = 0;
  std::size_t all_within = 0;
  summary.parameters.resize(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    summary.parameters[j].name = names[j];
    summary.parameters[j].truth = truth[j];
  }
  for (const auto& rec : summary.records) {
    if (rec.boundary) ++summary.boundary_hits;
    if (!rec.ok) {
      ++summary.failures;
      continue;
    }
    ++ok;
    bool every = true;
    for (std::size_t j = 0; j < names.size(); ++j) {
      ParameterRecovery& p = summary.parameters[j];
      const double err = rec.estimates[j] - p.truth;
      p.mean_estimate += rec.estimates[j];
      p.rmse += err * err;
      if (std::abs(err) <= z * rec.std_errors[j]) p.coverage += 1.0;
      if (std::abs(err) <= 3.0 * rec.std_errors[j]) {
        p.within_3se += 1.0;
      } else {
        every = false;
      }
    }
    if (every) ++all_within;
  }
  if (ok > 0) {
    const double count = static_cast<double>(ok);
    for (auto& p : summary.parameters) {
      p.mean_estimate /= count;
      p.bias = p.mean_estimate - p.truth;
      p.rmse = std::sqrt(p.rmse / count);
      p.coverage /= count;
      p.within_3se /= count;
    }
    summary.all_within_3se = static_cast<double>(all_within) / count;
  }
  return summary;
}

RankingStudy aic_ranking_study(const SimDesign& design, const std::vector<Family>& families,
                               const std::vector<Family>& expected, std::size_t replications,
                               unsigned threads, const FitOptions& opts) {
  if (replications < 1) throw ConfigError("aic_ranking_study: replications must be at least 1");
  RankingStudy study;
  study.replications = replications;
  study.orders.resize(replications);
  std::vector<std::string> expected_codes;
  for (Family f : expected) expected_codes.emplace_back(family_code(f));

  parallel_for(replications, threads, [&](std::size_t rep) {
    try {
      const SimulatedData data = generate(design, rep);
      // Every family sees the full covariate set in both equations.
      std::vector<FittedModel> models;
      for (Family f : families) {
        models.push_back(fit_model(f, data.X, data.X_h, data.dataset.y, opts));
      }
      for (const auto& r : compare(models)) {
        study.orders[rep].emplace_back(family_code(r.family));
      }
    } catch (const std::exception&) {
      study.orders[rep].clear();
    }
  });

  std::size_t ok = 0;
  std::size_t matching = 0;
  for (const auto& order : study.orders) {
    if (order.empty()) {
      ++study.failures;
      continue;
    }
    ++ok;
    if (order == expected_codes) ++matching;
  }
  study.fraction_matching = ok > 0 ? static_cast<double>(matching) / static_cast<double>(ok) : 0.0;
  return study;
}

}  // namespace citereg
