// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance [--criterion N] [--report-dir DIR] [--threads T]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "citereg/countdist.hpp"
#include "citereg/diagnostics.hpp"
#include "citereg/fit.hpp"
#include "citereg/inference.hpp"
#include "citereg/likelihood.hpp"
#include "citereg/simulate.hpp"
#include "citereg/specfun.hpp"

using namespace citereg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

fs::path g_report_dir = "acceptance_artifacts";
unsigned g_threads = 1;

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Eigen::MatrixXd random_design(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd X(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t j = 1; j < k; ++j) X(i, j) = u(rng);
  }
  return X;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd up = x, down = x;
    up[j] += step;
    down[j] -= step;
    g[j] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

// 1 -------------------------------------------------------------------------
Outcome irr_reproduction() {
  // Table 4 rows: estimate, standard error and printed 95% interval
  CoefficientReport green = wald_row("OA green", 0.1299, 0.0096);
  green.ci_low = 0.1109;
  green.ci_high = 0.1489;
  CoefficientReport accounting = wald_row("Accounting and Finance", 0.3544, 0.0816);
  accounting.ci_low = 0.1945;
  accounting.ci_high = 0.5143;

  const IrrReport g = irr(green), a = irr(accounting);
  const double tol = 1e-4;
  const bool pass = std::abs(g.irr - 1.1387) <= tol && std::abs(g.ci_low - 1.1172) <= tol &&
                    std::abs(g.ci_high - 1.1605) <= tol && std::abs(a.irr - 1.4253) <= tol;
  const IrrReport from_se = irr(wald_row("OA green", 0.1299, 0.0096));
  return {pass, fmt("green IRR %.4f CI (%.4f, %.4f); accounting IRR %.4f; "
                    "CI rebuilt from se alone would be (%.4f, %.4f)",
                    g.irr, g.ci_low, g.ci_high, a.irr, from_se.ci_low, from_se.ci_high)};
}

// 2 -------------------------------------------------------------------------
Outcome limit_identities() {
  double geo_err = 0.0;
  for (double theta : {0.05, 0.5, 1.0, 2.5, 10.0, 27.3193, 50.0, 200.0}) {
    for (std::uint64_t y = 0; y <= 50; ++y) {
      const double geo =
          (1.0 / (1.0 + theta)) * std::pow(theta / (1.0 + theta), static_cast<double>(y));
      geo_err = std::max(geo_err, std::abs(std::exp(nb_log_pmf(y, NbParams(theta, 1.0))) - geo));
    }
  }
  const double r = 1e-8;
  double poisson_err = 0.0, expansion_err = 0.0;
  double worst_theta = 0.0;
  std::uint64_t worst_y = 0;
  for (int t = 1; t <= 100; ++t) {
    const double theta = 0.5 * t;  // 0.5 .. 50
    for (std::uint64_t y = 0; y <= 200; ++y) {
      const double yd = static_cast<double>(y);
      const double gap = nb_log_pmf(y, NbParams(theta, r)) - poisson_log_pmf(y, theta);
      if (std::abs(gap) > poisson_err) {
        poisson_err = std::abs(gap);
        worst_theta = theta;
        worst_y = y;
      }
      const double expansion = 0.5 * r * ((yd - theta) * (yd - theta) - yd);
      expansion_err = std::max(expansion_err, std::abs(gap - expansion));
    }
  }
  const bool pass = geo_err < 1e-12 && poisson_err < 1e-5;
  return {pass, fmt("geometric max err %.2e (tol 1e-12); Poisson max |log-pmf gap| %.3e at theta=%g y=%llu "
                    "(tol 1e-5); gap minus r/2[(y-theta)^2-y] max %.1e",
                    geo_err, poisson_err, worst_theta, static_cast<unsigned long long>(worst_y),
                    expansion_err)};
}

// 3 -------------------------------------------------------------------------
Outcome normalization() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_nb = 1.0, worst_hnb = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double theta = std::exp(-3.0 + 9.0 * u(rng));  // 0.05 .. 400
    const double r = std::exp(-6.0 + 7.5 * u(rng));      // 0.0025 .. 4.5
    const double phi = u(rng);
    const NbParams nb(theta, r);
    const HurdleParams h(nb, phi);
    const std::uint64_t upper = nb_support_scan(nb).upper;
    double s_nb = 0.0, s_hnb = 0.0;
    for (std::uint64_t y = 0; y <= upper; ++y) {
      s_nb += std::exp(nb_log_pmf(y, nb));
      s_hnb += std::exp(hnb_log_pmf(y, h));
    }
    worst_nb = std::min(worst_nb, s_nb);
    worst_hnb = std::min(worst_hnb, s_hnb);
  }
  const bool pass = worst_nb >= 1 - 1e-9 && worst_hnb >= 1 - 1e-9;
  return {pass, fmt("min NB mass %.15f, min HNB mass %.15f over 100 draws", worst_nb, worst_hnb)};
}

// 4 -------------------------------------------------------------------------
Outcome gradients() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 200, k = 5;
  double worst_nb = 0.0, worst_hnb = 0.0;
  auto rel = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double w = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      w = std::max(w, std::abs(a[j] - b[j]) / std::max(1.0, std::abs(b[j])));
    }
    return w;
  };
  for (int point = 0; point < 20; ++point) {
    const Eigen::MatrixXd X = random_design(rng, n, k), Xh = random_design(rng, n, k);
    Eigen::VectorXd beta(k), delta(k);
    for (std::size_t j = 0; j < k; ++j) {
      beta[j] = 0.5 * u(rng);
      delta[j] = 0.8 * u(rng);
    }
    beta[0] += 1.0;
    const double log_r = std::log(0.2) + 1.5 * u(rng);
    Engine e = make_engine(40, static_cast<std::uint64_t>(point));
    const Eigen::VectorXd theta = link_mean(X, beta), phi = link_hurdle(Xh, delta);
    Counts y_nb(n), y_h(n);
    for (std::size_t i = 0; i < n; ++i) {
      y_nb[i] = draw_nb(NbParams(theta[i], std::exp(log_r)), e);
      y_h[i] = draw_hnb(HurdleParams(NbParams(theta[i], std::exp(log_r)), phi[i]), e);
    }

    Eigen::VectorXd x(k + 1);
    x << beta, log_r;
    const Eigen::VectorXd fd_nb = central_difference(
        [&](const Eigen::VectorXd& v) { return nb_loglik(NbRegParams{v.head(k), v[k]}, X, y_nb); }, x,
        1e-5);
    worst_nb = std::max(worst_nb, rel(nb_score(NbRegParams{beta, log_r}, X, y_nb), fd_nb));

    Eigen::VectorXd xh(2 * k + 1);
    xh << beta, log_r, delta;
    const Eigen::VectorXd fd_h = central_difference(
        [&](const Eigen::VectorXd& v) {
          return hnb_loglik(HnbRegParams{NbRegParams{v.head(k), v[k]}, v.tail(k)}, X, Xh, y_h).total();
        },
        xh, 1e-5);
    worst_hnb = std::max(
        worst_hnb, rel(hnb_score(HnbRegParams{NbRegParams{beta, log_r}, delta}, X, Xh, y_h), fd_h));
  }
  const bool pass = worst_nb < 1e-6 && worst_hnb < 1e-6;
  return {pass, fmt("max relative score error: NB %.2e, HNB %.2e (20 points, n=200, k=5)", worst_nb,
                    worst_hnb)};
}

// 5 -------------------------------------------------------------------------
Outcome stationarity() {
  const Counts y_nb = sample(NbParams(27.3193, 1.61933), 20000, 5);
  const double ybar =
      std::accumulate(y_nb.begin(), y_nb.end(), 0.0) / static_cast<double>(y_nb.size());
  const FittedModel nb = fit_homogeneous(Family::NegativeBinomial, y_nb);
  const double mean_err = std::abs(std::exp(nb.beta()[0]) - ybar) / ybar;

  const Counts y_h = sample(HurdleParams(NbParams(23.4883, 2.42694), 0.0552), 20000, 6);
  const double zero_fraction = static_cast<double>(std::count(y_h.begin(), y_h.end(), 0u)) /
                               static_cast<double>(y_h.size());
  const FittedModel h = fit_homogeneous(Family::HurdleNegativeBinomial, y_h);
  const double phi_err = std::abs(*h.homogeneous().phi - zero_fraction);
  const bool pass = mean_err < 1e-6 && phi_err < 1e-8;
  return {pass, fmt("NB |exp(b0)/ybar - 1| = %.2e (tol 1e-6); HNB |phi - zero fraction| = %.2e (tol 1e-8)",
                    mean_err, phi_err)};
}

// 6 -------------------------------------------------------------------------
Outcome recovery() {
  SimDesign nb;
  nb.n = 40000;
  nb.family = Family::NegativeBinomial;
  nb.seed = 600;
  CovariateSpec x1{.name = "x1", .kind = CovariateKind::Uniform, .min = -1, .max = 1};
  CovariateSpec x2{.name = "x2", .kind = CovariateKind::Uniform, .min = -1, .max = 1};
  nb.covariates = {x1, x2};
  nb.beta = {1.0, -0.5, 0.25};
  nb.r = 0.7;

  SimDesign hnb;
  hnb.n = 40000;
  hnb.family = Family::HurdleNegativeBinomial;
  hnb.seed = 601;
  CovariateSpec x{.name = "x", .kind = CovariateKind::Uniform, .min = -1, .max = 1};
  hnb.covariates = {x};
  hnb.beta = {1.2, 0.4};
  hnb.r = 0.6;
  hnb.delta = {-2.0, 1.0};

  const RecoverySummary s_nb = recovery_study(nb, 100, g_threads);
  const RecoverySummary s_h = recovery_study(hnb, 100, g_threads);
  {
    std::ofstream out(g_report_dir / "recovery_nb.json");
    out << s_nb.to_json(false).dump(2) << '\n';
    std::ofstream out2(g_report_dir / "recovery_hnb.json");
    out2 << s_h.to_json(false).dump(2) << '\n';
  }
  // failed replications count against the criterion
  const double f_nb = s_nb.all_within_3se * static_cast<double>(100 - s_nb.failures) / 100.0;
  const double f_h = s_h.all_within_3se * static_cast<double>(100 - s_h.failures) / 100.0;
  const bool pass = f_nb >= 0.95 && f_h >= 0.95;
  return {pass, fmt("all parameters within 3 SE: NB %.2f, HNB %.2f of 100 replications (failures %zu, %zu)",
                    f_nb, f_h, s_nb.failures, s_h.failures)};
}

// 7 -------------------------------------------------------------------------
Outcome aic_ordering() {
  SimDesign d;
  d.n = 5000;
  d.family = Family::HurdleNegativeBinomial;
  d.seed = 700;
  CovariateSpec x{.name = "x", .kind = CovariateKind::Uniform, .min = -1, .max = 1};
  d.covariates = {x};
  d.beta = {std::log(23.4883), 0.3};
  d.r = 2.42694;
  d.delta = {std::log(0.0552 / (1 - 0.0552)), 0.3};
  const double p0 = nb_zero_prob(NbParams(23.4883, 2.42694));
  const RankingStudy s = aic_ranking_study(
      d, {Family::Poisson, Family::NegativeBinomial, Family::HurdleNegativeBinomial},
      {Family::HurdleNegativeBinomial, Family::NegativeBinomial, Family::Poisson}, 50, g_threads);
  const double fraction = s.fraction_matching * static_cast<double>(50 - s.failures) / 50.0;
  return {fraction >= 0.95,
          fmt("AIC(HNB) < AIC(NB) < AIC(P) in %.2f of 50 replications (phi 0.0552 vs NB p0 %.3f, failures %zu)",
              fraction, p0, s.failures)};
}

// 8 -------------------------------------------------------------------------
Outcome pearson_calibration() {
  const SimDesign d = paper_scale_design(Family::NegativeBinomial, 2014);
  const SimulatedData data = generate(d);
  const auto start = std::chrono::steady_clock::now();
  const FittedModel m = fit_nb(data.X, data.dataset.y);
  const double fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const ResidualSet rs = pearson(m, data.X, data.dataset.y, g_threads);
  const double rel = std::abs(rs.pearson_statistic - rs.df) / rs.df;
  const bool pass = m.converged && rs.df == 43158.0 && rel <= 0.05 && fit_seconds < 60.0;
  return {pass, fmt("PS %.2f vs df %.0f (%.2f%% off, tol 5%%); k=%zu; fit %.1f s (limit 60 s)",
                    rs.pearson_statistic, rs.df, 100 * rel, m.k(), fit_seconds)};
}

// 9 -------------------------------------------------------------------------
Outcome deviance_identity() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t y = std::uniform_int_distribution<std::uint64_t>(0, 300)(rng);
    const double theta = std::exp(-3.0 + 8.0 * u(rng));
    const double r = std::exp(-4.0 + 5.5 * u(rng));
    const double saturated = y == 0 ? 0.0 : nb_log_pmf(y, NbParams(static_cast<double>(y), r));
    const double gap = 2.0 * (saturated - nb_log_pmf(y, NbParams(theta, r)));
    worst = std::max(worst, std::abs(nb_deviance_squared(y, theta, r) - gap));
  }
  bool exact_zero = true;
  for (std::uint64_t y : {1ull, 2ull, 7ull, 100ull, 2672ull}) {
    for (double r : {0.01, 0.6425, 1.61933, 5.0}) {
      exact_zero &= nb_deviance_squared(y, static_cast<double>(y), r) == 0.0;
    }
  }
  return {worst < 1e-9 && exact_zero,
          fmt("max |d^2 - 2[l(y) - l(theta)]| = %.2e over 1000 triples (tol 1e-9); y = theta gives 0: %s",
              worst, exact_zero ? "yes" : "no")};
}

// 10 ------------------------------------------------------------------------
Outcome hurdle_collapse() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 300, k = 3;
    const Eigen::MatrixXd X = random_design(rng, n, k);
    Eigen::VectorXd beta(k);
    for (std::size_t j = 0; j < k; ++j) beta[j] = u(rng);
    const NbRegParams p{beta, std::log(0.05) + 2.5 * (u(rng) + 1.0)};
    const Eigen::VectorXd theta = link_mean(X, beta);
    Engine e = make_engine(100, static_cast<std::uint64_t>(inst));
    Counts y(n);
    Eigen::VectorXd phi(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = draw_nb(NbParams(theta[i], p.r()), e);
      phi[i] = nb_zero_prob(NbParams(theta[i], p.r()));
    }
    const double hurdle = hnb_loglik_given_phi(p, X, phi, y).total();
    const double nb = nb_loglik(p, X, y);
    worst = std::max(worst, std::abs(hurdle - nb) / std::abs(nb));
  }
  return {worst <= 1e-12, fmt("max relative |hurdle - NB| = %.2e over 100 instances (tol 1e-12, "
                              "floating-point reading of 'exactly')",
                              worst)};
}

// 11 ------------------------------------------------------------------------
Outcome approximation_audit() {
  std::ostringstream errs;
  double previous = INFINITY;
  bool monotone = true;
  double e1 = 0, e10 = 0;
  for (double z : {1.0, 2.0, 5.0, 10.0, 50.0}) {
    const double err = std::abs(ln_gamma_approx(z) - ln_gamma(z));
    monotone &= err < previous;
    previous = err;
    if (z == 1.0) e1 = err;
    if (z == 10.0) e10 = err;
    errs << " z=" << z << ":" << fmt("%.3e", err);
  }
  const bool pass = e1 < 1e-3 && e10 < 1e-9 && monotone;
  return {pass, "errors" + errs.str() + fmt("; need <1e-3 at z=1, <1e-9 at z=10; monotone: %s",
                                            monotone ? "yes" : "no")};
}

// 12 ------------------------------------------------------------------------
Outcome moment_audit() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  fs::create_directories(g_report_dir);
  std::ofstream csv(g_report_dir / "hnb_variance_audit.csv", std::ios::binary);
  csv << "theta,r,phi,mean,variance_summation,variance_from_pmf,variance_as_printed,"
         "relative_gap_summation_pmf,relative_gap_printed\r\n";
  double worst = 0.0, printed_worst = 0.0, printed_best = INFINITY;
  auto audit = [&](double theta, double r, double phi) {
    const HurdleParams h(NbParams(theta, r), phi);
    const Moments m = hnb_mean_var(h);
    const double closed = hnb_variance_closed_form(h);
    const double printed = hnb_variance_as_printed(h);
    const double gap = std::abs(m.variance - closed) / closed;
    const double pgap = std::abs(printed - m.variance) / m.variance;
    worst = std::max(worst, gap);
    printed_worst = std::max(printed_worst, pgap);
    printed_best = std::min(printed_best, pgap);
    csv << fmt("%.10g,%.10g,%.10g,%.12g,%.12g,%.12g,%.12g,%.3e,%.3e\r\n", theta, r, phi, m.mean,
               m.variance, closed, printed, gap, pgap);
  };
  audit(2.0, 0.5, 0.5);
  audit(1.0, 1.0, 0.5);
  audit(23.4883, 2.42694, 0.0552);
  audit(27.3193, 1.61933, 0.0552);
  for (int i = 0; i < 200; ++i) {
    audit(std::exp(-2.0 + 6.0 * u(rng)), std::exp(-4.0 + 5.0 * u(rng)), 0.95 * u(rng));
  }
  csv.close();
  std::ofstream md(g_report_dir / "hnb_variance_audit.md");
  md << "# Hurdle NB variance audit\n\n"
     << "Variance by truncated summation compared with the variance derived from the hurdle pmf,\n"
     << "mean * (1 + theta (1 + r) - mean), and with the published expression read literally,\n"
     << "mean * { phi + (1 - p0) + mean / (1 - phi) * [ r (1 - p0) + phi - p0 ] }.\n\n"
     << fmt("- cases: 204 (rows in hnb_variance_audit.csv)\n"
            "- max relative gap, summation vs pmf-derived: %.3e\n"
            "- relative gap, summation vs published expression: min %.3e, max %.3e\n",
            worst, printed_best, printed_worst)
     << "\nThe published expression does not reproduce the variance of the hurdle pmf.\n";
  const bool pass = worst <= 1e-9 && fs::exists(g_report_dir / "hnb_variance_audit.csv");
  return {pass, fmt("summation vs pmf-derived max rel gap %.2e (tol 1e-9); printed expression off by "
                    "%.1e..%.1e relative; report in %s",
                    worst, printed_best, printed_worst, g_report_dir.string().c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  g_threads = std::max(1u, std::thread::hardware_concurrency());
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (!std::strcmp(argv[i], "--report-dir") && i + 1 < argc) {
      g_report_dir = argv[++i];
    } else if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) {
      g_threads = static_cast<unsigned>(std::max(1, std::atoi(argv[++i])));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--report-dir DIR] [--threads T]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(g_report_dir);

  const std::vector<Criterion> criteria = {
      {1, "IRR transformation reproduction", 1.0, irr_reproduction},
      {2, "Geometric and Poisson limits", 1.0, limit_identities},
      {3, "Normalization over adaptive support", 5.0, normalization},
      {4, "Analytic scores vs finite differences", 10.0, gradients},
      {5, "Intercept-only stationarity", 60.0, stationarity},
      {6, "Parameter recovery within 3 SE", 600.0, recovery},
      {7, "AIC ordering HNB < NB < P", 600.0, aic_ordering},
      {8, "Pearson calibration at paper scale", 600.0, pearson_calibration},
      {9, "Deviance identity", 60.0, deviance_identity},
      {10, "Hurdle collapse to NB", 60.0, hurdle_collapse},
      {11, "Log-gamma approximation audit", 60.0, approximation_audit},
      {12, "Hurdle variance audit", 60.0, moment_audit},
  };

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %2d %s: %s; %.2f s (budget %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), seconds, c.budget_seconds);
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
