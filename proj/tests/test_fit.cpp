#include <doctest.h>

#include <cmath>
#include <numeric>

#include "citereg/errors.hpp"
#include "citereg/fit.hpp"
#include "citereg/optimize.hpp"
#include "support.hpp"

using namespace citereg;
using testsupport::random_design;

namespace {

double mean_of(const Counts& y) {
  return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

Counts nb_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double r, std::uint64_t seed) {
  Engine e = make_engine(seed);
  const Eigen::VectorXd theta = link_mean(X, beta);
  Counts y(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) y[i] = draw_nb(NbParams(theta[i], r), e);
  return y;
}

void check_within_3se(const FittedModel& m, const std::vector<double>& truth) {
  const Eigen::VectorXd est = m.natural_estimates(), se = m.natural_std_errors();
  REQUIRE(static_cast<std::size_t>(est.size()) == truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j) {
    INFO("parameter " << j << " estimate " << est[j] << " truth " << truth[j] << " se " << se[j]);
    CHECK(std::abs(est[j] - truth[j]) <= 3 * se[j]);
  }
}

}  // namespace

TEST_CASE("family codes") {
  CHECK(family_code(Family::Poisson) == "P");
  CHECK(parse_family("nb") == Family::NegativeBinomial);
  CHECK(parse_family("HNB") == Family::HurdleNegativeBinomial);
  CHECK_THROWS_AS(parse_family("ZINB"), ConfigError);
}

TEST_CASE("intercept-only Poisson recovers the sample mean") {
  Counts y;
  for (int i = 0; i < 10000; ++i) y.push_back(static_cast<std::uint64_t>((i * 37) % 55));
  const FittedModel m = fit_homogeneous(Family::Poisson, y);
  CHECK(m.converged);
  CHECK(std::exp(m.beta()[0]) == doctest::Approx(mean_of(y)).epsilon(1e-6));
  CHECK(m.num_params() == 1);

  const Counts c(20, 7);
  const FittedModel mc = fit_homogeneous(Family::Poisson, c);
  CHECK(mc.beta()[0] == doctest::Approx(std::log(7.0)).epsilon(1e-8));
  CHECK(mc.loglik == doctest::Approx(20 * poisson_log_pmf(7, 7.0)).epsilon(1e-10));
}

TEST_CASE("intercept-only Poisson at the paper's mean") {
  // 27.3193 = 273193 / 10000, realised exactly by a two-point sample
  Counts y(10000, 27);
  for (int i = 0; i < 3193; ++i) y[i] = 28;
  REQUIRE(mean_of(y) == doctest::Approx(27.3193).epsilon(1e-12));
  const FittedModel m = fit_homogeneous(Family::Poisson, y);
  CHECK(std::exp(m.beta()[0]) == doctest::Approx(27.3193).epsilon(1e-6));
}

TEST_CASE("simulated Poisson regression") {
  const Eigen::MatrixXd X = random_design(50000, 2);
  Eigen::VectorXd beta(2);
  beta << 0.5, 0.3;
  Engine e = make_engine(17);
  const Eigen::VectorXd theta = link_mean(X, beta);
  Counts y(50000);
  for (int i = 0; i < 50000; ++i) y[i] = draw_poisson(theta[i], e);
  const FittedModel m = fit_poisson(DesignMatrix::from_matrix(X), y);
  CHECK(m.converged);
  check_within_3se(m, {0.5, 0.3});
}

TEST_CASE("intercept-only NB returns the sample mean") {
  const Counts y = sample(NbParams(6.0, 0.9), 5000, 3);
  const FittedModel m = fit_homogeneous(Family::NegativeBinomial, y);
  CHECK(m.converged);
  CHECK(std::exp(m.beta()[0]) == doctest::Approx(mean_of(y)).epsilon(1e-6));
  CHECK(m.num_params() == 2);
  CHECK(m.homogeneous().r.has_value());
}

TEST_CASE("NB on constant data hits the Poisson boundary") {
  const Counts y{3, 3, 3};
  const FittedModel m = fit_homogeneous(Family::NegativeBinomial, y);
  CHECK(m.homogeneous().theta == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(m.has_warning(fit_warning::kPoissonBoundary));
}

TEST_CASE("simulated NB regression") {
  const Eigen::MatrixXd X = random_design(40000, 3);
  Eigen::VectorXd beta(3);
  beta << 1.0, -0.5, 0.25;
  const Counts y = nb_response(X, beta, 0.7, 29);
  const FittedModel m = fit_nb(DesignMatrix::from_matrix(X), y);
  CHECK(m.converged);
  CHECK(m.warnings.empty());
  check_within_3se(m, {1.0, -0.5, 0.25, 0.7});

  SUBCASE("stationarity at the reported optimum") {
    const Eigen::VectorXd g = nb_score(m.nb_params(), X, y);
    CHECK(max_abs(g) < FitOptions{}.gradient_tolerance * (1 + std::abs(m.loglik)));
    CHECK(m.gradient_norm == doctest::Approx(max_abs(g)).epsilon(1e-6));
  }
  SUBCASE("covariance is symmetric with a positive diagonal") {
    CHECK((m.covariance - m.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.covariance.diagonal().array() > 0).all());
    CHECK(m.covariance_natural(3, 3) == doctest::Approx(m.covariance(3, 3) * m.r() * m.r()));
  }
  SUBCASE("covariance stable under doubling the Hessian step") {
    FitOptions o;
    o.hessian_step = 2e-5;
    const FittedModel m2 = fit_nb(DesignMatrix::from_matrix(X), y, o);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        const double scale = std::sqrt(m.covariance(i, i) * m.covariance(j, j));
        CHECK(std::abs(m.covariance(i, j) - m2.covariance(i, j)) <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("refitting from the optimum and determinism") {
  const Eigen::MatrixXd X = random_design(3000, 3);
  Eigen::VectorXd beta(3);
  beta << 0.8, 0.3, -0.2;
  const Counts y = nb_response(X, beta, 1.3, 41);
  const DesignMatrix D = DesignMatrix::from_matrix(X);
  const FittedModel a = fit_nb(D, y), b = fit_nb(D, y);
  CHECK(a.params == b.params);
  CHECK(a.covariance == b.covariance);
  CHECK(a.loglik == b.loglik);

  const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const NbRegParams p{x.head(3), x[3]};
    if (g) *g = nb_score(p, X, y);
    return nb_loglik(p, X, y);
  };
  const AscentResult again = maximize_bfgs(f, a.params, AscentOptions{});
  CHECK(std::abs(again.value - a.loglik) < 1e-8);
}

TEST_CASE("equi-dispersed data drive r toward zero") {
  const Eigen::MatrixXd X = random_design(5000, 2);
  Eigen::VectorXd beta(2);
  beta << 1.0, 0.5;
  Engine e = make_engine(5);
  const Eigen::VectorXd theta = link_mean(X, beta);
  Counts y(5000);
  for (int i = 0; i < 5000; ++i) y[i] = draw_poisson(theta[i], e);
  const DesignMatrix D = DesignMatrix::from_matrix(X);
  const FittedModel p = fit_poisson(D, y), nb = fit_nb(D, y);
  CHECK(nb.r() < 0.05);
  CHECK(std::abs(nb.loglik - p.loglik) < 0.5);
  CHECK(nb.loglik >= p.loglik - 1e-6);
}

TEST_CASE("intercept-only hurdle recovers the zero fraction") {
  Counts y = sample(HurdleParams(NbParams(4, 0.8), 0.3), 20000, 8);
  const double zero_fraction =
      static_cast<double>(std::count(y.begin(), y.end(), 0u)) / static_cast<double>(y.size());
  const FittedModel m = fit_homogeneous(Family::HurdleNegativeBinomial, y);
  CHECK(m.converged);
  CHECK(std::abs(*m.homogeneous().phi - zero_fraction) < 1e-8);
  CHECK(m.num_params() == 3);
}

TEST_CASE("tiny homogeneous hurdle sample") {
  const Counts y{0, 0, 1, 2};
  const DesignMatrix X = DesignMatrix::intercept_only(4);
  const FittedModel m = fit_hnb(X, X, y);
  CHECK(*m.homogeneous().phi == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("homogeneous hurdle at the paper's estimates") {
  const Counts y = sample(HurdleParams(NbParams(23.4883, 2.42694), 0.0552), 100000, 2014);
  const FittedModel m = fit_homogeneous(Family::HurdleNegativeBinomial, y);
  CHECK(m.converged);
  const Eigen::VectorXd est = m.natural_estimates(), se = m.natural_std_errors();
  CHECK(std::abs(std::exp(est[0]) - 23.4883) <= 3 * std::exp(est[0]) * se[0]);
  CHECK(std::abs(est[1] - 2.42694) <= 3 * se[1]);
  const double logit = std::log(0.0552 / (1 - 0.0552));
  CHECK(std::abs(est[2] - logit) <= 3 * se[2]);
}

TEST_CASE("simulated hurdle regression") {
  const std::size_t n = 40000;
  const Eigen::MatrixXd X = random_design(n, 2);
  Eigen::VectorXd beta(2), delta(2);
  beta << 1.2, 0.4;
  delta << -2.0, 1.0;
  const Eigen::VectorXd theta = link_mean(X, beta), phi = link_hurdle(X, delta);
  Engine e = make_engine(99);
  Counts y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = draw_hnb(HurdleParams(NbParams(theta[i], 0.6), phi[i]), e);
  const DesignMatrix D = DesignMatrix::from_matrix(X);
  const FittedModel m = fit_hnb(D, D, y);
  CHECK(m.converged);
  check_within_3se(m, {1.2, 0.4, 0.6, -2.0, 1.0});

  SUBCASE("joint loglik is the sum of the part maxima") {
    CHECK(m.loglik == m.loglik_binary + m.loglik_truncated);
    const HurdleLoglik ll = hnb_loglik(m.hnb_params(), X, X, y);
    CHECK(ll.binary == doctest::Approx(m.loglik_binary).epsilon(1e-14));
    CHECK(ll.truncated == doctest::Approx(m.loglik_truncated).epsilon(1e-14));
  }
  SUBCASE("covariance is block diagonal") {
    CHECK(m.covariance.block(0, 3, 3, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.covariance.block(3, 0, 2, 3).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zeros only affect the hurdle equation") {
  const Eigen::MatrixXd Xp = random_design(2000, 2);
  Eigen::VectorXd beta(2);
  beta << 1.0, 0.5;
  Counts pos = nb_response(Xp, beta, 0.8, 123);
  std::vector<bool> keep(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) keep[i] = pos[i] > 0;
  const DesignMatrix P = DesignMatrix::from_matrix(Xp).subset_rows(keep);
  Counts positives;
  for (auto v : pos) {
    if (v > 0) positives.push_back(v);
  }

  auto with_zeros = [&](std::size_t zeros) {
    Eigen::MatrixXd X(P.rows() + zeros, 2);
    X.topRows(P.rows()) = P.X;
    X.bottomRows(zeros) = random_design(zeros, 2);
    Counts y = positives;
    y.resize(P.rows() + zeros, 0);
    const DesignMatrix D = DesignMatrix::from_matrix(X);
    return fit_hnb(D, DesignMatrix::intercept_only(D.rows()), y);
  };
  const FittedModel a = with_zeros(100), b = with_zeros(700);
  CHECK(a.beta() == b.beta());
  CHECK(a.log_r() == b.log_r());
  CHECK(a.loglik_truncated == b.loglik_truncated);
  CHECK(a.delta() != b.delta());
}

TEST_CASE("structural errors") {
  const DesignMatrix X = DesignMatrix::intercept_only(4);
  CHECK_THROWS_AS(fit_hnb(X, X, Counts{0, 0, 0, 0}), StructuralError);
  CHECK_THROWS_AS(fit_hnb(X, X, Counts{1, 2, 3, 4}), StructuralError);
  CHECK_THROWS_AS(fit_poisson(X, Counts{0, 0, 0, 0}), StructuralError);
  CHECK_THROWS_AS(fit_homogeneous(Family::NegativeBinomial, Counts{}), StructuralError);
  CHECK_THROWS_AS(fit_poisson(X, Counts{1, 2, 3}), DimensionError);

  Eigen::MatrixXd m(6, 3);
  m << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10, 1, 6, 12;
  CHECK_THROWS_AS(fit_poisson(DesignMatrix::from_matrix(m), Counts{1, 2, 3, 4, 5, 6}),
                  RankDeficientError);
}

TEST_CASE("separation in the hurdle part names the column") {
  Eigen::MatrixXd m(8, 2);
  m << 1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1;
  const DesignMatrix X = DesignMatrix::from_matrix(m, {"(Intercept)", "funded"});
  const Counts y{0, 1, 0, 2, 3, 4, 1, 2};  // no zeros where funded = 1
  try {
    fit_hnb(X, X, y);
    FAIL("expected SeparationError");
  } catch (const SeparationError& e) {
    CHECK(e.column() == "funded");
    CHECK(std::string(e.what()).find("funded") != std::string::npos);
  }
}

TEST_CASE("non-convergence is flagged, not thrown") {
  const Eigen::MatrixXd X = random_design(2000, 3);
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.6, -0.4;
  const Counts y = nb_response(X, beta, 0.7, 77);
  FitOptions o;
  o.max_iterations = 1;
  const FittedModel m = fit_nb(DesignMatrix::from_matrix(X), y, o);
  CHECK_FALSE(m.converged);
  CHECK(m.has_warning(fit_warning::kNotConverged));
}

TEST_CASE("invalid options") {
  FitOptions o;
  o.hessian_step = 0;
  CHECK_THROWS_AS(fit_homogeneous(Family::Poisson, Counts{1, 2, 3}, o), ConfigError);
}

TEST_CASE("parameter metadata") {
  const Counts y = sample(HurdleParams(NbParams(4, 0.8), 0.3), 3000, 8);
  const FittedModel m = fit_homogeneous(Family::HurdleNegativeBinomial, y);
  const auto info = m.parameters();
  REQUIRE(info.size() == 3);
  CHECK(info[0].equation == Equation::Mean);
  CHECK(info[1].equation == Equation::Dispersion);
  CHECK(info[2].equation == Equation::Hurdle);
  CHECK(m.natural_estimates()[1] == doctest::Approx(m.r()));
  CHECK_THROWS_AS(fit_homogeneous(Family::Poisson, y).log_r(), UnsupportedFamilyError);
}

TEST_CASE("optimizer on a concave quadratic") {
  const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = Eigen::Vector2d(-2 * (x[0] - 1), -4 * (x[1] + 2));
    return -(x[0] - 1) * (x[0] - 1) - 2 * (x[1] + 2) * (x[1] + 2);
  };
  const AscentResult r = maximize_bfgs(f, Eigen::Vector2d(5, 5), AscentOptions{});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-7));
  const Eigen::MatrixXd H = numerical_hessian(f, r.x, 1e-5);
  CHECK(H(0, 0) == doctest::Approx(-2.0).epsilon(1e-8));
  CHECK(H(1, 1) == doctest::Approx(-4.0).epsilon(1e-8));
  CHECK(std::abs(H(0, 1)) < 1e-8);
}
