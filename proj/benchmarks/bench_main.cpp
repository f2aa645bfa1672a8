#include <benchmark/benchmark.h>

#include <random>

#include "citereg/fit.hpp"
#include "citereg/likelihood.hpp"
#include "citereg/simulate.hpp"
#include "citereg/specfun.hpp"

using namespace citereg;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Counts y;
  NbRegParams params;
};

Problem make_problem(std::size_t n, std::size_t k) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Problem p;
  p.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 0.1);
  beta[0] = 1.5;
  for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
    p.X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p.X.cols(); ++j) p.X(i, j) = u(rng);
  }
  p.params = NbRegParams{beta, std::log(0.7)};
  const Eigen::VectorXd theta = link_mean(p.X, beta);
  Engine e = make_engine(17, 0);
  p.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.y[i] = draw_nb(NbParams(theta[static_cast<Eigen::Index>(i)], 0.7), e);
  return p;
}

void BM_ln_gamma(benchmark::State& state) {
  double z = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ln_gamma(z));
    z = z < 1e6 ? z * 1.37 : 0.5;
  }
}
BENCHMARK(BM_ln_gamma);

void BM_nb_loglik(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(nb_loglik(p.params, p.X, p.y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_nb_loglik)->Arg(1000)->Arg(43190);

void BM_nb_score(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(nb_score(p.params, p.X, p.y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_nb_score)->Arg(1000)->Arg(43190);

void BM_fit_nb(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 8);
  DesignMatrix X;
  X.X = p.X;
  for (Eigen::Index j = 0; j < p.X.cols(); ++j) {
    X.labels.push_back(j == 0 ? DesignMatrix::kIntercept : "x" + std::to_string(j));
    X.sources.push_back(j == 0 ? "" : X.labels.back());
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_nb(X, p.y));
}
BENCHMARK(BM_fit_nb)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
