#include <benchmark/benchmark.h>

#include "dpmlab/divergences.hpp"
#include "dpmlab/index_calculus.hpp"
#include "dpmlab/kernel_approx.hpp"
#include "dpmlab/posterior_gibbs.hpp"
#include "dpmlab/sieve_entropy.hpp"

using namespace dpmlab;

static void BM_CoefficientTable(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cd_coefficients(d, 8));
}
BENCHMARK(BM_CoefficientTable)->Arg(1)->Arg(2)->Arg(3);

static void BM_ConvolveOnGrid(benchmark::State& state) {
  const auto f = make_standard_normal(1);
  const GridSpec g = GridSpec::cube(1, 12.0, static_cast<int>(state.range(0)));
  const auto v = f->values_on_grid(g);
  for (auto _ : state) benchmark::DoNotOptimize(convolve_on_grid(g, v, 0.2));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvolveOnGrid)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity(benchmark::oNLogN);

static void BM_HellingerQuadrature(benchmark::State& state) {
  const auto p = make_standard_normal(1);
  const auto q = make_spline_density(3, 1);
  const GridSpec g = GridSpec::cube(1, 12.0, static_cast<int>(state.range(0)));
  const auto pp = as_point_function(*p), qp = as_point_function(*q);
  for (auto _ : state) benchmark::DoNotOptimize(hellinger(pp, qp, g));
}
BENCHMARK(BM_HellingerQuadrature)->Arg(1 << 12)->Arg(1 << 14);

static void BM_GibbsChain(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng drng = make_stream(5, 0);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = draw_normal(drng);
  const auto prior = PriorSpec::inverse_wishart(1, 3.0, Eigen::MatrixXd::Identity(1, 1));
  GibbsOptions o;
  o.iterations = 600;
  o.burn_in = 100;
  o.thin = 5;
  for (auto _ : state) {
    Rng rng = make_stream(5, 1);
    benchmark::DoNotOptimize(run_gibbs(x, prior, o, rng));
  }
  state.SetItemsProcessed(state.iterations() * o.iterations);
}
BENCHMARK(BM_GibbsChain)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_NetEnumerate(benchmark::State& state) {
  SieveSpec spec;
  spec.epsilon = 0.2;
  spec.atoms = 3;
  const auto net = build_net(spec);
  const auto limit = static_cast<std::size_t>(state.range(0));
  std::int64_t visited = 0;
  for (auto _ : state) {
    std::size_t seen = 0;
    net.enumerate([&](const NetElement&) { ++seen; }, limit);
    benchmark::DoNotOptimize(seen);
    visited += static_cast<std::int64_t>(seen);
  }
  state.SetItemsProcessed(visited);
}
BENCHMARK(BM_NetEnumerate)->Arg(10000);

BENCHMARK_MAIN();
