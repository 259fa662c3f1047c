#include <benchmark/benchmark.h>

#include <vector>

#include "robreg/model.hpp"
#include "robreg/oracle.hpp"
#include "robreg/priors.hpp"
#include "robreg/sampler.hpp"

namespace {

using namespace robreg;

PriorFamily family_for(int index) {
  switch (index) {
    case 0: return PriorFamily::normal();
    case 1: return PriorFamily::student(4.0);
    case 2: return PriorFamily::lptn(0.95);
    default: return PriorFamily::ctn(0.98);
  }
}

void BM_PriorLogDensity(benchmark::State& state) {
  const auto f = family_for(static_cast<int>(state.range(0)));
  double z = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_density(f, z));
    z = z < 1e3 ? z * 1.7 : 0.1;
  }
  state.SetLabel(f.label());
}
BENCHMARK(BM_PriorLogDensity)->DenseRange(0, 3);

void BM_ReducedGradient(benchmark::State& state) {
  const auto t = PosteriorTarget::reduced(
      100, CoefficientPrior{1.0, 1.0, family_for(static_cast<int>(state.range(0)))});
  const std::vector<double> x{0.3, -0.05};
  std::vector<double> g(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(t.log_density_gradient(x, g));
  }
}
BENCHMARK(BM_ReducedGradient)->DenseRange(0, 3);

void BM_QuadratureMoments(benchmark::State& state) {
  const auto t = PosteriorTarget::reduced(
      100, CoefficientPrior{1.0, 1.0, family_for(static_cast<int>(state.range(0)))});
  for (auto _ : state) {
    benchmark::DoNotOptimize(quadrature_moments(t));
  }
}
BENCHMARK(BM_QuadratureMoments)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_LeapfrogTrajectory(benchmark::State& state) {
  const auto t = PosteriorTarget::reduced(100, CoefficientPrior{1.0, 1.0, PriorFamily::lptn(0.95)});
  std::vector<double> q{0.1, 0.0};
  std::vector<double> p{0.5, -0.5};
  std::vector<double> g(2);
  t.log_density_gradient(q, g);
  for (auto _ : state) {
    leapfrog(t, q, p, g, 0.02, 25);
    for (auto& pk : p) pk = -pk;
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_LeapfrogTrajectory);

}  // namespace

BENCHMARK_MAIN();
