#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "pdiff/density.hpp"
#include "pdiff/integrate.hpp"
#include "pdiff/lamperti.hpp"
#include "pdiff/malliavin.hpp"
#include "pdiff/rng.hpp"

namespace {

using namespace pdiff;

ValidatedSpec catalog() {
  ProblemSpec s;
  s.alpha = 0.1;
  s.drift = Coefficient::tanh(0.1);
  s.diffusion = Coefficient::sine(1.0, 1.0, 0.0, 2.0);
  return validate(s);
}

void BM_NoiseGenerate(benchmark::State& state) {
  const GridSpec grid(1.0, static_cast<std::size_t>(state.range(0)));
  std::uint64_t p = 0;
  for (auto _ : state) benchmark::DoNotOptimize(NoiseBlock::generate(1, p++, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NoiseGenerate)->Arg(1000)->Arg(100000);

void BM_EulerPath(benchmark::State& state) {
  const ValidatedSpec spec = catalog();
  const GridSpec grid(1.0, static_cast<std::size_t>(state.range(0)));
  const NoiseBlock noise = NoiseBlock::generate(1, 0, grid);
  for (auto _ : state) benchmark::DoNotOptimize(euler_path(spec, grid, noise));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerPath)->Arg(1000)->Arg(100000);

void BM_PropagateDerivative(benchmark::State& state) {
  const ValidatedSpec spec = catalog();
  const GridSpec grid(1.0, static_cast<std::size_t>(state.range(0)));
  const PathState path = euler_path(spec, grid, NoiseBlock::generate(1, 0, grid));
  for (auto _ : state) benchmark::DoNotOptimize(propagate_derivative(path, spec, grid));
}
BENCHMARK(BM_PropagateDerivative)->Arg(1000)->Arg(10000);

void BM_TransformBuild(benchmark::State& state) {
  const ValidatedSpec spec = catalog();
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_transform(spec.spec().diffusion, 0.0,
                                             default_transform_domain(spec),
                                             static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_TransformBuild)->Arg(16385);

void BM_TransformInverse(benchmark::State& state) {
  const ValidatedSpec spec = catalog();
  const TransformTable t = build_transform(spec.spec().diffusion, 0.0, default_transform_domain(spec));
  double z = t.range_lo();
  const double step = (t.range_hi() - t.range_lo()) / 1e6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t.inverse(z));
    z += step;
    if (z > t.range_hi()) z = t.range_lo();
  }
}
BENCHMARK(BM_TransformInverse);

void BM_Kde(benchmark::State& state) {
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  const CounterStream rng(3, 0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(i);
  const auto z = default_eval_grid(x);
  for (auto _ : state) benchmark::DoNotOptimize(kde(x, z, {.ladder = true}));
}
BENCHMARK(BM_Kde)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
