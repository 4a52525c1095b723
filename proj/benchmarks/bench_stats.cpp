#include <benchmark/benchmark.h>

#include "mprobe/diagnostics.hpp"
#include "mprobe/rng.hpp"
#include "mprobe/stats.hpp"

namespace {

std::vector<double> random_values(std::size_t n) {
  mprobe::RngStream rng(1, 1);
  std::vector<double> values(n);
  for (double& v : values) v = rng.normal01();
  return values;
}

mprobe::PathEnsemble synthetic_ensemble(int paths, int length) {
  mprobe::RngStream rng(2, 2);
  mprobe::PathEnsemble ensemble;
  ensemble.kind = mprobe::TaskKind::Bernoulli;
  ensemble.nominal_paths = paths;
  ensemble.nominal_length = length;
  for (int j = 0; j < paths; ++j) {
    mprobe::SamplePath path;
    for (int i = 0; i < length; ++i)
      path.values.push_back(mprobe::Sample::binary(rng.bernoulli(0.5) ? 1 : 0));
    ensemble.paths.push_back(std::move(path));
  }
  ensemble.retained.assign(static_cast<std::size_t>(paths), true);
  return ensemble;
}

void BM_quantile(benchmark::State& state) {
  const auto values = random_values(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mprobe::quantile(values, 0.75));
}
BENCHMARK(BM_quantile)->Arg(1000)->Arg(10000);

void BM_t1(benchmark::State& state) {
  const auto ensemble = synthetic_ensemble(200, static_cast<int>(state.range(0)));
  const auto g = mprobe::TestFunction::identity();
  for (auto _ : state) benchmark::DoNotOptimize(mprobe::t1(ensemble, g));
}
BENCHMARK(BM_t1)->Arg(24)->Arg(100);

void BM_t2(benchmark::State& state) {
  const auto ensemble = synthetic_ensemble(200, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mprobe::t2(ensemble, 3));
}
BENCHMARK(BM_t2)->Arg(24)->Arg(100);

void BM_filter(benchmark::State& state) {
  const auto ensemble = synthetic_ensemble(static_cast<int>(state.range(0)), 50);
  for (auto _ : state) benchmark::DoNotOptimize(mprobe::filter_outlier_paths(ensemble));
}
BENCHMARK(BM_filter)->Arg(200)->Arg(1000);

}  // namespace
