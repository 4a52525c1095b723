#include <benchmark/benchmark.h>

#include "mprobe/data_gen.hpp"
#include "mprobe/diagnostics.hpp"
#include "mprobe/sampler.hpp"

namespace {

void BM_generate_ensemble_bernoulli(benchmark::State& state) {
  const auto task = mprobe::TaskSpec::bernoulli(0.5);
  const auto data = mprobe::generate_dataset(task, 50, 1, 1);
  const mprobe::BetaBernoulliModel model;
  mprobe::SamplingProtocol protocol;
  protocol.num_paths = 200;
  protocol.path_length = static_cast<int>(state.range(0));
  protocol.ensemble_seed = 7;
  for (auto _ : state)
    benchmark::DoNotOptimize(mprobe::generate_ensemble(model, protocol, data));
}
BENCHMARK(BM_generate_ensemble_bernoulli)->Arg(24)->Arg(100);

void BM_generate_ensemble_gaussian(benchmark::State& state) {
  const auto task = mprobe::TaskSpec::gaussian(-1.0);
  const auto data = mprobe::generate_dataset(task, 100, 1, 1);
  const mprobe::GaussianConjugateModel model;
  mprobe::SamplingProtocol protocol;
  protocol.num_paths = 200;
  protocol.path_length = static_cast<int>(state.range(0));
  protocol.ensemble_seed = 7;
  for (auto _ : state)
    benchmark::DoNotOptimize(mprobe::generate_ensemble(model, protocol, data));
}
BENCHMARK(BM_generate_ensemble_gaussian)->Arg(50);

void BM_bootstrap_t1(benchmark::State& state) {
  const auto task = mprobe::TaskSpec::bernoulli(0.5);
  const auto data = mprobe::generate_dataset(task, 50, 1, 1);
  const mprobe::BetaBernoulliModel model;
  mprobe::SamplingProtocol protocol;
  protocol.num_paths = 100;
  protocol.path_length = 24;
  const mprobe::StatisticSpec spec =
      mprobe::StatisticSpec::t1_spec(mprobe::TestFunction::identity());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mprobe::bootstrap_ci(model, data, protocol, spec, static_cast<int>(state.range(0)), 0.95, 3));
  }
}
BENCHMARK(BM_bootstrap_t1)->Arg(50);

}  // namespace
