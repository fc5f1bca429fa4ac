#include <benchmark/benchmark.h>

#include <optional>

#include "qsmooth/filtering.hpp"
#include "qsmooth/smoothing.hpp"
#include "qsmooth/unraveling.hpp"

using namespace qsmooth;

namespace {

ModelParams short_run() {
  ModelParams p;
  p.t_f = 1.0;
  return p;
}

TrueTrajectory sample_truth(Setup d_o, Setup d_v, const ModelParams& p) {
  Engine rng = make_stream(1, StreamKind::true_trajectory, {0});
  return generate_true_trajectory(d_o, d_v, QubitState::ground(), p, rng);
}

void true_trajectory(benchmark::State& state) {
  const ModelParams p = short_run();
  Engine rng = make_stream(2, StreamKind::true_trajectory, {0});
  for (auto _ : state) benchmark::DoNotOptimize(generate_true_trajectory(Setup::Y, Setup::X, QubitState::ground(), p, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.steps()));
}
BENCHMARK(true_trajectory);

void filtering(benchmark::State& state) {
  const ModelParams p = short_run();
  const TrueTrajectory t = sample_truth(Setup::N, Setup::Y, p);
  for (auto _ : state) benchmark::DoNotOptimize(filter(t.record_O, QubitState::ground(), p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.steps()));
}
BENCHMARK(filtering);

void effect_pass(benchmark::State& state) {
  const ModelParams p = short_run();
  const TrueTrajectory t = sample_truth(Setup::X, Setup::N, p);
  for (auto _ : state) benchmark::DoNotOptimize(backward_effect(t.record_O, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.steps()));
}
BENCHMARK(effect_pass);

// One step of the hypothetical-record ensemble, per assumed unobserved setup.
void sampler_advance(benchmark::State& state) {
  const auto assumed = static_cast<Setup>(state.range(0));
  const std::size_t n = static_cast<std::size_t>(state.range(1));
  ModelParams p;
  const TrueTrajectory t = sample_truth(Setup::Y, Setup::N, p);
  Engine rng = make_stream(3, StreamKind::hypothetical, {0});
  std::optional<HypotheticalSampler> sampler;
  sampler.emplace(t.record_O, assumed, n, QubitState::ground(), p, rng, 0.5);
  for (auto _ : state) {
    if (sampler->step() == p.steps()) {
      state.PauseTiming();
      sampler.emplace(t.record_O, assumed, n, QubitState::ground(), p, rng, 0.5);
      state.ResumeTiming();
    }
    sampler->advance();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(sampler_advance)->ArgsProduct({{static_cast<long>(Setup::N), static_cast<long>(Setup::X)}, {1000}});

void smoothing_run(benchmark::State& state) {
  const ModelParams p = short_run();
  const TrueTrajectory t = sample_truth(Setup::Y, Setup::X, p);
  Engine rng = make_stream(4, StreamKind::hypothetical, {0});
  SmootherOptions o;
  o.stride = 10;
  for (auto _ : state) benchmark::DoNotOptimize(smooth(t.record_O, Setup::X, 1000, QubitState::ground(), p, rng, o));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.steps()) * 1000);
}
BENCHMARK(smoothing_run)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
