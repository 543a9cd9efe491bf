#include <benchmark/benchmark.h>

#include "tessperc/percolation.hpp"

using namespace tessperc;

namespace {

perc::ExperimentSpec spec_of(int workers) {
  perc::ExperimentSpec s;
  s.window = Window{{-10, -10}, {10, 10}};
  s.seed = 7;
  s.workers = workers;
  return s;
}

char one_crossing(const perc::ExperimentSpec& spec, std::size_t rep) {
  const auto t = spec.source.build(spec.window, spec.seed, rep);
  Stream s = perc::coloring_stream(spec.seed, rep);
  const auto c = perc::color(t, 0.5, s);
  return perc::crossing(t, c, {spec.window, perc::Direction::horizontal, perc::Color::black, tess::Adjacency::face});
}

void BM_CrossingSerial(benchmark::State& state) {
  const auto spec = spec_of(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto out = replicate_map_serial(n, [&](std::size_t rep) { return one_crossing(spec, rep); });
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CrossingParallel(benchmark::State& state) {
  const auto spec = spec_of(static_cast<int>(state.range(1)));
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto out = replicate_map(n, spec.workers, [&](std::size_t rep) { return one_crossing(spec, rep); });
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BuildVoronoi(benchmark::State& state) {
  const double half = static_cast<double>(state.range(0));
  perc::ExperimentSpec spec = spec_of(1);
  spec.window = Window{{-half, -half}, {half, half}};
  std::size_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(spec.source.build(spec.window, spec.seed, rep++).size());
}

}  // namespace

BENCHMARK(BM_CrossingSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossingParallel)->Args({64, 2})->Args({64, 4})->Args({64, 8})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BuildVoronoi)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
