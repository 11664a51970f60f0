// Serial reference vs OpenMP kernels. Arg 0 runs the plain reference (where
// one exists) or Execution::kSerial, arg 1 the parallel path.

#include <benchmark/benchmark.h>

#include "gazeact/forest.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/motion.hpp"
#include "gazeact/reference.hpp"
#include "gazeact/rng.hpp"
#include "gazeact/synthetic.hpp"
#include "gazeact/vocab.hpp"
#include "gazeact/windowing.hpp"

using namespace gazeact;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel; }

std::vector<double> signal(std::size_t n) {
  Rng rng(1);
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal(0.0, 50.0);
  return x;
}

void BM_MedianFilter(benchmark::State& state) {
  const auto x = signal(1 << 18);
  for (auto _ : state) {
    auto out = state.range(0) == 0 ? reference::median_filter(x, 5) : median_filter(x, 5, Execution::kParallel);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(x.size()));
}

void BM_HaarCwt(benchmark::State& state) {
  const auto x = signal(1 << 18);
  for (auto _ : state) {
    auto out = state.range(0) == 0 ? reference::haar_cwt(x, 10) : haar_cwt(x, 10, Execution::kParallel).values;
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(x.size()));
}

void BM_AssignWords(benchmark::State& state) {
  Rng rng(2);
  EmbeddingMatrix m;
  m.dim = kFc7Dim;
  m.values.resize(2000 * m.dim);
  for (float& v : m.values) v = static_cast<float>(rng.normal());
  VocabModel vocab;
  vocab.dim = m.dim;
  vocab.centers.assign(m.values.begin(), m.values.begin() + static_cast<long>(15 * m.dim));
  for (auto _ : state) {
    auto words = state.range(0) == 0 ? reference::assign_words(m, vocab) : assign_words(m, vocab, Execution::kParallel);
    benchmark::DoNotOptimize(words.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m.rows()));
}

void BM_WindowHistogram(benchmark::State& state) {
  Rng rng(3);
  std::vector<TimedSymbol> s(30 * 3600);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = {static_cast<double>(i) / 30.0, static_cast<std::uint32_t>(rng.index(25))};
  const TimeSpan span{0.0, static_cast<double>(s.size()) / 30.0};
  for (auto _ : state) {
    auto h = state.range(0) == 0 ? reference::window_histogram(s, 25, 25.0, 1.0, span)
                                 : window_histogram(s, 25, 25.0, 1.0, span, Execution::kParallel);
    benchmark::DoNotOptimize(h.data());
  }
}

void BM_KMeans(benchmark::State& state) {
  Rng rng(4);
  EmbeddingMatrix m;
  m.dim = 512;
  m.values.resize(1500 * m.dim);
  for (float& v : m.values) v = static_cast<float>(rng.normal());
  for (auto _ : state) {
    auto model = fit_kmeans(m, KMeansOptions{15, 0, 20, mode(state)});
    benchmark::DoNotOptimize(model.centers.data());
  }
}

void BM_TrainForest(benchmark::State& state) {
  Rng rng(5);
  Dataset d;
  d.n_features = 65;
  for (std::size_t i = 0; i < 3000; ++i) {
    const auto c = static_cast<std::uint32_t>(i % 5);
    for (std::size_t f = 0; f < d.n_features; ++f) d.x.push_back(rng.normal() + 0.3 * c * (f % 3 == 0));
    d.y.push_back(c);
  }
  ForestParams p;
  p.n_trees = 50;
  for (auto _ : state) {
    auto model = train_forest(d, {"a", "b", "c", "d", "e"}, p, mode(state));
    benchmark::DoNotOptimize(model.oob_error);
  }
}

void BM_PairFlow(benchmark::State& state) {
  Rng rng(6);
  const auto base = random_texture(640, 480, rng);
  std::vector<GrayImage> frames;
  for (int i = 0; i < 8; ++i) frames.push_back(translate(base, i, i / 2));
  const PipelineConfig config;
  for (auto _ : state) {
    auto flows = compute_flows(std::span<const GrayImage>(frames), config, mode(state));
    benchmark::DoNotOptimize(flows.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(frames.size() - 1));
}

}  // namespace

BENCHMARK(BM_MedianFilter)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HaarCwt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignWords)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WindowHistogram)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeans)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainForest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairFlow)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
