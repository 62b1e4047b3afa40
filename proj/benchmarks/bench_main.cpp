#include <benchmark/benchmark.h>

#include <random>

#include "dualcache/dualcache.hpp"
#include "dualcache/synthetic.hpp"

using namespace dualcache;

namespace {

struct Setup {
  DatasetBundle bundle;
  DualEngine engine;
};

Setup makeSetup(std::size_t dim, std::size_t classes, std::size_t shots) {
  SyntheticSpec spec;
  spec.dim = dim;
  spec.classes = classes;
  spec.trainPerClass = shots;
  spec.testPerClass = 1000 / classes;
  auto bundle = makeClusterFixture(spec);
  const auto k = sampleShots(bundle.idTrain, shots, 1);
  SelectorConfig sel;
  const auto part = partitionChannels(computeChannelStats(k, sel), sel);
  AdapterConfig cfg;
  cfg.alpha = 1.0;
  cfg.beta = 5.5;
  cfg.tau = 0.3;
  auto engine = DualEngine::assemble(k, bundle.positiveText, bundle.negativeText, part, cfg);
  return {std::move(bundle), std::move(engine)};
}

void BM_ScoreBatch(benchmark::State& state) {
  const auto s = makeSetup(static_cast<std::size_t>(state.range(0)), 10, 16);
  const auto& queries = s.bundle.idTest.embeddings;
  const auto threads = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.engine.scoreBatch(queries, threads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(queries.rows()));
}
BENCHMARK(BM_ScoreBatch)->Args({64, 1})->Args({512, 1})->Args({512, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_Auroc(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> id(n), ood(n);
  for (auto& x : id) x = g(rng) + 1.0;
  for (auto& x : ood) x = g(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(id, ood));
    benchmark::DoNotOptimize(fprAtTpr(id, ood));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n));
}
BENCHMARK(BM_Auroc)->Range(1 << 10, 1 << 18);

void BM_ChannelStats(benchmark::State& state) {
  const auto s = makeSetup(512, 100, 16);
  const auto k = sampleShots(s.bundle.idTrain, 16, 1);
  SelectorConfig sel;
  for (auto _ : state) benchmark::DoNotOptimize(computeChannelStats(k, sel));
}
BENCHMARK(BM_ChannelStats)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
