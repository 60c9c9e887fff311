#include <benchmark/benchmark.h>

#include <numeric>

#include "cryptic/ghsom.hpp"
#include "cryptic/immune.hpp"
#include "cryptic/rng.hpp"
#include "cryptic/signature.hpp"

using namespace cryptic;

namespace {

std::vector<Symbol> random_symbols(std::size_t n, Rng& rng) {
  std::vector<Symbol> s(n);
  for (auto& c : s) c = static_cast<Symbol>(rng.index(8));
  return s;
}

IntensityGrid random_grid(int size, Rng& rng) {
  IntensityGrid g;
  g.size = size;
  g.levels = 8;
  g.cells = random_symbols(std::size_t(size) * size, rng);
  return g;
}

void BM_Levenshtein(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_symbols(n, rng), b = random_symbols(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Levenshtein)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNSquared);

void BM_SignatureSimilarity(benchmark::State& state) {
  Rng rng(2);
  const int size = static_cast<int>(state.range(0));
  const auto a = ImageSignature::from_grid("a", random_grid(size, rng));
  const auto b = ImageSignature::from_grid("b", random_grid(size, rng));
  Rng trials(3);
  for (auto _ : state) benchmark::DoNotOptimize(signature_similarity(a, b, 32, trials));
}
BENCHMARK(BM_SignatureSimilarity)->Arg(31)->Arg(63);

Dataset blobs(std::size_t n, std::size_t dim) {
  Rng rng(4);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.ids.push_back("s" + std::to_string(i));
    std::vector<double> v(dim);
    const double c = double(i % 3) / 3.0;
    for (auto& x : v) x = c + rng.uniform(0.0, 0.2);
    d.vectors.push_back(std::move(v));
  }
  return d;
}

void BM_TrainMap(benchmark::State& state) {
  const auto data = blobs(static_cast<std::size_t>(state.range(0)), 5);
  std::vector<std::size_t> members(data.size());
  std::iota(members.begin(), members.end(), std::size_t{0});
  const GhsomConfig cfg;
  for (auto _ : state) {
    Rng rng(5);
    auto map = make_map(2, 2, data, members, rng);
    train_map(map, data, members, cfg, rng);
    benchmark::DoNotOptimize(map.units.data());
  }
}
BENCHMARK(BM_TrainMap)->Arg(200)->Arg(1000);

void BM_RunRecsa(benchmark::State& state) {
  Rng rng(6);
  TrainingSet data;
  for (int i = 0; i < 60; ++i) {
    const double c = i < 30 ? 0.25 : 0.75;
    data.samples.push_back({{c + rng.uniform(-0.05, 0.05), c + rng.uniform(-0.05, 0.05)}, i < 30});
  }
  CsaimConfig cfg;
  cfg.g_max = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_recsa(data, cfg, Rng(7)));
}
BENCHMARK(BM_RunRecsa)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
