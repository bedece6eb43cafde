#include <benchmark/benchmark.h>

#include <optional>
#include <vector>

#include "attnet/community.hpp"
#include "attnet/synth.hpp"

namespace {

const attnet::PlantedGraph& planted(std::size_t blocks) {
  static std::vector<std::optional<attnet::PlantedGraph>> cache(16);
  if (!cache[blocks]) {
    std::vector<std::size_t> sizes(blocks, 200);
    cache[blocks] = attnet::planted_partition_graph(sizes, 0.1, 0.001, 7);
  }
  return *cache[blocks];
}

void BM_Louvain(benchmark::State& state) {
  const auto& pg = planted(static_cast<std::size_t>(state.range(0)));
  attnet::LouvainConfig cfg;
  for (auto _ : state) {
    auto p = attnet::louvain(pg.graph, cfg);
    benchmark::DoNotOptimize(p.modularity);
    ++cfg.seed;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pg.graph.num_entries()));
}
BENCHMARK(BM_Louvain)->Arg(2)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Consensus(benchmark::State& state) {
  const auto& pg = planted(5);
  attnet::LouvainConfig cfg;
  for (auto _ : state) {
    auto c = attnet::consensus(pg.graph, cfg, static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(c.modularity);
  }
}
BENCHMARK(BM_Consensus)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Modularity(benchmark::State& state) {
  const auto& pg = planted(10);
  for (auto _ : state) benchmark::DoNotOptimize(attnet::modularity(pg.graph, pg.truth));
}
BENCHMARK(BM_Modularity);

}  // namespace
