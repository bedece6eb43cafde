#include <benchmark/benchmark.h>

#include <vector>

#include "attnet/attention.hpp"
#include "attnet/rng.hpp"

namespace {

void BM_HIndex(benchmark::State& state) {
  attnet::Rng rng(3);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(state.range(0)));
  for (auto& c : counts) c = rng.below(1000);
  for (auto _ : state) benchmark::DoNotOptimize(attnet::h_index(counts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HIndex)->Range(8, 1 << 16);

void BM_CompetitionRanks(benchmark::State& state) {
  attnet::Rng rng(4);
  std::vector<std::uint64_t> values(static_cast<std::size_t>(state.range(0)));
  for (auto& v : values) v = rng.below(100);
  for (auto _ : state) benchmark::DoNotOptimize(attnet::competition_ranks(values));
}
BENCHMARK(BM_CompetitionRanks)->Arg(4000);

void BM_Bootstrap(benchmark::State& state) {
  attnet::Rng rng(5);
  std::vector<double> ranks(1000);
  for (auto& r : ranks) r = static_cast<double>(rng.below(4000) + 1);
  attnet::BootstrapConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(attnet::bootstrap_mean_rank(ranks, cfg));
}
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);

}  // namespace
