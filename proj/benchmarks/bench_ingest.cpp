#include <benchmark/benchmark.h>

#include <sstream>
#include <string>
#include <vector>

#include "attnet/graph.hpp"
#include "attnet/ingest.hpp"
#include "attnet/synth.hpp"

namespace {

const std::vector<std::string>& lines() {
  static const std::vector<std::string> cached = [] {
    const auto data = attnet::generate(attnet::planted_config(4000, 50000, 11));
    std::vector<std::string> out;
    for (const auto& e : data.events) out.push_back(attnet::to_json_line(e));
    return out;
  }();
  return cached;
}

void BM_ParseEvents(benchmark::State& state) {
  const auto& in = lines();
  for (auto _ : state) {
    auto r = attnet::parse_events(in, attnet::ObservationWindow{}, static_cast<unsigned>(state.range(0)));
    benchmark::DoNotOptimize(r.events.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(in.size()));
}
BENCHMARK(BM_ParseEvents)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_BuildGraph(benchmark::State& state) {
  const auto events = attnet::parse_events(lines(), attnet::ObservationWindow{}).events;
  for (auto _ : state) {
    auto g = attnet::build_graph(events);
    benchmark::DoNotOptimize(g.graph.num_edges());
  }
}
BENCHMARK(BM_BuildGraph)->Unit(benchmark::kMillisecond);

}  // namespace
