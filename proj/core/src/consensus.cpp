#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "attnet/community.hpp"
#include "parallel.hpp"

namespace attnet {

std::vector<std::optional<CommunityId>> align_labels(const Partition& run,
                                                     const Partition& reference) {
  if (run.assignment.size() != reference.assignment.size()) {
    throw DomainError("partitions cover different node sets");
  }
  std::unordered_map<std::uint64_t, std::size_t> overlap;
  for (std::size_t i = 0; i < run.assignment.size(); ++i) {
    ++overlap[(std::uint64_t{run.assignment[i]} << 32) | reference.assignment[i]];
  }
  struct Pair {
    std::size_t shared;
    CommunityId ref;
    CommunityId run;
  };
  std::vector<Pair> pairs;
  pairs.reserve(overlap.size());
  for (const auto& [key, shared] : overlap) {
    pairs.push_back({shared, static_cast<CommunityId>(key & 0xffffffffu),
                     static_cast<CommunityId>(key >> 32)});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.shared, a.ref, a.run) < std::tie(a.shared, b.ref, b.run);
  });

  std::size_t run_count = run.sizes.size();
  for (auto c : run.assignment) run_count = std::max<std::size_t>(run_count, c + 1);
  std::size_t ref_count = reference.sizes.size();
  for (auto c : reference.assignment) ref_count = std::max<std::size_t>(ref_count, c + 1);

  std::vector<std::optional<CommunityId>> mapping(run_count);
  std::vector<char> ref_used(ref_count, 0);
  for (const auto& p : pairs) {
    if (mapping[p.run] || ref_used[p.ref]) continue;
    mapping[p.run] = p.ref;
    ref_used[p.ref] = 1;
  }
  return mapping;
}

ConsensusPartition consensus_from_runs(const SymmetricGraph& g, std::span<const SeededRun> runs,
                                       double resolution) {
  if (runs.empty()) throw DomainError("consensus needs at least one run");
  const std::size_t n = g.num_nodes();
  std::set<std::uint64_t> distinct_seeds;
  for (const auto& r : runs) {
    if (r.partition.assignment.size() != n) throw DomainError("run does not cover the graph");
    if (!distinct_seeds.insert(r.seed).second) throw DomainError("duplicate run seed");
  }

  const auto ref_it = std::min_element(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
    if (a.partition.modularity != b.partition.modularity) {
      return a.partition.modularity > b.partition.modularity;
    }
    return a.seed < b.seed;
  });
  const Partition& reference = ref_it->partition;
  const std::size_t ref_count = reference.num_communities();

  // Aligned label per (run, run community). Unmatched run communities get
  // fresh labels numbered by (seed, community) so run order is irrelevant.
  std::vector<std::vector<std::optional<CommunityId>>> matched(runs.size());
  std::vector<std::tuple<std::uint64_t, CommunityId, std::size_t>> fresh;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    matched[r] = align_labels(runs[r].partition, reference);
    for (CommunityId c = 0; c < matched[r].size(); ++c) {
      if (!matched[r][c]) fresh.emplace_back(runs[r].seed, c, r);
    }
  }
  std::sort(fresh.begin(), fresh.end());
  std::vector<std::vector<std::uint32_t>> aligned(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    aligned[r].resize(matched[r].size());
    for (CommunityId c = 0; c < matched[r].size(); ++c) {
      if (matched[r][c]) aligned[r][c] = *matched[r][c];
    }
  }
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    const auto& [seed, c, r] = fresh[k];
    aligned[r][c] = static_cast<std::uint32_t>(ref_count + k);
  }

  // Label weight for tie-breaking: nodes carrying the label over all runs.
  std::vector<std::size_t> label_total(ref_count + fresh.size(), 0);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& sizes = runs[r].partition.sizes;
    for (CommunityId c = 0; c < aligned[r].size() && c < sizes.size(); ++c) {
      label_total[aligned[r][c]] += sizes[c];
    }
  }

  std::vector<CommunityId> chosen(n);
  std::vector<double> agreement(n);
  std::vector<std::uint32_t> labels(runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      labels[r] = aligned[r][runs[r].partition.assignment[i]];
    }
    std::sort(labels.begin(), labels.end());
    std::uint32_t best = labels[0];
    std::size_t best_count = 0;
    for (std::size_t a = 0; a < labels.size();) {
      std::size_t b = a;
      while (b < labels.size() && labels[b] == labels[a]) ++b;
      const std::size_t count = b - a;
      const bool better = count > best_count ||
                          (count == best_count && label_total[labels[a]] > label_total[best]);
      if (better) {
        best = labels[a];
        best_count = count;
      }
      a = b;
    }
    chosen[i] = best;
    agreement[i] = static_cast<double>(best_count) / static_cast<double>(runs.size());
  }

  Partition normalized = normalize_labels(chosen);
  ConsensusPartition out;
  out.assignment = std::move(normalized.assignment);
  out.sizes = std::move(normalized.sizes);
  out.agreement = std::move(agreement);
  out.runs = runs.size();
  std::vector<std::pair<std::uint64_t, double>> by_seed;
  for (const auto& r : runs) by_seed.emplace_back(r.seed, r.partition.modularity);
  std::sort(by_seed.begin(), by_seed.end());
  for (const auto& [seed, q] : by_seed) {
    out.seeds.push_back(seed);
    out.run_modularity.push_back(q);
  }
  out.reference_seed = ref_it->seed;
  out.modularity = modularity(g, out.assignment, resolution);
  return out;
}

ConsensusPartition consensus(const SymmetricGraph& g, const LouvainConfig& cfg,
                             std::size_t runs, unsigned threads) {
  if (runs == 0) throw DomainError("consensus needs at least one run");
  cfg.validate();
  std::vector<SeededRun> results(runs);
  detail::parallel_for(runs, threads, [&](std::size_t r) {
    LouvainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + r;
    results[r] = {run_cfg.seed, louvain(g, run_cfg)};
  });
  return consensus_from_runs(g, results, cfg.resolution);
}

}  // namespace attnet
