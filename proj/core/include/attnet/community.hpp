#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnet/graph.hpp"

namespace attnet {

using CommunityId = std::uint32_t;

struct Partition {
  // assignment[node] in [0, sizes.size()); ids are contiguous.
  std::vector<CommunityId> assignment;
  std::vector<std::size_t> sizes;
  double modularity = 0.0;

  std::size_t num_communities() const { return sizes.size(); }
};

// Relabels communities contiguously by first appearance in node order and
// recomputes sizes. Modularity is left untouched.
Partition normalize_labels(std::span<const CommunityId> assignment);

struct LouvainConfig {
  double resolution = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_passes = 100;
  // A pass whose modularity gain falls below this ends the run.
  double tolerance = 1e-7;

  void validate() const;
};

// Q = (1/2m) sum_ij [A_ij - gamma k_i k_j / 2m] delta(c_i, c_j).
// Throws DomainError when the graph has no edge weight.
double modularity(const SymmetricGraph& g, std::span<const CommunityId> assignment,
                  double resolution = 1.0);

// Per-pass bookkeeping for tests and diagnostics.
struct LouvainTrace {
  // Running modularity maintained from local-move gains, one per pass.
  std::vector<double> incremental_modularity;
  // Modularity of the pass's partition recomputed on the input graph.
  std::vector<double> recomputed_modularity;
  std::vector<std::size_t> moves_per_pass;
};

Partition louvain(const SymmetricGraph& g, const LouvainConfig& cfg,
                  LouvainTrace* trace = nullptr);

struct ConsensusPartition {
  std::vector<CommunityId> assignment;
  std::vector<std::size_t> sizes;
  // Fraction of runs whose aligned label equals the consensus label.
  std::vector<double> agreement;
  std::size_t runs = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> run_modularity;
  std::uint64_t reference_seed = 0;
  double modularity = 0.0;

  friend bool operator==(const ConsensusPartition&, const ConsensusPartition&) = default;
};

// Greedy maximum-overlap matching of `run` communities onto `reference`
// communities. Pairs are taken in order of shared node count (ties: lower
// reference id, then lower run id). Returns the reference label for every
// run community, or nullopt when it stays unmatched.
std::vector<std::optional<CommunityId>> align_labels(const Partition& run,
                                                     const Partition& reference);

struct SeededRun {
  std::uint64_t seed = 0;
  Partition partition;
};

// Majority vote over aligned runs. The reference is the run with the highest
// modularity (ties: lowest seed). The result does not depend on the order of
// `runs`.
ConsensusPartition consensus_from_runs(const SymmetricGraph& g, std::span<const SeededRun> runs,
                                       double resolution = 1.0);

// Runs louvain with seeds cfg.seed + 0 .. cfg.seed + runs - 1.
ConsensusPartition consensus(const SymmetricGraph& g, const LouvainConfig& cfg,
                             std::size_t runs, unsigned threads = 1);

// Normalized mutual information with arithmetic-mean normalization,
// 2 I(a;b) / (H(a) + H(b)). Two single-cluster partitions score 1.
double normalized_mutual_information(std::span<const std::uint32_t> a,
                                     std::span<const std::uint32_t> b);

struct LabeledCommunity {
  std::string label;
  CommunityId community = 0;
  std::size_t size = 0;
};

struct RankedCommunities {
  // Descending size; ties by smaller community id.
  std::vector<LabeledCommunity> labeled;
  std::size_t residual_nodes = 0;
  std::size_t residual_communities = 0;
  double coverage = 0.0;
  // Rank index into `labeled` per node, or nullopt for residual nodes.
  std::vector<std::optional<std::uint32_t>> node_rank;
  std::vector<std::string> warnings;
};

// "A".."Z", "AA", "AB", ...
std::string community_letter(std::size_t rank);

RankedCommunities rank_communities(const ConsensusPartition& p, std::size_t min_size);

inline constexpr std::string_view kResidualLabel = "residual";

// CSV `user_id,community_label,agreement`.
void write_partition_csv(std::ostream& out, const NodeRegistry& registry,
                         const ConsensusPartition& p, const RankedCommunities& ranked);

struct PartitionRow {
  UserId user_id;
  std::string label;
  double agreement = 0.0;
};
std::vector<PartitionRow> read_partition_csv(std::istream& in);

}  // namespace attnet
