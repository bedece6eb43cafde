#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "attnet/ingest.hpp"
#include "attnet/types.hpp"

namespace attnet {

using NodeId = std::uint32_t;

// Bijection between user ids and dense node indices [0, n). Built from a set
// of ids, indices follow lexicographic id order.
class NodeRegistry {
 public:
  NodeRegistry() = default;
  explicit NodeRegistry(std::vector<UserId> ids);

  std::size_t size() const { return ids_.size(); }
  const UserId& id(NodeId node) const { return ids_[node]; }
  std::optional<NodeId> find(const UserId& id) const;
  const std::vector<UserId>& ids() const { return ids_; }

  // Registry of the given nodes, in the given order (new index = position).
  NodeRegistry subset(std::span<const NodeId> nodes) const;

 private:
  std::vector<UserId> ids_;
  std::unordered_map<UserId, NodeId> index_;
};

struct DirectedEdge {
  NodeId src;
  NodeId dst;
  std::uint64_t weight;
};

// Weighted directed retweet graph in CSR form. An edge src -> dst with weight
// w means dst retweeted src w times, so weighted out-degree is attention
// received. Neighbor lists are sorted by target index.
class RetweetGraph {
 public:
  RetweetGraph() = default;

  // Sums parallel edges. Throws DomainError on self-loops, zero weights,
  // out-of-range nodes, or a merged weight that does not fit in 32 bits.
  static RetweetGraph from_edges(std::size_t num_nodes, std::vector<DirectedEdge> edges);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return targets_.size(); }
  std::uint64_t total_weight() const { return total_weight_; }

  std::span<const NodeId> out_neighbors(NodeId u) const {
    return {targets_.data() + offsets_[u], targets_.data() + offsets_[u + 1]};
  }
  std::span<const std::uint32_t> out_weights(NodeId u) const {
    return {weights_.data() + offsets_[u], weights_.data() + offsets_[u + 1]};
  }
  std::uint64_t out_strength(NodeId u) const;
  std::optional<std::uint32_t> edge_weight(NodeId src, NodeId dst) const;

  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<NodeId>& targets() const { return targets_; }
  const std::vector<std::uint32_t>& weights() const { return weights_; }

  // Subgraph induced by `nodes`; node i of the result is nodes[i].
  RetweetGraph induced(std::span<const NodeId> nodes) const;

  friend bool operator==(const RetweetGraph&, const RetweetGraph&) = default;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<NodeId> targets_;
  std::vector<std::uint32_t> weights_;
  std::uint64_t total_weight_ = 0;
};

struct BuiltGraph {
  NodeRegistry registry;
  RetweetGraph graph;
  std::uint64_t retweets_used = 0;
  std::uint64_t self_retweets_skipped = 0;
};

// Only retweet events contribute; self-retweets are skipped.
BuiltGraph build_graph(std::span<const TweetEvent> events);

struct ComponentReport {
  std::size_t components = 0;
  std::size_t kept_nodes = 0;
  std::size_t kept_edges = 0;
  std::size_t discarded_components = 0;
  std::size_t discarded_min_size = 0;
  double discarded_median_size = 0.0;
  std::size_t discarded_max_size = 0;
  double discarded_node_fraction = 0.0;
  double discarded_edge_fraction = 0.0;
};

struct GiantComponent {
  RetweetGraph graph;
  // kept[i] is the original index of node i of `graph`, ascending.
  std::vector<NodeId> kept;
  ComponentReport report;
};

// Largest weakly connected component by node count; among equally large
// components the one holding the smallest node index wins.
GiantComponent giant_component(const RetweetGraph& g);

// Weak component id per node, numbered by smallest member.
std::vector<std::uint32_t> weak_components(const RetweetGraph& g);

// Undirected weighted graph stored as a full symmetric adjacency in CSR
// form: entry (u, v) is A_uv. A self-loop of edge weight w is stored once
// as A_uu = 2w, so strength(u) = sum_v A_uv and total_weight() = sum A / 2.
class SymmetricGraph {
 public:
  struct Edge {
    NodeId u;
    NodeId v;
    double weight;
  };

  SymmetricGraph() = default;

  // Parallel edges are summed.
  static SymmetricGraph from_edges(std::size_t num_nodes, std::vector<Edge> edges);

  // Takes matrix entries directly (both (u, v) and (v, u) must be present for
  // u != v). Duplicate entries are summed. Used by graph aggregation.
  static SymmetricGraph from_matrix_entries(std::size_t num_nodes, std::vector<Edge> entries);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_entries() const { return targets_.size(); }
  double total_weight() const { return total_weight_; }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {targets_.data() + offsets_[u], targets_.data() + offsets_[u + 1]};
  }
  std::span<const double> weights(NodeId u) const {
    return {weights_.data() + offsets_[u], weights_.data() + offsets_[u + 1]};
  }
  double strength(NodeId u) const { return strength_[u]; }
  double weight(NodeId u, NodeId v) const;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<NodeId> targets_;
  std::vector<double> weights_;
  std::vector<double> strength_;
  double total_weight_ = 0.0;
};

// weight(u, v) = w(u->v) + w(v->u).
SymmetricGraph symmetrize(const RetweetGraph& g);

struct ThresholdShare {
  std::uint64_t users = 0;
  double user_share = 0.0;
  std::uint64_t retweets = 0;
  double retweet_share = 0.0;
};

class DegreeDistribution {
 public:
  explicit DegreeDistribution(const RetweetGraph& g);

  // Weighted out-degree per node, in node order.
  const std::vector<std::uint64_t>& degrees() const { return degrees_; }
  // (degree, number of nodes) ascending by degree.
  const std::vector<std::pair<std::uint64_t, std::uint64_t>>& histogram() const {
    return histogram_;
  }
  std::uint64_t total_weight() const { return total_; }

  // Users with out-degree strictly above `threshold`.
  ThresholdShare above(std::uint64_t threshold) const;
  // The ceil(fraction * n) users with the largest out-degree.
  ThresholdShare top_fraction(double fraction) const;

 private:
  std::vector<std::uint64_t> degrees_;
  std::vector<std::uint64_t> sorted_desc_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> histogram_;
  std::uint64_t total_ = 0;
};

inline DegreeDistribution degree_distribution(const RetweetGraph& g) {
  return DegreeDistribution(g);
}

// Binary snapshot: "ATNG" magic, u32 format version, u64 node count, u64 edge
// count, node ids (u32 length + bytes), then offsets (u64), targets (u32) and
// weights (u32). All integers little-endian.
void write_snapshot(std::ostream& out, const NodeRegistry& registry, const RetweetGraph& g);
std::pair<NodeRegistry, RetweetGraph> read_snapshot(std::istream& in);

inline constexpr std::uint32_t kSnapshotVersion = 1;

// src<TAB>dst<TAB>weight with user ids.
void write_edge_list(std::ostream& out, const NodeRegistry& registry, const RetweetGraph& g);

}  // namespace attnet
