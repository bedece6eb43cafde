#include "attnet/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

namespace attnet {

NodeRegistry::NodeRegistry(std::vector<UserId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  if (ids_.size() > std::numeric_limits<NodeId>::max()) {
    throw DomainError("too many nodes for 32-bit indices");
  }
  index_.reserve(ids_.size());
  for (NodeId i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

std::optional<NodeId> NodeRegistry::find(const UserId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeRegistry NodeRegistry::subset(std::span<const NodeId> nodes) const {
  NodeRegistry out;
  out.ids_.reserve(nodes.size());
  for (NodeId n : nodes) out.ids_.push_back(ids_.at(n));
  out.index_.reserve(nodes.size());
  for (NodeId i = 0; i < out.ids_.size(); ++i) {
    if (!out.index_.emplace(out.ids_[i], i).second) {
      throw DomainError("subset repeats node '" + out.ids_[i] + "'");
    }
  }
  return out;
}

RetweetGraph RetweetGraph::from_edges(std::size_t num_nodes, std::vector<DirectedEdge> edges) {
  for (const auto& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) throw DomainError("edge endpoint out of range");
    if (e.src == e.dst) throw DomainError("self-loops are not allowed in a retweet graph");
    if (e.weight == 0) throw DomainError("edge weights must be positive");
  }
  std::sort(edges.begin(), edges.end(), [](const DirectedEdge& a, const DirectedEdge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });

  RetweetGraph g;
  g.offsets_.assign(num_nodes + 1, 0);
  g.targets_.reserve(edges.size());
  g.weights_.reserve(edges.size());
  std::size_t i = 0;
  while (i < edges.size()) {
    std::uint64_t w = 0;
    std::size_t j = i;
    for (; j < edges.size() && edges[j].src == edges[i].src && edges[j].dst == edges[i].dst; ++j) {
      w += edges[j].weight;
    }
    if (w > std::numeric_limits<std::uint32_t>::max()) {
      throw DomainError("edge weight overflows 32 bits");
    }
    g.targets_.push_back(edges[i].dst);
    g.weights_.push_back(static_cast<std::uint32_t>(w));
    ++g.offsets_[edges[i].src + 1];
    g.total_weight_ += w;
    i = j;
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  return g;
}

std::uint64_t RetweetGraph::out_strength(NodeId u) const {
  std::uint64_t s = 0;
  for (auto w : out_weights(u)) s += w;
  return s;
}

std::optional<std::uint32_t> RetweetGraph::edge_weight(NodeId src, NodeId dst) const {
  auto nbrs = out_neighbors(src);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), dst);
  if (it == nbrs.end() || *it != dst) return std::nullopt;
  return out_weights(src)[static_cast<std::size_t>(it - nbrs.begin())];
}

RetweetGraph RetweetGraph::induced(std::span<const NodeId> nodes) const {
  constexpr NodeId kAbsent = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> remap(num_nodes(), kAbsent);
  for (NodeId i = 0; i < nodes.size(); ++i) remap.at(nodes[i]) = i;
  std::vector<DirectedEdge> edges;
  for (NodeId i = 0; i < nodes.size(); ++i) {
    auto nbrs = out_neighbors(nodes[i]);
    auto ws = out_weights(nodes[i]);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (remap[nbrs[k]] != kAbsent) edges.push_back({i, remap[nbrs[k]], ws[k]});
    }
  }
  return from_edges(nodes.size(), std::move(edges));
}

BuiltGraph build_graph(std::span<const TweetEvent> events) {
  BuiltGraph out;
  std::vector<UserId> ids;
  for (const auto& e : events) {
    if (!e.is_retweet()) continue;
    if (!e.retweeted_author_id || e.retweeted_author_id->empty() || e.author_id.empty()) {
      throw DomainError("retweet event '" + e.tweet_id + "' has an empty user id");
    }
    if (e.is_self_retweet()) {
      ++out.self_retweets_skipped;
      continue;
    }
    ids.push_back(*e.retweeted_author_id);
    ids.push_back(e.author_id);
  }
  out.registry = NodeRegistry(std::move(ids));

  std::vector<DirectedEdge> edges;
  for (const auto& e : events) {
    if (!e.is_retweet() || e.is_self_retweet()) continue;
    edges.push_back({*out.registry.find(*e.retweeted_author_id),
                     *out.registry.find(e.author_id), 1});
  }
  out.retweets_used = edges.size();
  out.graph = RetweetGraph::from_edges(out.registry.size(), std::move(edges));
  return out;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), NodeId{0});
  }
  NodeId find(NodeId x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(NodeId a, NodeId b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<NodeId> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

std::vector<std::uint32_t> weak_components(const RetweetGraph& g) {
  const std::size_t n = g.num_nodes();
  DisjointSets sets(n);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.out_neighbors(u)) sets.unite(u, v);
  }
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> root_label(n, kUnset);
  std::vector<std::uint32_t> label(n);
  std::uint32_t next = 0;
  for (NodeId u = 0; u < n; ++u) {
    const NodeId r = sets.find(u);
    if (root_label[r] == kUnset) root_label[r] = next++;
    label[u] = root_label[r];
  }
  return label;
}

GiantComponent giant_component(const RetweetGraph& g) {
  GiantComponent out;
  const std::size_t n = g.num_nodes();
  if (n == 0) return out;

  const auto label = weak_components(g);
  const std::uint32_t count = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<std::size_t> sizes(count, 0);
  std::vector<std::size_t> edge_counts(count, 0);
  for (NodeId u = 0; u < n; ++u) {
    ++sizes[label[u]];
    edge_counts[label[u]] += g.out_neighbors(u).size();
  }
  // Labels follow smallest member, so the first maximum is the tie winner.
  const auto giant = static_cast<std::uint32_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  for (NodeId u = 0; u < n; ++u) {
    if (label[u] == giant) out.kept.push_back(u);
  }
  out.graph = out.kept.size() == n ? g : g.induced(out.kept);

  ComponentReport& r = out.report;
  r.components = count;
  r.kept_nodes = out.kept.size();
  r.kept_edges = out.graph.num_edges();
  std::vector<std::size_t> discarded;
  for (std::uint32_t c = 0; c < count; ++c) {
    if (c != giant) discarded.push_back(sizes[c]);
  }
  r.discarded_components = discarded.size();
  if (!discarded.empty()) {
    std::sort(discarded.begin(), discarded.end());
    r.discarded_min_size = discarded.front();
    r.discarded_max_size = discarded.back();
    const std::size_t mid = discarded.size() / 2;
    r.discarded_median_size = discarded.size() % 2 == 1
                                  ? static_cast<double>(discarded[mid])
                                  : 0.5 * static_cast<double>(discarded[mid - 1] + discarded[mid]);
  }
  r.discarded_node_fraction = static_cast<double>(n - r.kept_nodes) / static_cast<double>(n);
  r.discarded_edge_fraction =
      g.num_edges() == 0
          ? 0.0
          : static_cast<double>(g.num_edges() - r.kept_edges) / static_cast<double>(g.num_edges());
  return out;
}

SymmetricGraph SymmetricGraph::from_edges(std::size_t num_nodes, std::vector<Edge> edges) {
  // Expand to both matrix entries; a self-loop lands once with doubled weight.
  std::vector<Edge> entries;
  entries.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    if (e.u >= num_nodes || e.v >= num_nodes) throw DomainError("edge endpoint out of range");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw DomainError("edge weights must be positive and finite");
    }
    if (e.u == e.v) {
      entries.push_back({e.u, e.u, 2.0 * e.weight});
    } else {
      entries.push_back(e);
      entries.push_back({e.v, e.u, e.weight});
    }
  }
  edges.clear();
  edges.shrink_to_fit();
  return from_matrix_entries(num_nodes, std::move(entries));
}

SymmetricGraph SymmetricGraph::from_matrix_entries(std::size_t num_nodes,
                                                   std::vector<Edge> entries) {
  for (const auto& e : entries) {
    if (e.u >= num_nodes || e.v >= num_nodes) throw DomainError("entry index out of range");
  }
  std::sort(entries.begin(), entries.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });

  SymmetricGraph g;
  g.offsets_.assign(num_nodes + 1, 0);
  g.strength_.assign(num_nodes, 0.0);
  double sum = 0.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    double w = 0.0;
    std::size_t j = i;
    for (; j < entries.size() && entries[j].u == entries[i].u && entries[j].v == entries[i].v; ++j) {
      w += entries[j].weight;
    }
    g.targets_.push_back(entries[i].v);
    g.weights_.push_back(w);
    ++g.offsets_[entries[i].u + 1];
    g.strength_[entries[i].u] += w;
    sum += w;
    i = j;
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  g.total_weight_ = sum / 2.0;
  return g;
}

double SymmetricGraph::weight(NodeId u, NodeId v) const {
  auto nbrs = neighbors(u);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v);
  if (it == nbrs.end() || *it != v) return 0.0;
  return weights(u)[static_cast<std::size_t>(it - nbrs.begin())];
}

SymmetricGraph symmetrize(const RetweetGraph& g) {
  std::vector<SymmetricGraph::Edge> edges;
  edges.reserve(g.num_edges());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto nbrs = g.out_neighbors(u);
    auto ws = g.out_weights(u);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == u) throw DomainError("cannot symmetrize a graph with self-loops");
      edges.push_back({u, nbrs[k], static_cast<double>(ws[k])});
    }
  }
  return SymmetricGraph::from_edges(g.num_nodes(), std::move(edges));
}

DegreeDistribution::DegreeDistribution(const RetweetGraph& g) {
  degrees_.resize(g.num_nodes());
  for (NodeId u = 0; u < g.num_nodes(); ++u) degrees_[u] = g.out_strength(u);
  total_ = g.total_weight();
  sorted_desc_ = degrees_;
  std::sort(sorted_desc_.begin(), sorted_desc_.end(), std::greater<>());
  for (auto it = sorted_desc_.rbegin(); it != sorted_desc_.rend(); ++it) {
    if (histogram_.empty() || histogram_.back().first != *it) {
      histogram_.emplace_back(*it, 1);
    } else {
      ++histogram_.back().second;
    }
  }
}

namespace {

ThresholdShare share_of_prefix(const std::vector<std::uint64_t>& sorted_desc, std::size_t k,
                               std::uint64_t total) {
  ThresholdShare s;
  s.users = k;
  for (std::size_t i = 0; i < k; ++i) s.retweets += sorted_desc[i];
  if (!sorted_desc.empty()) {
    s.user_share = static_cast<double>(k) / static_cast<double>(sorted_desc.size());
  }
  if (total > 0) s.retweet_share = static_cast<double>(s.retweets) / static_cast<double>(total);
  return s;
}

}  // namespace

ThresholdShare DegreeDistribution::above(std::uint64_t threshold) const {
  const auto k = static_cast<std::size_t>(
      std::upper_bound(sorted_desc_.begin(), sorted_desc_.end(), threshold, std::greater<>()) -
      sorted_desc_.begin());
  return share_of_prefix(sorted_desc_, k, total_);
}

ThresholdShare DegreeDistribution::top_fraction(double fraction) const {
  if (fraction < 0.0 || fraction > 1.0) throw DomainError("fraction must lie in [0, 1]");
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted_desc_.size())));
  k = std::min(k, sorted_desc_.size());
  return share_of_prefix(sorted_desc_, k, total_);
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void put_array(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated graph snapshot");
  return v;
}

template <typename T>
std::vector<T> get_array(std::istream& in, std::uint64_t n) {
  std::vector<T> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)))) {
    throw ParseError("truncated graph snapshot");
  }
  return v;
}

}  // namespace

void write_snapshot(std::ostream& out, const NodeRegistry& registry, const RetweetGraph& g) {
  if (registry.size() != g.num_nodes()) throw DomainError("registry and graph sizes differ");
  out.write("ATNG", 4);
  put(out, kSnapshotVersion);
  put(out, static_cast<std::uint64_t>(g.num_nodes()));
  put(out, static_cast<std::uint64_t>(g.num_edges()));
  for (const auto& id : registry.ids()) {
    put(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  std::vector<std::uint64_t> offsets = g.offsets();
  if (offsets.empty()) offsets.push_back(0);
  put_array(out, offsets);
  put_array(out, g.targets());
  put_array(out, g.weights());
}

std::pair<NodeRegistry, RetweetGraph> read_snapshot(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "ATNG") {
    throw ParseError("not a graph snapshot (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kSnapshotVersion) {
    throw ParseError("unsupported graph snapshot version " + std::to_string(version));
  }
  const auto n = get<std::uint64_t>(in);
  const auto m = get<std::uint64_t>(in);
  std::vector<UserId> ids;
  ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw ParseError("truncated graph snapshot");
    ids.push_back(std::move(id));
  }
  const auto offsets = get_array<std::uint64_t>(in, n + 1);
  const auto targets = get_array<NodeId>(in, m);
  const auto weights = get_array<std::uint32_t>(in, m);
  if (offsets.back() != m) throw ParseError("corrupt graph snapshot offsets");

  std::vector<DirectedEdge> edges;
  edges.reserve(m);
  for (NodeId u = 0; u < n; ++u) {
    if (offsets[u] > offsets[u + 1]) throw ParseError("corrupt graph snapshot offsets");
    for (std::uint64_t k = offsets[u]; k < offsets[u + 1]; ++k) {
      edges.push_back({u, targets[k], weights[k]});
    }
  }
  NodeRegistry registry(ids);
  if (registry.size() != n || !std::is_sorted(ids.begin(), ids.end())) {
    throw ParseError("graph snapshot node table is not sorted and unique");
  }
  return {std::move(registry), RetweetGraph::from_edges(n, std::move(edges))};
}

void write_edge_list(std::ostream& out, const NodeRegistry& registry, const RetweetGraph& g) {
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto nbrs = g.out_neighbors(u);
    auto ws = g.out_weights(u);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      out << registry.id(u) << '\t' << registry.id(nbrs[k]) << '\t' << ws[k] << '\n';
    }
  }
}

}  // namespace attnet
