#include "attnet/community.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "attnet/csv.hpp"
#include "attnet/rng.hpp"

namespace attnet {

Partition normalize_labels(std::span<const CommunityId> assignment) {
  Partition p;
  p.assignment.resize(assignment.size());
  constexpr CommunityId kUnset = std::numeric_limits<CommunityId>::max();
  CommunityId max_label = 0;
  for (auto c : assignment) max_label = std::max(max_label, c);
  std::vector<CommunityId> remap(assignment.empty() ? 0 : std::size_t{max_label} + 1, kUnset);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    CommunityId& r = remap[assignment[i]];
    if (r == kUnset) {
      r = static_cast<CommunityId>(p.sizes.size());
      p.sizes.push_back(0);
    }
    p.assignment[i] = r;
    ++p.sizes[r];
  }
  return p;
}

void LouvainConfig::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw DomainError("louvain resolution must be positive");
  }
  if (!(tolerance >= 0.0)) throw DomainError("louvain tolerance must be non-negative");
  if (max_passes == 0) throw DomainError("louvain max_passes must be positive");
}

double modularity(const SymmetricGraph& g, std::span<const CommunityId> assignment,
                  double resolution) {
  if (assignment.size() != g.num_nodes()) {
    throw DomainError("partition does not cover the graph");
  }
  const double two_m = 2.0 * g.total_weight();
  if (!(two_m > 0.0)) throw DomainError("undefined modularity: graph has no edge weight");

  CommunityId count = 0;
  for (auto c : assignment) count = std::max(count, c + 1);
  std::vector<double> internal(count, 0.0);
  std::vector<double> total(count, 0.0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const CommunityId cu = assignment[u];
    total[cu] += g.strength(u);
    auto nbrs = g.neighbors(u);
    auto ws = g.weights(u);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (assignment[nbrs[k]] == cu) internal[cu] += ws[k];
    }
  }
  double q = 0.0;
  for (CommunityId c = 0; c < count; ++c) {
    const double share = total[c] / two_m;
    q += internal[c] / two_m - resolution * share * share;
  }
  return q;
}

namespace {

struct MovePhase {
  std::size_t moves = 0;
  double gain = 0.0;  // modularity gain of the whole phase
};

// Greedy local moves on one level. comm starts as the singleton partition
// and ends as a (non-contiguous) community label per node.
MovePhase local_moves(const SymmetricGraph& g, double resolution, Rng& rng,
                      std::vector<CommunityId>& comm) {
  const std::size_t n = g.num_nodes();
  const double two_m = 2.0 * g.total_weight();
  comm.resize(n);
  std::iota(comm.begin(), comm.end(), CommunityId{0});
  std::vector<double> tot(n);
  for (NodeId u = 0; u < n; ++u) tot[u] = g.strength(u);

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(std::span<NodeId>(order));

  std::vector<double> link(n, 0.0);
  std::vector<char> touched_flag(n, 0);
  std::vector<CommunityId> touched;

  MovePhase phase;
  constexpr std::size_t kMaxSweeps = 1000;
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    std::size_t moved = 0;
    for (NodeId u : order) {
      const CommunityId own = comm[u];
      const double ku = g.strength(u);
      auto nbrs = g.neighbors(u);
      auto ws = g.weights(u);
      touched.clear();
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        if (nbrs[k] == u) continue;
        const CommunityId c = comm[nbrs[k]];
        if (!touched_flag[c]) {
          touched_flag[c] = 1;
          touched.push_back(c);
        }
        link[c] += ws[k];
      }

      tot[own] -= ku;
      const double scale = resolution * ku / two_m;
      const double stay_gain = link[own] - scale * tot[own];
      CommunityId best = own;
      double best_gain = -std::numeric_limits<double>::infinity();
      for (CommunityId c : touched) {
        if (c == own) continue;
        const double gain = link[c] - scale * tot[c];
        if (gain > best_gain || (gain == best_gain && c < best)) {
          best_gain = gain;
          best = c;
        }
      }
      const double eps = 1e-12 * std::max(1.0, ku);
      if (best != own && best_gain > stay_gain + eps) {
        comm[u] = best;
        tot[best] += ku;
        phase.gain += 2.0 * (best_gain - stay_gain) / two_m;
        ++moved;
      } else {
        tot[own] += ku;
      }

      for (CommunityId c : touched) {
        link[c] = 0.0;
        touched_flag[c] = 0;
      }
    }
    phase.moves += moved;
    if (moved == 0) break;
  }
  return phase;
}

SymmetricGraph aggregate(const SymmetricGraph& g, std::span<const CommunityId> comm,
                         std::size_t communities) {
  std::vector<std::vector<NodeId>> members(communities);
  for (NodeId u = 0; u < g.num_nodes(); ++u) members[comm[u]].push_back(u);

  std::vector<double> row(communities, 0.0);
  std::vector<char> flag(communities, 0);
  std::vector<CommunityId> touched;
  std::vector<SymmetricGraph::Edge> entries;
  entries.reserve(g.num_entries() / 2 + communities);
  for (CommunityId c = 0; c < communities; ++c) {
    touched.clear();
    for (NodeId u : members[c]) {
      auto nbrs = g.neighbors(u);
      auto ws = g.weights(u);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const CommunityId d = comm[nbrs[k]];
        if (!flag[d]) {
          flag[d] = 1;
          touched.push_back(d);
        }
        row[d] += ws[k];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (CommunityId d : touched) {
      entries.push_back({c, d, row[d]});
      row[d] = 0.0;
      flag[d] = 0;
    }
  }
  return SymmetricGraph::from_matrix_entries(communities, std::move(entries));
}

}  // namespace

Partition louvain(const SymmetricGraph& g, const LouvainConfig& cfg, LouvainTrace* trace) {
  cfg.validate();
  if (g.num_nodes() == 0) throw DomainError("louvain requires a non-empty graph");
  const double two_m = 2.0 * g.total_weight();
  if (!(two_m > 0.0)) throw DomainError("undefined modularity: graph has no edge weight");

  // Singleton modularity is the starting point of the running value.
  double running = 0.0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const double share = g.strength(u) / two_m;
    running += g.weight(u, u) / two_m - cfg.resolution * share * share;
  }

  std::vector<CommunityId> node_comm(g.num_nodes());
  std::iota(node_comm.begin(), node_comm.end(), CommunityId{0});

  SymmetricGraph level;
  const SymmetricGraph* current = &g;
  std::vector<CommunityId> comm;
  for (std::size_t pass = 0; pass < cfg.max_passes; ++pass) {
    Rng rng(cfg.seed, pass);
    const MovePhase phase = local_moves(*current, cfg.resolution, rng, comm);
    running += phase.gain;

    const Partition lvl = normalize_labels(comm);
    for (auto& c : node_comm) c = lvl.assignment[c];

    if (trace != nullptr) {
      trace->incremental_modularity.push_back(running);
      trace->recomputed_modularity.push_back(modularity(g, node_comm, cfg.resolution));
      trace->moves_per_pass.push_back(phase.moves);
    }
    if (phase.moves == 0 || phase.gain < cfg.tolerance) break;
    level = aggregate(*current, lvl.assignment, lvl.num_communities());
    current = &level;
  }

  Partition result = normalize_labels(node_comm);
  result.modularity = modularity(g, result.assignment, cfg.resolution);
  return result;
}

double normalized_mutual_information(std::span<const std::uint32_t> a,
                                     std::span<const std::uint32_t> b) {
  if (a.size() != b.size()) throw DomainError("partitions differ in length");
  if (a.empty()) return 1.0;
  const Partition pa = normalize_labels(a);
  const Partition pb = normalize_labels(b);
  const double n = static_cast<double>(a.size());

  std::vector<std::uint64_t> keys(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    keys[i] = (std::uint64_t{pa.assignment[i]} << 32) | pb.assignment[i];
  }
  std::sort(keys.begin(), keys.end());

  auto entropy = [&](const std::vector<std::size_t>& sizes) {
    double h = 0.0;
    for (auto s : sizes) {
      const double p = static_cast<double>(s) / n;
      if (p > 0) h -= p * std::log(p);
    }
    return h;
  };
  const double ha = entropy(pa.sizes);
  const double hb = entropy(pb.sizes);

  double mi = 0.0;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const double nij = static_cast<double>(j - i);
    const auto ca = static_cast<std::size_t>(keys[i] >> 32);
    const auto cb = static_cast<std::size_t>(keys[i] & 0xffffffffu);
    mi += nij / n *
          std::log(nij * n / (static_cast<double>(pa.sizes[ca]) * static_cast<double>(pb.sizes[cb])));
    i = j;
  }
  if (ha + hb == 0.0) return 1.0;
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

std::string community_letter(std::size_t rank) {
  std::string s;
  std::size_t r = rank + 1;
  while (r > 0) {
    --r;
    s.insert(s.begin(), static_cast<char>('A' + r % 26));
    r /= 26;
  }
  return s;
}

RankedCommunities rank_communities(const ConsensusPartition& p, std::size_t min_size) {
  RankedCommunities out;
  std::vector<CommunityId> order(p.sizes.size());
  std::iota(order.begin(), order.end(), CommunityId{0});
  std::sort(order.begin(), order.end(), [&](CommunityId a, CommunityId b) {
    return p.sizes[a] != p.sizes[b] ? p.sizes[a] > p.sizes[b] : a < b;
  });

  std::vector<std::optional<std::uint32_t>> rank_of(p.sizes.size());
  std::size_t covered = 0;
  for (CommunityId c : order) {
    if (p.sizes[c] >= min_size && p.sizes[c] > 0) {
      rank_of[c] = static_cast<std::uint32_t>(out.labeled.size());
      out.labeled.push_back({community_letter(out.labeled.size()), c, p.sizes[c]});
      covered += p.sizes[c];
    } else {
      ++out.residual_communities;
      out.residual_nodes += p.sizes[c];
    }
  }
  const std::size_t n = p.assignment.size();
  out.coverage = n == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(n);
  out.node_rank.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.node_rank[i] = rank_of[p.assignment[i]];
  if (out.labeled.empty()) {
    out.warnings.push_back("no community reaches the minimum size " + std::to_string(min_size) +
                           "; every node is residual");
  }
  return out;
}

void write_partition_csv(std::ostream& out, const NodeRegistry& registry,
                         const ConsensusPartition& p, const RankedCommunities& ranked) {
  if (registry.size() != p.assignment.size()) {
    throw DomainError("registry and partition sizes differ");
  }
  out << "user_id,community_label,agreement\n";
  for (NodeId u = 0; u < registry.size(); ++u) {
    const auto& rank = ranked.node_rank[u];
    out << csv::escape(registry.id(u)) << ','
        << (rank ? ranked.labeled[*rank].label : std::string(kResidualLabel)) << ','
        << csv::format_double(p.agreement[u]) << '\n';
  }
}

std::vector<PartitionRow> read_partition_csv(std::istream& in) {
  std::vector<PartitionRow> rows;
  std::string line;
  if (!csv::read_line(in, line) || line != "user_id,community_label,agreement") {
    throw ParseError("partition file must start with 'user_id,community_label,agreement'");
  }
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = csv::split(line);
    if (f.size() != 3) {
      throw ParseError("partition file line " + std::to_string(line_no) + ": expected 3 fields");
    }
    PartitionRow row{std::move(f[0]), std::move(f[1]), 0.0};
    try {
      row.agreement = std::stod(f[2]);
    } catch (const std::exception&) {
      throw ParseError("partition file line " + std::to_string(line_no) + ": bad agreement");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace attnet
