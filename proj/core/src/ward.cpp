#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "attnet/profile.hpp"

namespace attnet {

Dendrogram ward_cluster(std::span<const std::vector<double>> points) {
  const std::size_t n = points.size();
  if (n < 2) throw DomainError("ward clustering needs at least 2 points");
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw DomainError("points differ in dimension");
  }

  // dist[a][b] over slots; slot i holds cluster id ids[i].
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = points[a][k] - points[b][k];
        s += diff * diff;
      }
      dist[a][b] = dist[b][a] = std::sqrt(s);
    }
  }
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  std::vector<std::size_t> sizes(n, 1);
  std::vector<char> active(n, 1);

  Dendrogram d;
  d.leaves = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = 0, best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::uint32_t, std::uint32_t> best_ids{0, 0};
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const std::pair<std::uint32_t, std::uint32_t> key = std::minmax(ids[a], ids[b]);
        if (dist[a][b] < best || (dist[a][b] == best && key < best_ids)) {
          best = dist[a][b];
          best_a = a;
          best_b = b;
          best_ids = key;
        }
      }
    }

    const double na = static_cast<double>(sizes[best_a]);
    const double nb = static_cast<double>(sizes[best_b]);
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == best_a || c == best_b) continue;
      const double nc = static_cast<double>(sizes[c]);
      const double dac = dist[best_a][c];
      const double dbc = dist[best_b][c];
      const double v = ((na + nc) * dac * dac + (nb + nc) * dbc * dbc - nc * best * best) /
                       (na + nb + nc);
      dist[best_a][c] = dist[c][best_a] = std::sqrt(std::max(0.0, v));
    }
    d.merges.push_back({best_ids.first, best_ids.second, best, sizes[best_a] + sizes[best_b]});
    sizes[best_a] += sizes[best_b];
    ids[best_a] = static_cast<std::uint32_t>(n + step);
    active[best_b] = 0;
  }
  return d;
}

Dendrogram ward_cluster(const FeatureMatrix& fm) {
  std::vector<std::vector<double>> points;
  points.reserve(fm.rows());
  for (const auto& row : fm.z) points.emplace_back(row.begin(), row.end());
  return ward_cluster(points);
}

std::vector<std::uint32_t> cut_dendrogram(const Dendrogram& d, std::size_t k) {
  const std::size_t n = d.leaves;
  if (k < 1 || k > n) throw DomainError("cluster count must lie in [1, leaves]");
  if (d.merges.size() + 1 != n) throw DomainError("dendrogram is incomplete");

  std::vector<std::uint32_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0u);
  for (std::size_t i = 0; i < n - k; ++i) {
    const auto node = static_cast<std::uint32_t>(n + i);
    parent[d.merges[i].left] = node;
    parent[d.merges[i].right] = node;
  }
  auto root = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> label_of_root(2 * n - 1, kUnset);
  std::vector<std::uint32_t> out(n);
  std::uint32_t next = 0;
  for (std::uint32_t leaf = 0; leaf < n; ++leaf) {
    const auto r = root(leaf);
    if (label_of_root[r] == kUnset) label_of_root[r] = next++;
    out[leaf] = label_of_root[r];
  }
  return out;
}

KneeResult knee_point(const Dendrogram& d) {
  const std::size_t merges = d.merges.size();
  if (merges < 3) throw DomainError("knee detection needs at least 3 merges");
  KneeResult r;
  r.distance.resize(merges);
  for (std::size_t k = 1; k <= merges; ++k) r.distance[k - 1] = d.merges[merges - k].height;

  double max_height = 0.0;
  for (double h : r.distance) max_height = std::max(max_height, std::abs(h));
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 2; k + 1 <= merges; ++k) {
    const double acc = r.distance[k - 2] - 2.0 * r.distance[k - 1] + r.distance[k];
    r.second_difference.push_back(acc);
    if (acc > best) {
      best = acc;
      r.k = k;
    }
  }
  r.clear_knee = best > 1e-9 * std::max(1.0, max_height);
  return r;
}

}  // namespace attnet
