#pragma once

// Agglomerative hierarchical clustering over Euclidean distances.
//
// Node ids: leaves are 0..n-1 in row order; the merge at step s creates node
// n+s. At every step the pair with the smallest linkage distance merges; equal
// distances go to the lexicographically smallest (min_id, max_id) pair.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"

namespace dlime {

enum class Linkage { average, single, complete };

inline std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::single:
      return "single";
    case Linkage::complete:
      return "complete";
    case Linkage::average:
      break;
  }
  return "average";
}

struct Merge {
  std::size_t left = 0;   // smaller node id
  std::size_t right = 0;  // larger node id
  double height = 0.0;
  std::size_t size = 0;
  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::size_t n_leaves = 0;
  std::vector<Merge> merges;
  bool operator==(const Dendrogram&) const = default;
};

struct FlatClustering {
  std::vector<int> assignments;
  int n_clusters = 0;

  std::vector<std::size_t> members(int cluster) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == cluster) out.push_back(i);
    return out;
  }
};

namespace detail {

// Condensed upper-triangular storage for slot pairs (i < j).
class PairTable {
 public:
  explicit PairTable(std::size_t n) : n_(n), d_(n * (n - 1) / 2) {}
  double& at(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return d_[index(i, j)];
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return i * (2 * n_ - i - 1) / 2 + (j - i - 1); }
  std::size_t n_;
  std::vector<double> d_;
};

}  // namespace detail

/// Builds the dendrogram with Lance-Williams updates and a cached nearest
/// neighbor per active cluster.
inline Dendrogram agglomerate(const Matrix& rows, Linkage linkage = Linkage::average) {
  const std::size_t n = rows.rows();
  if (n < 2) throw data_error("agglomerate needs at least 2 rows, got " + std::to_string(n));

  detail::PairTable dist(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist.at(i, j) = std::sqrt(squared_distance(rows.row(i), rows.row(j)));

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> node(n), size(n, 1);
  std::iota(node.begin(), node.end(), std::size_t{0});
  std::vector<bool> active(n, true);
  std::vector<std::size_t> nn(n, 0);
  std::vector<double> nn_dist(n, inf);

  auto refresh = [&](std::size_t a) {
    nn_dist[a] = inf;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || !active[b]) continue;
      const double d = dist.at(a, b);
      if (d < nn_dist[a] || (d == nn_dist[a] && node[b] < node[nn[a]])) {
        nn_dist[a] = d;
        nn[a] = b;
      }
    }
  };
  for (std::size_t a = 0; a < n; ++a) refresh(a);

  Dendrogram out;
  out.n_leaves = n;
  out.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    std::size_t best_lo = 0, best_hi = 0;
    double best = inf;
    for (std::size_t s = 0; s < n; ++s) {
      if (!active[s]) continue;
      const std::size_t lo = std::min(node[s], node[nn[s]]);
      const std::size_t hi = std::max(node[s], node[nn[s]]);
      if (a == n || nn_dist[s] < best ||
          (nn_dist[s] == best && (lo < best_lo || (lo == best_lo && hi < best_hi)))) {
        a = s;
        best = nn_dist[s];
        best_lo = lo;
        best_hi = hi;
      }
    }
    const std::size_t b = nn[a];
    const std::size_t keep = std::min(a, b), drop = std::max(a, b);
    const double na = static_cast<double>(size[keep]), nb = static_cast<double>(size[drop]);

    out.merges.push_back({best_lo, best_hi, best, size[keep] + size[drop]});

    active[drop] = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == keep) continue;
      const double dk = dist.at(k, keep), dd = dist.at(k, drop);
      double merged = 0.0;
      switch (linkage) {
        case Linkage::average:
          merged = (na * dk + nb * dd) / (na + nb);
          break;
        case Linkage::single:
          merged = std::min(dk, dd);
          break;
        case Linkage::complete:
          merged = std::max(dk, dd);
          break;
      }
      dist.at(k, keep) = merged;
    }
    node[keep] = n + step;
    size[keep] += size[drop];

    refresh(keep);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == keep) continue;
      if (nn[k] == keep || nn[k] == drop) {
        refresh(k);
      } else if (dist.at(k, keep) < nn_dist[k]) {
        // the new node has the largest id, so an equal distance never wins
        nn_dist[k] = dist.at(k, keep);
        nn[k] = keep;
      }
    }
  }
  return out;
}

/// Undoes the last C-1 merges; connected components become clusters. Cluster
/// ids are assigned in order of each cluster's smallest row index.
inline FlatClustering cut_k(const Dendrogram& d, std::size_t n_clusters) {
  const std::size_t n = d.n_leaves;
  if (n_clusters < 1 || n_clusters > n)
    throw usage_error("cluster count " + std::to_string(n_clusters) + " outside [1, " +
                      std::to_string(n) + "]");
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t s = 0; s + n_clusters < n; ++s) {
    parent[find(d.merges[s].left)] = n + s;
    parent[find(d.merges[s].right)] = n + s;
  }
  FlatClustering fc;
  fc.assignments.assign(n, -1);
  std::vector<int> label(2 * n - 1, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(i);
    if (label[root] < 0) label[root] = next++;
    fc.assignments[i] = label[root];
  }
  fc.n_clusters = next;
  return fc;
}

/// Gap for k clusters: heights[n-k] - heights[n-k-1] (0-based merge order,
/// heights[-1] taken as 0). Scans k = 2..min(max_clusters, n); the largest
/// gap wins, ties go to the smaller k.
inline std::size_t largest_gap_cluster_count(const Dendrogram& d, std::size_t max_clusters) {
  const std::size_t n = d.n_leaves;
  if (n < 2) throw data_error("largest-gap cut needs at least 2 leaves");
  if (max_clusters < 2) throw usage_error("max cluster count must be at least 2");
  const std::size_t upper = std::min(max_clusters, n);
  std::size_t best_k = 2;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 2; k <= upper; ++k) {
    const double hi = d.merges[n - k].height;
    const double lo = (n - k >= 1) ? d.merges[n - k - 1].height : 0.0;
    const double gap = hi - lo;
    if (gap > best_gap) {
      best_gap = gap;
      best_k = k;
    }
  }
  return best_k;
}

inline FlatClustering cut_largest_gap(const Dendrogram& d, std::size_t max_clusters = 10) {
  return cut_k(d, largest_gap_cluster_count(d, max_clusters));
}

inline nlohmann::ordered_json to_json(const Dendrogram& d) {
  nlohmann::ordered_json j;
  j["spec_version"] = kSpecVersion;
  j["n_leaves"] = d.n_leaves;
  auto& merges = j["merges"] = nlohmann::ordered_json::array();
  for (const auto& m : d.merges) merges.push_back({m.left, m.right, m.height, m.size});
  return j;
}

inline Dendrogram dendrogram_from_json(const nlohmann::json& j) {
  Dendrogram d;
  for (const auto& m : j.at("merges"))
    d.merges.push_back({m.at(0).get<std::size_t>(), m.at(1).get<std::size_t>(),
                        m.at(2).get<double>(), m.at(3).get<std::size_t>()});
  d.n_leaves = j.contains("n_leaves") ? j["n_leaves"].get<std::size_t>() : d.merges.size() + 1;
  if (d.merges.size() + 1 != d.n_leaves) throw data_error("dendrogram: merge count must be n-1");
  return d;
}

}  // namespace dlime
