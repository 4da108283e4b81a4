#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "dlime/core.hpp"

namespace dlime {

struct Neighbor {
  std::size_t row = 0;
  double distance = 0.0;
  bool operator==(const Neighbor&) const = default;
};

/// Exact nearest-neighbor search over training rows, each tagged with its
/// cluster id. The index borrows `rows`; it must outlive the index.
class NeighborIndex {
 public:
  NeighborIndex(const Matrix& rows, std::vector<int> cluster_labels)
      : rows_(&rows), labels_(std::move(cluster_labels)) {
    if (labels_.size() != rows.rows())
      throw usage_error("neighbor index: " + std::to_string(labels_.size()) +
                        " cluster labels for " + std::to_string(rows.rows()) + " rows");
  }

  std::size_t size() const noexcept { return rows_->rows(); }
  const Matrix& rows() const noexcept { return *rows_; }
  const std::vector<int>& cluster_labels() const noexcept { return labels_; }

  /// The k smallest Euclidean distances in ascending order; equal distances
  /// are ordered by row index.
  std::vector<Neighbor> query(std::span<const double> x, std::size_t k) const {
    if (x.size() != rows_->cols())
      throw usage_error("knn query: dimension mismatch, expected " +
                        std::to_string(rows_->cols()) + " got " + std::to_string(x.size()));
    if (k == 0 || k > size())
      throw usage_error("knn query: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(size()) + "]");
    std::vector<Neighbor> all(size());
    for (std::size_t i = 0; i < size(); ++i)
      all[i] = {i, std::sqrt(squared_distance(rows_->row(i), x))};
    auto closer = [](const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
    all.resize(k);
    return all;
  }

  /// Majority cluster among the k nearest rows. A tied vote goes to the
  /// nearest neighbor's cluster when it is among the tied, else to the
  /// smallest tied cluster id.
  int route(std::span<const double> x, std::size_t k) const {
    const auto nbrs = query(x, k);
    std::map<int, std::size_t> votes;
    for (const auto& nb : nbrs) ++votes[labels_[nb.row]];
    std::size_t top = 0;
    for (const auto& [c, v] : votes) top = std::max(top, v);
    const int nearest = labels_[nbrs.front().row];
    if (votes[nearest] == top) return nearest;
    for (const auto& [c, v] : votes)
      if (v == top) return c;
    return nearest;
  }

 private:
  const Matrix* rows_;
  std::vector<int> labels_;
};

}  // namespace dlime
