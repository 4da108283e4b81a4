#pragma once
// Independent reference implementations used by the unit tests and the
// acceptance binary.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "dlime/clustering.hpp"
#include "dlime/mlp.hpp"
#include "dlime/neighbors.hpp"

namespace oracle {

using dlime::Linkage;
using dlime::Matrix;
using dlime::Merge;
using dlime::Neighbor;

// Naive agglomeration: every step recomputes every inter-cluster linkage from
// the member points and scans all pairs; ties go to the smallest
// (min id, max id) pair.
inline std::vector<Merge> naive_agglomerate(const Matrix& x, Linkage linkage) {
  const std::size_t n = x.rows();
  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};
  auto d = [&](std::size_t a, std::size_t b) { return std::sqrt(dlime::squared_distance(x.row(a), x.row(b))); };
  std::vector<Merge> out;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (auto it = clusters.begin(); it != clusters.end(); ++it)
      for (auto jt = std::next(it); jt != clusters.end(); ++jt) {
        double link = 0.0;
        if (linkage == Linkage::single) link = std::numeric_limits<double>::infinity();
        for (auto p : it->second)
          for (auto q : jt->second) {
            const double v = d(p, q);
            if (linkage == Linkage::average) link += v;
            if (linkage == Linkage::single) link = std::min(link, v);
            if (linkage == Linkage::complete) link = std::max(link, v);
          }
        if (linkage == Linkage::average)
          link /= static_cast<double>(it->second.size() * jt->second.size());
        // map iteration gives ids in increasing order, so strict < keeps the
        // lexicographically smallest pair among ties
        if (link < best) {
          best = link;
          bi = it->first;
          bj = jt->first;
        }
      }
    auto merged = clusters[bi];
    merged.insert(merged.end(), clusters[bj].begin(), clusters[bj].end());
    out.push_back({bi, bj, best, merged.size()});
    clusters.erase(bi);
    clusters.erase(bj);
    clusters[n + step] = merged;
  }
  return out;
}

// Same pairs and sizes; heights within 1e-12 relative (Lance-Williams and the
// direct mean round differently).
inline bool same_merges(const std::vector<Merge>& got, const std::vector<Merge>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t s = 0; s < got.size(); ++s) {
    if (got[s].left != want[s].left || got[s].right != want[s].right || got[s].size != want[s].size) return false;
    if (std::abs(got[s].height - want[s].height) > 1e-12 * std::max(1.0, want[s].height)) return false;
  }
  return true;
}

inline std::vector<Neighbor> brute_force_knn(const Matrix& x, std::span<const double> q, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += (x(i, j) - q[j]) * (x(i, j) - q[j]);
    all.push_back({i, std::sqrt(s)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.row < b.row;
  });
  all.resize(k);
  return all;
}

// Weighted least squares with intercept through the Moore-Penrose
// pseudo-inverse of sqrt(W) [1 X]. Returns (intercept, coefficients...).
inline Eigen::VectorXd pinv_wls(const Matrix& x, const std::vector<double>& y, const std::vector<double>& w) {
  const auto s = static_cast<Eigen::Index>(x.rows()), p = static_cast<Eigen::Index>(x.cols());
  Eigen::MatrixXd a(s, p + 1);
  Eigen::VectorXd b(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const double r = std::sqrt(w[static_cast<std::size_t>(i)]);
    a(i, 0) = r;
    for (Eigen::Index j = 0; j < p; ++j)
      a(i, j + 1) = r * x(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    b(i) = r * y[static_cast<std::size_t>(i)];
  }
  return a.completeOrthogonalDecomposition().pseudoInverse() * b;
}

// Largest relative gap between the analytic gradient and central differences.
inline double gradient_check(dlime::Mlp& net, const Matrix& x, const std::vector<int>& y, double h = 1e-5) {
  const auto grad = net.loss_and_gradient(x, y).second;
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    auto& w = net.mutable_parameters()[i];
    const double keep = w;
    w = keep + h;
    const double up = net.loss_and_gradient(x, y).first;
    w = keep - h;
    const double down = net.loss_and_gradient(x, y).first;
    w = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-8}));
  }
  return worst;
}

}  // namespace oracle
