#pragma once

// Bagged CART classifier. Each tree is grown on a bootstrap sample with Gini
// impurity and a random feature subset per split; the forest probability is
// the fraction of trees voting class 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"
#include "dlime/data.hpp"
#include "dlime/model.hpp"
#include "dlime/rng.hpp"

namespace dlime {

struct RandomForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 10;
  std::size_t features_per_split = 0;  // 0 selects ceil(sqrt(m))
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // fraction of class-1 training rows reaching the node
  bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  /// Class vote: 1 when more than half of the leaf's training rows are class 1.
  int vote(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
    }
    return nodes_[i].value > 0.5 ? 1 : 0;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

namespace detail {

inline double gini(std::size_t ones, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(ones) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::span<const int> y, std::size_t max_depth,
             std::size_t features_per_split, CounterRng& rng)
      : x_(x), y_(y), max_depth_(max_depth), mtry_(features_per_split), rng_(rng) {}

  std::vector<TreeNode> grow(std::vector<std::size_t> sample) {
    build(sample, 0);
    return std::move(nodes_);
  }

 private:
  struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  int build(std::vector<std::size_t>& sample, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::size_t ones = 0;
    for (auto i : sample) ones += (y_[i] == 1);
    nodes_[id].value = static_cast<double>(ones) / static_cast<double>(sample.size());
    if (depth >= max_depth_ || ones == 0 || ones == sample.size() || sample.size() < 2) return id;

    const BestSplit best = find_split(sample, ones);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : sample)
      (x_(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(i);
    sample.clear();
    sample.shrink_to_fit();

    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int l = build(left, depth + 1);
    nodes_[id].left = l;
    const int r = build(right, depth + 1);
    nodes_[id].right = r;
    return id;
  }

  // Candidate features are drawn without replacement, then scanned in
  // ascending index order; strict improvement keeps the lowest feature and
  // lowest threshold on ties.
  BestSplit find_split(const std::vector<std::size_t>& sample, std::size_t ones) {
    const std::size_t m = x_.cols();
    std::vector<std::size_t> features(m);
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t k = 0; k < mtry_; ++k) {
      const auto j = k + static_cast<std::size_t>(rng_.uniform_index(m - k));
      std::swap(features[k], features[j]);
    }
    features.resize(mtry_);
    std::sort(features.begin(), features.end());

    const std::size_t n = sample.size();
    const double parent = gini(ones, n);
    BestSplit best;
    best.impurity = parent;
    std::vector<std::size_t> order(sample);
    for (auto f : features) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::size_t left_n = 0, left_ones = 0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        ++left_n;
        left_ones += (y_[order[k]] == 1);
        const double v = x_(order[k], f), next = x_(order[k + 1], f);
        if (v == next) continue;
        const std::size_t right_n = n - left_n, right_ones = ones - left_ones;
        const double impurity = (static_cast<double>(left_n) * gini(left_ones, left_n) +
                                 static_cast<double>(right_n) * gini(right_ones, right_n)) /
                                static_cast<double>(n);
        if (impurity < best.impurity) {
          best.feature = static_cast<int>(f);
          best.threshold = v + (next - v) / 2.0;
          best.impurity = impurity;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t max_depth_;
  std::size_t mtry_;
  CounterRng& rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

class RandomForest final : public OpaqueModel {
 public:
  RandomForest(RandomForestConfig cfg, std::size_t m, std::vector<DecisionTree> trees)
      : cfg_(cfg), m_(m), trees_(std::move(trees)) {}

  std::vector<double> predict_proba(const Matrix& rows) const override {
    check_dimension(m_, rows);
    std::vector<double> out(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      std::size_t votes = 0;
      for (const auto& t : trees_) votes += static_cast<std::size_t>(t.vote(rows.row(i)));
      out[i] = static_cast<double>(votes) / static_cast<double>(trees_.size());
    }
    return out;
  }

  std::string kind() const override { return "random_forest"; }
  std::size_t n_features() const override { return m_; }
  const RandomForestConfig& config() const noexcept { return cfg_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  nlohmann::ordered_json to_json() const override {
    nlohmann::ordered_json j;
    j["spec_version"] = kSpecVersion;
    j["kind"] = kind();
    j["n_features"] = m_;
    j["config"] = {{"n_trees", cfg_.n_trees},
                   {"max_depth", cfg_.max_depth},
                   {"features_per_split", cfg_.features_per_split},
                   {"seed", cfg_.seed}};
    auto& trees = j["trees"] = nlohmann::ordered_json::array();
    for (const auto& t : trees_) {
      auto nodes = nlohmann::ordered_json::array();
      for (const auto& n : t.nodes())
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      trees.push_back(std::move(nodes));
    }
    return j;
  }

  static RandomForest from_json(const nlohmann::ordered_json& j) {
    RandomForestConfig cfg;
    const auto& c = j.at("config");
    cfg.n_trees = c.at("n_trees").get<std::size_t>();
    cfg.max_depth = c.at("max_depth").get<std::size_t>();
    cfg.features_per_split = c.at("features_per_split").get<std::size_t>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& n : t)
        nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                         n.at(3).get<int>(), n.at(4).get<double>()});
      trees.emplace_back(std::move(nodes));
    }
    if (trees.empty()) throw model_error("random forest model has no trees");
    return {cfg, j.at("n_features").get<std::size_t>(), std::move(trees)};
  }

 private:
  RandomForestConfig cfg_;
  std::size_t m_;
  std::vector<DecisionTree> trees_;
};

/// Trains a forest. Tree t draws its bootstrap sample and split features from
/// CounterRng(derive(seed, t)), so trees are independent of build order.
inline RandomForest train_random_forest(const Matrix& x, std::span<const int> y,
                                        RandomForestConfig cfg) {
  const std::size_t n = x.rows(), m = x.cols();
  if (n == 0 || m == 0) throw model_error("random forest: empty training set");
  if (y.size() != n) throw model_error("random forest: label count does not match rows");
  const auto ones = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (ones == 0 || ones == n)
    throw model_error("random forest: training set contains a single class");
  if (cfg.features_per_split == 0)
    cfg.features_per_split =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  if (cfg.n_trees == 0 || cfg.max_depth == 0 || cfg.features_per_split > m)
    throw usage_error("random forest: n_trees and max_depth must be positive and "
                      "features_per_split <= m");

  std::vector<DecisionTree> trees;
  trees.reserve(cfg.n_trees);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    CounterRng rng(CounterRng::derive(cfg.seed, t));
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = static_cast<std::size_t>(rng.uniform_index(n));
    detail::TreeGrower grower(x, y, cfg.max_depth, cfg.features_per_split, rng);
    trees.emplace_back(grower.grow(std::move(sample)));
  }
  return {cfg, m, std::move(trees)};
}

inline RandomForest train_random_forest(const Dataset& train, RandomForestConfig cfg) {
  return train_random_forest(train.rows, train.labels, cfg);
}

}  // namespace dlime
