#pragma once

// Explanation stability: Jaccard similarity between selected-feature sets of
// repeated explanations of one instance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"
#include "dlime/explainers.hpp"

namespace dlime {

struct JaccardCounts {
  std::size_t intersection = 0;
  std::size_t union_size = 0;
};

template <class T>
JaccardCounts jaccard_counts(const std::set<T>& a, const std::set<T>& b) {
  std::vector<T> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  return {inter.size(), a.size() + b.size() - inter.size()};
}

/// |A n B| / |A u B|; two empty sets count as identical (1).
template <class T>
double jaccard_coefficient(const std::set<T>& a, const std::set<T>& b) {
  const auto c = jaccard_counts(a, b);
  if (c.union_size == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(c.union_size);
}

template <class T>
double jaccard_distance(const std::set<T>& a, const std::set<T>& b) {
  return 1.0 - jaccard_coefficient(a, b);
}

struct StabilityReport {
  Method method = Method::dlime;
  std::string dataset;
  std::string model;
  std::size_t iterations = 0;
  std::vector<std::set<std::string>> feature_sets;
  std::vector<std::vector<WeightedFeature>> weights;
  std::vector<std::vector<double>> distance_matrix;
  double average_distance = 0.0;
  double max_weight_delta = 0.0;  // largest |weight difference| of any feature over any pair
  bool identical_weights = true;  // every iteration's entry list is bit-equal to the first
  bool empty_sets_seen = false;
};

/// Runs `explain(iteration)` for iteration = 0..iterations-1 and fills the
/// pairwise distance matrix. The average is over the off-diagonal pairs.
template <class ExplainFn>
StabilityReport run_stability(ExplainFn&& explain, std::size_t iterations, Method method,
                              std::string dataset = {}, std::string model = {}) {
  if (iterations < 2) throw usage_error("stability needs at least 2 iterations");
  StabilityReport r;
  r.method = method;
  r.dataset = std::move(dataset);
  r.model = std::move(model);
  r.iterations = iterations;
  for (std::size_t it = 0; it < iterations; ++it) {
    Explanation e;
    try {
      e = explain(it);
    } catch (const Error& err) {
      throw Error(err.kind(), "stability iteration " + std::to_string(it) + ": " + err.what());
    }
    const auto names = e.feature_names();
    r.feature_sets.emplace_back(names.begin(), names.end());
    r.empty_sets_seen = r.empty_sets_seen || names.empty();
    r.weights.push_back(e.entries);
  }
  r.distance_matrix.assign(iterations, std::vector<double>(iterations, 0.0));
  double sum = 0.0;
  for (std::size_t i = 0; i < iterations; ++i)
    for (std::size_t j = i + 1; j < iterations; ++j) {
      const double d = jaccard_distance(r.feature_sets[i], r.feature_sets[j]);
      r.distance_matrix[i][j] = r.distance_matrix[j][i] = d;
      sum += d;
    }
  r.average_distance = sum / static_cast<double>(iterations * (iterations - 1) / 2);

  for (std::size_t i = 0; i < iterations; ++i) {
    r.identical_weights = r.identical_weights && r.weights[i] == r.weights[0];
    for (std::size_t j = i + 1; j < iterations; ++j) {
      std::set<std::string> all(r.feature_sets[i]);
      all.insert(r.feature_sets[j].begin(), r.feature_sets[j].end());
      auto weight_of = [](const std::vector<WeightedFeature>& ws, const std::string& f) {
        for (const auto& w : ws)
          if (w.feature == f) return w.weight;
        return 0.0;
      };
      for (const auto& f : all)
        r.max_weight_delta = std::max(
            r.max_weight_delta, std::abs(weight_of(r.weights[i], f) - weight_of(r.weights[j], f)));
    }
  }
  return r;
}

inline nlohmann::ordered_json to_json(const StabilityReport& r) {
  nlohmann::ordered_json j;
  j["spec_version"] = kSpecVersion;
  j["method"] = to_string(r.method);
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  j["iterations"] = r.iterations;
  auto& sets = j["feature_sets"] = nlohmann::ordered_json::array();
  for (const auto& s : r.feature_sets) sets.push_back(std::vector<std::string>(s.begin(), s.end()));
  j["distance_matrix"] = r.distance_matrix;
  j["average_distance"] = r.average_distance;
  j["max_weight_delta"] = r.max_weight_delta;
  j["identical_weights"] = r.identical_weights;
  return j;
}

}  // namespace dlime
