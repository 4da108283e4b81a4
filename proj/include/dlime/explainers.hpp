#pragma once

// End-to-end local explainers.
//
// DLIME: route the instance to a hierarchical cluster of the training rows
// through its nearest neighbors, query the black box on that cluster's rows
// and fit the sparse linear surrogate there. No randomness is involved.
//
// LIME baseline: draw random perturbations (quartile-binned by default, or
// plain N(0, 1) in standardized space), weight them by an exponential kernel
// around the instance and fit the same surrogate.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dlime/clustering.hpp"
#include "dlime/core.hpp"
#include "dlime/data.hpp"
#include "dlime/model.hpp"
#include "dlime/neighbors.hpp"
#include "dlime/rng.hpp"
#include "dlime/surrogate.hpp"

namespace dlime {

enum class Method { dlime, lime };

inline std::string to_string(Method m) { return m == Method::dlime ? "dlime" : "lime"; }

struct DlimeProvenance {
  int cluster_id = 0;
  std::size_t cluster_size = 0;
  bool operator==(const DlimeProvenance&) const = default;
};

enum class LimeSampling;

struct LimeProvenance {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  LimeSampling sampling{};
  bool operator==(const LimeProvenance&) const = default;
};

struct Explanation {
  std::string instance_id;
  Method method = Method::dlime;
  std::vector<WeightedFeature> entries;
  std::size_t k = 0;
  double surrogate_r2 = 0.0;
  SelectionMode selection_mode = SelectionMode::highest_weights;
  bool k_clamped = false;
  std::variant<DlimeProvenance, LimeProvenance> provenance;

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.feature);
    return out;
  }
};

inline double default_kernel_width(std::size_t n_features) {
  return 0.75 * std::sqrt(static_cast<double>(n_features));
}

inline double kernel_weight(double distance, double width) {
  return std::exp(-(distance * distance) / (width * width));
}

struct DlimeConfig {
  std::size_t k_neighbors = 1;
  std::size_t k_features = 5;
  std::size_t max_clusters = 10;
  bool use_distance_weights = false;
  std::optional<double> kernel_width;  // defaults to 0.75 sqrt(m)
  Linkage linkage = Linkage::average;
};

/// How LIME perturbs the instance.
///
/// continuous: every standardized feature ~ N(0, 1); the surrogate is fit on
/// the raw perturbed values.
/// quartile: each feature is cut at its training quartiles; samples draw a bin
/// per feature with the bin's training frequency and a value inside the bin;
/// the surrogate is fit on indicators "sample falls in the instance's bin".
enum class LimeSampling { continuous, quartile };

inline std::string to_string(LimeSampling s) {
  return s == LimeSampling::continuous ? "continuous" : "quartile";
}

inline LimeSampling parse_lime_sampling(const std::string& s) {
  if (s == "continuous") return LimeSampling::continuous;
  if (s == "quartile") return LimeSampling::quartile;
  throw usage_error("unknown LIME sampling '" + s + "' (expected quartile or continuous)");
}

struct LimeConfig {
  std::size_t n_samples = 5000;
  std::size_t k_features = 5;
  std::optional<double> kernel_width;  // defaults to 0.75 sqrt(m)
  std::uint64_t seed = 0;
  LimeSampling sampling = LimeSampling::quartile;
};

namespace detail {

inline void check_instance(const Dataset& train, std::span<const double> x) {
  if (x.size() != train.n_features())
    throw usage_error("instance has " + std::to_string(x.size()) + " features, training data has " +
                      std::to_string(train.n_features()));
}

inline Explanation assemble(const SparseExplanation& sparse, Method method, std::string id) {
  Explanation e;
  e.instance_id = std::move(id);
  e.method = method;
  e.entries = sparse.entries;
  e.k = sparse.selection.requested_k;
  e.surrogate_r2 = sparse.refit.r_squared;
  e.selection_mode = sparse.selection.mode;
  e.k_clamped = sparse.selection.clamped;
  return e;
}

}  // namespace detail

/// DLIME against a precomputed flat clustering of `train.rows`.
template <Predictor M>
Explanation dlime_explain(const Dataset& train, const M& model, std::span<const double> x,
                          const DlimeConfig& cfg, const FlatClustering& clustering,
                          std::string instance_id = {}) {
  detail::check_instance(train, x);
  if (clustering.assignments.size() != train.size())
    throw usage_error("clustering was not built from the training rows");
  const NeighborIndex index(train.rows, clustering.assignments);
  const int cluster = index.route(x, cfg.k_neighbors);
  const auto members = clustering.members(cluster);
  if (members.size() < 2)
    throw data_error("insufficient cluster: instance routed to cluster " + std::to_string(cluster) +
                     " of size " + std::to_string(members.size()) + " (needs at least 2 rows)");

  const Matrix samples = train.rows.select_rows(members);
  const std::vector<double> responses = model.predict_proba(samples);
  std::vector<double> weights(samples.rows(), 1.0);
  if (cfg.use_distance_weights) {
    const double width = cfg.kernel_width.value_or(default_kernel_width(train.n_features()));
    for (std::size_t i = 0; i < samples.rows(); ++i)
      weights[i] = kernel_weight(std::sqrt(squared_distance(samples.row(i), x)), width);
  }
  const auto sparse = explain_with_surrogate(samples, responses, weights, cfg.k_features,
                                             train.feature_names);
  auto e = detail::assemble(sparse, Method::dlime, std::move(instance_id));
  e.provenance = DlimeProvenance{cluster, members.size()};
  return e;
}

/// Holds the dendrogram and largest-gap clustering of a training set so that
/// many instances can be explained without re-clustering.
class DlimeExplainer {
 public:
  DlimeExplainer(const Dataset& train, DlimeConfig cfg)
      : train_(&train),
        cfg_(cfg),
        dendrogram_(agglomerate(train.rows, cfg.linkage)),
        clustering_(cut_largest_gap(dendrogram_, cfg.max_clusters)) {}

  template <Predictor M>
  Explanation explain(const M& model, std::span<const double> x, std::string id = {}) const {
    return dlime_explain(*train_, model, x, cfg_, clustering_, std::move(id));
  }

  const Dendrogram& dendrogram() const noexcept { return dendrogram_; }
  const FlatClustering& clustering() const noexcept { return clustering_; }
  const DlimeConfig& config() const noexcept { return cfg_; }

 private:
  const Dataset* train_;
  DlimeConfig cfg_;
  Dendrogram dendrogram_;
  FlatClustering clustering_;
};

/// Perturbation samples: n_samples rows with every standardized feature drawn
/// from N(0, 1), row by row, from CounterRng(seed).
inline Matrix lime_samples(std::size_t n_samples, std::size_t m, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix z(n_samples, m);
  for (std::size_t i = 0; i < n_samples; ++i)
    for (std::size_t j = 0; j < m; ++j) z(i, j) = rng.normal();
  return z;
}

/// Quartile bins of one training column.
///
/// Cut points are the 25/50/75th percentiles (linear interpolation between
/// order statistics) with duplicates removed; a value v falls in bin
/// #{cuts < v}. Each bin records its training frequency, value range, mean
/// and population stddev.
struct QuartileBins {
  std::vector<double> cuts;
  std::vector<double> frequency, lo, hi, mean, stddev;

  std::size_t bin_of(double v) const {
    return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
  }
  std::size_t n_bins() const noexcept { return cuts.size() + 1; }
};

inline double percentile(std::vector<double> sorted_values, double q) {
  const double pos = q * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_values.size() - 1);
  return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * (pos - static_cast<double>(lo));
}

inline QuartileBins quartile_bins(const Matrix& rows, std::size_t column) {
  std::vector<double> v(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) v[i] = rows(i, column);
  std::sort(v.begin(), v.end());
  QuartileBins b;
  for (double q : {0.25, 0.5, 0.75}) b.cuts.push_back(percentile(v, q));
  b.cuts.erase(std::unique(b.cuts.begin(), b.cuts.end()), b.cuts.end());
  const std::size_t k = b.n_bins();
  std::vector<std::vector<double>> members(k);
  for (double x : v) members[b.bin_of(x)].push_back(x);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& mem = members[i];
    b.frequency.push_back(static_cast<double>(mem.size()) / static_cast<double>(v.size()));
    b.lo.push_back(i == 0 ? v.front() : b.cuts[i - 1]);
    b.hi.push_back(i + 1 == k ? v.back() : b.cuts[i]);
    double mean = 0.0, ss = 0.0;
    for (double x : mem) mean += x;
    if (!mem.empty()) mean /= static_cast<double>(mem.size());
    for (double x : mem) ss += (x - mean) * (x - mean);
    b.mean.push_back(mean);
    b.stddev.push_back(mem.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(mem.size())));
  }
  return b;
}

struct QuartileSample {
  Matrix values;      // perturbed rows in standardized feature space (fed to the model)
  Matrix indicators;  // 1 where the sample shares the instance's bin
};

/// Row 0 is the instance itself. For the other rows, per feature: a bin with
/// probability equal to its training frequency, then a value from the
/// normal with the bin's mean and stddev, redrawn until it lies inside the
/// bin's range (up to 32 draws, then uniform in the range).
inline QuartileSample quartile_samples(const Matrix& train_rows, std::span<const double> x,
                                       std::size_t n_samples, std::uint64_t seed) {
  const std::size_t m = train_rows.cols();
  std::vector<QuartileBins> bins;
  std::vector<std::size_t> own_bin(m);
  for (std::size_t j = 0; j < m; ++j) {
    bins.push_back(quartile_bins(train_rows, j));
    own_bin[j] = bins[j].bin_of(x[j]);
  }
  CounterRng rng(seed);
  QuartileSample s{Matrix(n_samples, m), Matrix(n_samples, m)};
  for (std::size_t j = 0; j < m; ++j) {
    s.values(0, j) = x[j];
    s.indicators(0, j) = 1.0;
  }
  for (std::size_t i = 1; i < n_samples; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto& b = bins[j];
      double u = rng.uniform01();
      std::size_t bin = 0;
      while (bin + 1 < b.n_bins() && u >= b.frequency[bin]) u -= b.frequency[bin++];
      double v = b.mean[bin];
      if (b.hi[bin] > b.lo[bin] && b.stddev[bin] > 0) {
        bool inside = false;
        for (int t = 0; t < 32 && !inside; ++t) {
          v = b.mean[bin] + b.stddev[bin] * rng.normal();
          inside = v >= b.lo[bin] && v <= b.hi[bin];
        }
        if (!inside) v = rng.uniform(b.lo[bin], b.hi[bin]);
      } else {
        v = std::clamp(v, b.lo[bin], b.hi[bin]);
      }
      s.values(i, j) = v;
      s.indicators(i, j) = bin == own_bin[j] ? 1.0 : 0.0;
    }
  }
  return s;
}

template <Predictor M>
Explanation lime_explain(const Dataset& train, const M& model, std::span<const double> x,
                         const LimeConfig& cfg, std::string instance_id = {}) {
  detail::check_instance(train, x);
  if (cfg.n_samples < 2) throw usage_error("lime: n_samples must be at least 2");
  const std::size_t m = train.n_features();
  const double width = cfg.kernel_width.value_or(default_kernel_width(m));

  Matrix design, queried;
  std::vector<double> weights(cfg.n_samples);
  if (cfg.sampling == LimeSampling::continuous) {
    design = lime_samples(cfg.n_samples, m, cfg.seed);
    for (std::size_t i = 0; i < design.rows(); ++i)
      weights[i] = kernel_weight(std::sqrt(squared_distance(design.row(i), x)), width);
    queried = design;
  } else {
    auto qs = quartile_samples(train.rows, x, cfg.n_samples, cfg.seed);
    const std::vector<double> ones(m, 1.0);
    for (std::size_t i = 0; i < qs.indicators.rows(); ++i)
      weights[i] = kernel_weight(std::sqrt(squared_distance(qs.indicators.row(i), ones)), width);
    design = std::move(qs.indicators);
    queried = std::move(qs.values);
  }
  const std::vector<double> responses = model.predict_proba(queried);
  const auto sparse =
      explain_with_surrogate(design, responses, weights, cfg.k_features, train.feature_names);
  auto e = detail::assemble(sparse, Method::lime, std::move(instance_id));
  e.provenance = LimeProvenance{cfg.n_samples, cfg.seed, cfg.sampling};
  return e;
}

inline nlohmann::ordered_json to_json(const Explanation& e) {
  nlohmann::ordered_json j;
  j["spec_version"] = kSpecVersion;
  j["method"] = to_string(e.method);
  j["instance_id"] = e.instance_id;
  j["K"] = e.k;
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  for (const auto& w : e.entries) entries.push_back({{"feature", w.feature}, {"weight", w.weight}});
  j["r2"] = e.surrogate_r2;
  if (const auto* d = std::get_if<DlimeProvenance>(&e.provenance))
    j["provenance"] = {{"cluster_id", d->cluster_id}, {"cluster_size", d->cluster_size}};
  else {
    const auto& l = std::get<LimeProvenance>(e.provenance);
    j["provenance"] = {{"n_samples", l.n_samples}, {"seed", l.seed}, {"sampling", to_string(l.sampling)}};
  }
  j["selection_mode"] = to_string(e.selection_mode);
  j["k_clamped"] = e.k_clamped;
  return j;
}

}  // namespace dlime
