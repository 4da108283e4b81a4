#pragma once

#include <concepts>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"

namespace dlime {

/// Anything that maps a k x m matrix to k probabilities of class 1.
template <class M>
concept Predictor = requires(const M& model, const Matrix& rows) {
  { model.predict_proba(rows) } -> std::convertible_to<std::vector<double>>;
};

/// Runtime-polymorphic opaque classifier.
class OpaqueModel {
 public:
  virtual ~OpaqueModel() = default;
  virtual std::vector<double> predict_proba(const Matrix& rows) const = 0;
  virtual std::string kind() const = 0;
  virtual std::size_t n_features() const = 0;
  virtual nlohmann::ordered_json to_json() const = 0;
};

/// Wraps a callable row -> probability. Handy for synthetic black boxes.
class FunctionModel final : public OpaqueModel {
 public:
  FunctionModel(std::size_t m, std::function<double(std::span<const double>)> f)
      : m_(m), fn_(std::move(f)) {}

  std::vector<double> predict_proba(const Matrix& rows) const override {
    if (rows.cols() != m_)
      throw model_error("dimension mismatch: model expects " + std::to_string(m_) +
                        " features, got " + std::to_string(rows.cols()));
    std::vector<double> out(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = fn_(rows.row(i));
    return out;
  }
  std::string kind() const override { return "function"; }
  std::size_t n_features() const override { return m_; }
  nlohmann::ordered_json to_json() const override {
    return {{"spec_version", kSpecVersion}, {"kind", "function"}, {"n_features", m_}};
  }

 private:
  std::size_t m_;
  std::function<double(std::span<const double>)> fn_;
};

inline void check_dimension(std::size_t expected, const Matrix& rows) {
  if (rows.cols() != expected)
    throw model_error("dimension mismatch: model expects " + std::to_string(expected) +
                      " features, got " + std::to_string(rows.cols()));
}

/// Fraction of rows where (p >= 0.5) equals the label.
template <Predictor M>
double accuracy(const M& model, const Matrix& rows, std::span<const int> labels) {
  if (rows.rows() == 0) return 0.0;
  const auto p = model.predict_proba(rows);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) correct += ((p[i] >= 0.5 ? 1 : 0) == labels[i]);
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

/// Accuracy of always predicting the most frequent label of `labels`.
inline double majority_baseline(std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  std::size_t ones = 0;
  for (int l : labels) ones += (l == 1);
  const std::size_t best = std::max(ones, labels.size() - ones);
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

}  // namespace dlime
