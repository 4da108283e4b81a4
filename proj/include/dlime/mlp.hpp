#pragma once

// Feed-forward network with sigmoid hidden and output units, trained by
// full-batch gradient descent on mean binary cross-entropy.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"
#include "dlime/data.hpp"
#include "dlime/model.hpp"
#include "dlime/rng.hpp"

namespace dlime {

struct MlpConfig {
  std::vector<std::size_t> hidden_layers{5, 2};
  double learning_rate = 0.1;
  std::size_t epochs = 2000;
  std::uint64_t seed = 0;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Network parameters are one flat vector. Layer l (mapping width a to b)
/// holds its b x a weight matrix row-major followed by its b biases.
class Mlp final : public OpaqueModel {
 public:
  Mlp(std::vector<std::size_t> layer_sizes, std::vector<double> params)
      : sizes_(std::move(layer_sizes)), params_(std::move(params)) {
    if (sizes_.size() < 2 || sizes_.back() != 1) throw model_error("mlp: invalid layer sizes");
    if (params_.size() != parameter_count(sizes_))
      throw model_error("mlp: parameter vector has wrong length");
  }

  static std::size_t parameter_count(const std::vector<std::size_t>& sizes) {
    std::size_t count = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l) count += sizes[l] * sizes[l - 1] + sizes[l];
    return count;
  }

  std::vector<double> predict_proba(const Matrix& rows) const override {
    check_dimension(sizes_.front(), rows);
    std::vector<double> out(rows.rows());
    std::vector<std::vector<double>> acts;
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = sigmoid(forward(rows.row(i), acts));
    return out;
  }

  /// Mean cross-entropy over the batch and its gradient w.r.t. every parameter.
  std::pair<double, std::vector<double>> loss_and_gradient(const Matrix& x,
                                                           std::span<const int> y) const {
    check_dimension(sizes_.front(), x);
    std::vector<double> grad(params_.size(), 0.0);
    std::vector<std::vector<double>> acts;
    std::vector<double> delta, prev_delta;
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    const std::size_t n_layers = sizes_.size() - 1;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double z = forward(x.row(i), acts);
      const double t = static_cast<double>(y[i]);
      // softplus(z) - t z, written to avoid overflow
      loss += (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - t * z) * inv_n;
      delta.assign(1, (sigmoid(z) - t) * inv_n);
      for (std::size_t l = n_layers; l-- > 0;) {
        const std::size_t in = sizes_[l], out = sizes_[l + 1];
        const std::size_t w0 = offset(l), b0 = w0 + in * out;
        const auto& a = acts[l];
        for (std::size_t o = 0; o < out; ++o) {
          for (std::size_t k = 0; k < in; ++k) grad[w0 + o * in + k] += delta[o] * a[k];
          grad[b0 + o] += delta[o];
        }
        if (l == 0) break;
        prev_delta.assign(in, 0.0);
        for (std::size_t k = 0; k < in; ++k) {
          double s = 0.0;
          for (std::size_t o = 0; o < out; ++o) s += params_[w0 + o * in + k] * delta[o];
          prev_delta[k] = s * a[k] * (1.0 - a[k]);
        }
        std::swap(delta, prev_delta);
      }
    }
    return {loss, std::move(grad)};
  }

  std::string kind() const override { return "mlp"; }
  std::size_t n_features() const override { return sizes_.front(); }
  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  std::vector<double>& mutable_parameters() noexcept { return params_; }

  nlohmann::ordered_json to_json() const override {
    nlohmann::ordered_json j;
    j["spec_version"] = kSpecVersion;
    j["kind"] = kind();
    j["n_features"] = sizes_.front();
    j["layer_sizes"] = sizes_;
    j["parameters"] = params_;
    return j;
  }

  static Mlp from_json(const nlohmann::ordered_json& j) {
    return {j.at("layer_sizes").get<std::vector<std::size_t>>(),
            j.at("parameters").get<std::vector<double>>()};
  }

 private:
  std::size_t offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) off += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    return off;
  }

  // Returns the output pre-activation; acts[l] receives the input to layer l.
  double forward(std::span<const double> x, std::vector<std::vector<double>>& acts) const {
    const std::size_t n_layers = sizes_.size() - 1;
    acts.resize(n_layers);
    acts[0].assign(x.begin(), x.end());
    std::size_t off = 0;
    double z_out = 0.0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::size_t in = sizes_[l], out = sizes_[l + 1];
      const auto& a = acts[l];
      std::vector<double> next(out);
      for (std::size_t o = 0; o < out; ++o) {
        double z = params_[off + in * out + o];
        for (std::size_t k = 0; k < in; ++k) z += params_[off + o * in + k] * a[k];
        if (l + 1 == n_layers)
          z_out = z;
        else
          next[o] = sigmoid(z);
      }
      off += in * out + out;
      if (l + 1 < n_layers) acts[l + 1] = std::move(next);
    }
    return z_out;
  }

  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
};

/// Weights and biases start uniform in [-0.5, 0.5] drawn in parameter order
/// from CounterRng(seed).
inline Mlp train_mlp(const Matrix& x, std::span<const int> y, const MlpConfig& cfg) {
  if (x.rows() == 0) throw model_error("mlp: empty training set");
  if (y.size() != x.rows()) throw model_error("mlp: label count does not match rows");
  const auto ones = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (ones == 0 || ones == y.size()) throw model_error("mlp: training set contains a single class");
  if (cfg.hidden_layers.empty() || !(cfg.learning_rate > 0) || cfg.epochs == 0)
    throw usage_error("mlp: needs at least one hidden layer, positive learning rate and epochs");
  std::vector<std::size_t> sizes{x.cols()};
  for (auto h : cfg.hidden_layers) {
    if (h == 0) throw usage_error("mlp: hidden layer sizes must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(1);

  CounterRng rng(cfg.seed);
  std::vector<double> params(Mlp::parameter_count(sizes));
  for (auto& p : params) p = rng.uniform(-0.5, 0.5);
  Mlp net(sizes, std::move(params));
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto grad = net.loss_and_gradient(x, y).second;
    auto& p = net.mutable_parameters();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= cfg.learning_rate * grad[k];
  }
  return net;
}

inline Mlp train_mlp(const Dataset& train, const MlpConfig& cfg) {
  return train_mlp(train.rows, train.labels, cfg);
}

}  // namespace dlime
