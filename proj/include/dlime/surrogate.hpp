#pragma once

// Weighted linear surrogate and K-feature selection.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlime/core.hpp"

namespace dlime {

struct LinearSurrogate {
  double intercept = 0.0;
  std::vector<double> coefficients;
  double r_squared = 0.0;
  std::size_t training_size = 0;
  double weighted_rss = 0.0;

  double predict(std::span<const double> x) const {
    double v = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) v += coefficients[j] * x[j];
    return v;
  }
};

inline constexpr double kRidge = 1e-6;

namespace detail {

// In-place Cholesky of a symmetric positive-definite p x p matrix (row-major,
// lower triangle used).
inline void cholesky(std::vector<double>& a, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > 0)) throw internal_error("cholesky: matrix not positive definite");
    const double l = std::sqrt(d);
    a[j * p + j] = l;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / l;
    }
  }
}

inline std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t p,
                                          std::vector<double> b) {
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * p + k] * b[k];
    b[i] /= l[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;) {
    for (std::size_t k = i + 1; k < p; ++k) b[i] -= l[k * p + i] * b[k];
    b[i] /= l[i * p + i];
  }
  return b;
}

}  // namespace detail

/// Minimizes sum_i w_i (y_i - a - b.x_i)^2.
///
/// Columns are centered at their weighted means so the intercept is
/// unpenalized. The centered normal equations A b = c are solved with the
/// damped matrix A + ridge*I and refined by iterating b += (A + ridge*I)^-1
/// (c - A b); on well-posed systems this converges to the undamped solution,
/// and on rank-deficient ones null-space components stay zero.
inline LinearSurrogate fit_weighted_least_squares(const Matrix& x, std::span<const double> y,
                                                  std::span<const double> w,
                                                  double ridge = kRidge) {
  const std::size_t s = x.rows(), p = x.cols();
  if (s == 0) throw usage_error("least squares: no samples");
  if (y.size() != s || w.size() != s)
    throw usage_error("least squares: dimension mismatch between X, y and weights");
  double sw = 0.0;
  for (double wi : w) {
    if (!(wi >= 0)) throw usage_error("least squares: weights must be non-negative");
    sw += wi;
  }
  if (!(sw > 0)) throw usage_error("least squares: all sample weights are zero");

  std::vector<double> xbar(p, 0.0);
  double ybar = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    ybar += w[i] * y[i];
    for (std::size_t j = 0; j < p; ++j) xbar[j] += w[i] * x(i, j);
  }
  ybar /= sw;
  for (auto& v : xbar) v /= sw;

  std::vector<double> a(p * p, 0.0), c(p, 0.0), xc(p);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < p; ++j) xc[j] = x(i, j) - xbar[j];
    const double yc = y[i] - ybar;
    for (std::size_t j = 0; j < p; ++j) {
      c[j] += w[i] * xc[j] * yc;
      for (std::size_t k = 0; k <= j; ++k) a[j * p + k] += w[i] * xc[j] * xc[k];
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) a[k * p + j] = a[j * p + k];

  std::vector<double> beta(p, 0.0);
  if (p > 0) {
    std::vector<double> l(a);
    for (std::size_t j = 0; j < p; ++j) l[j * p + j] += ridge;
    detail::cholesky(l, p);
    beta = detail::cholesky_solve(l, p, c);
    constexpr int kRefinementSteps = 6;
    std::vector<double> r(p);
    for (int it = 0; it < kRefinementSteps; ++it) {
      for (std::size_t j = 0; j < p; ++j) {
        double v = c[j];
        for (std::size_t k = 0; k < p; ++k) v -= a[j * p + k] * beta[k];
        r[j] = v;
      }
      const auto delta = detail::cholesky_solve(l, p, r);
      for (std::size_t j = 0; j < p; ++j) beta[j] += delta[j];
    }
  }

  LinearSurrogate fit;
  fit.coefficients = beta;
  fit.intercept = ybar;
  for (std::size_t j = 0; j < p; ++j) fit.intercept -= beta[j] * xbar[j];
  fit.training_size = s;
  double rss = 0.0, tss = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    const double e = y[i] - fit.predict(x.row(i));
    rss += w[i] * e * e;
    tss += w[i] * (y[i] - ybar) * (y[i] - ybar);
    sq += w[i] * y[i] * y[i];
  }
  fit.weighted_rss = rss;
  // a response constant up to rounding counts as perfectly fit
  fit.r_squared = tss > 1e-24 * sq ? 1.0 - rss / tss : 1.0;
  return fit;
}

enum class SelectionMode { forward, highest_weights };

inline std::string to_string(SelectionMode m) {
  return m == SelectionMode::forward ? "forward" : "highest_weights";
}

struct FeatureSelection {
  SelectionMode mode = SelectionMode::highest_weights;
  std::size_t requested_k = 0;
  std::vector<std::size_t> selected;
  bool clamped = false;  // requested_k exceeded the feature count
};

/// Forward selection when there are fewer than 6 features, highest absolute
/// weights otherwise.
inline SelectionMode selection_mode_for(std::size_t n_features) {
  return n_features < 6 ? SelectionMode::forward : SelectionMode::highest_weights;
}

/// Picks min(K, m) features.
///
/// forward: K greedy rounds, each adding the feature whose inclusion gives
/// the smallest weighted residual sum of squares; reported in selection
/// order. highest_weights: one fit on all features, the K largest
/// |coefficient| reported in descending order. Ties go to the lower index.
inline FeatureSelection select_features(const Matrix& x, std::span<const double> y,
                                        std::span<const double> w, std::size_t k,
                                        std::optional<SelectionMode> force_mode = std::nullopt) {
  if (k == 0) throw usage_error("feature selection: K must be at least 1");
  const std::size_t m = x.cols();
  FeatureSelection sel;
  sel.mode = force_mode.value_or(selection_mode_for(m));
  sel.requested_k = k;
  sel.clamped = k > m;
  const std::size_t target = std::min(k, m);

  if (sel.mode == SelectionMode::forward) {
    std::vector<bool> used(m, false);
    for (std::size_t round = 0; round < target; ++round) {
      std::size_t best = m;
      double best_rss = 0.0;
      std::vector<std::size_t> cols(sel.selected);
      cols.push_back(0);
      for (std::size_t j = 0; j < m; ++j) {
        if (used[j]) continue;
        cols.back() = j;
        const double rss = fit_weighted_least_squares(x.select_cols(cols), y, w).weighted_rss;
        if (best == m || rss < best_rss) {
          best = j;
          best_rss = rss;
        }
      }
      used[best] = true;
      sel.selected.push_back(best);
    }
    return sel;
  }

  const auto full = fit_weighted_least_squares(x, y, w);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(full.coefficients[a]) > std::abs(full.coefficients[b]);
  });
  sel.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target));
  return sel;
}

struct WeightedFeature {
  std::string feature;
  double weight = 0.0;
  bool operator==(const WeightedFeature&) const = default;
};

struct SparseExplanation {
  std::vector<WeightedFeature> entries;
  LinearSurrogate refit;
  FeatureSelection selection;
};

/// Refits on the selected columns only and pairs each selected feature name
/// with its refit coefficient, in selection order.
inline SparseExplanation explain_with_surrogate(const Matrix& x, std::span<const double> y,
                                                std::span<const double> w, std::size_t k,
                                                std::span<const std::string> feature_names,
                                                std::optional<SelectionMode> force_mode = std::nullopt) {
  if (feature_names.size() != x.cols())
    throw usage_error("surrogate: feature name count does not match columns");
  SparseExplanation out;
  out.selection = select_features(x, y, w, k, force_mode);
  out.refit = fit_weighted_least_squares(x.select_cols(out.selection.selected), y, w);
  for (std::size_t i = 0; i < out.selection.selected.size(); ++i)
    out.entries.push_back({feature_names[out.selection.selected[i]], out.refit.coefficients[i]});
  return out;
}

}  // namespace dlime
