#pragma once

// Plain-text SVG figures: explanation bar chart, distance heatmap and
// dendrogram. Output is a pure function of the input, so files can be
// compared byte-for-byte.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "dlime/clustering.hpp"
#include "dlime/explainers.hpp"
#include "dlime/stability.hpp"

namespace dlime::svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string header(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" fill=\"#ffffff\"/>\n";
}

inline constexpr const char* kPositive = "#2e9d4a";
inline constexpr const char* kNegative = "#d43c33";

/// Horizontal bars, one per explanation entry in order: green for positive
/// weights, red for negative, drawn from a shared zero axis.
inline std::string explanation_bars(const Explanation& e, const std::string& title = {}) {
  const double label_w = 220, plot_w = 360, row_h = 28, top = 40, pad = 20;
  const double height = top + row_h * static_cast<double>(e.entries.size()) + pad + 20;
  const double width = label_w + plot_w + 2 * pad;
  double max_abs = 0.0;
  for (const auto& w : e.entries) max_abs = std::max(max_abs, std::abs(w.weight));
  if (max_abs == 0.0) max_abs = 1.0;
  const double zero_x = label_w + pad + plot_w / 2;
  const double scale = (plot_w / 2 - 10) / max_abs;

  std::string s = header(width, height);
  s += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape(title.empty() ? to_string(e.method) + " explanation" : title) + "</text>\n";
  for (std::size_t i = 0; i < e.entries.size(); ++i) {
    const auto& w = e.entries[i];
    const double y = top + row_h * static_cast<double>(i);
    const double len = std::abs(w.weight) * scale;
    const double x = w.weight >= 0 ? zero_x : zero_x - len;
    s += "<text x=\"" + num(label_w + pad - 6) + "\" y=\"" + num(y + row_h / 2 + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + escape(w.feature) +
         "</text>\n";
    s += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(y + 4) + "\" width=\"" + num(len) +
         "\" height=\"" + num(row_h - 8) + "\" fill=\"" + (w.weight >= 0 ? kPositive : kNegative) +
         "\"><title>" + escape(w.feature) + " " + num(w.weight) + "</title></rect>\n";
  }
  const double axis_bottom = top + row_h * static_cast<double>(e.entries.size());
  s += "<line x1=\"" + num(zero_x) + "\" y1=\"" + num(top) + "\" x2=\"" + num(zero_x) + "\" y2=\"" +
       num(axis_bottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  s += "</svg>\n";
  return s;
}

/// Matrix heatmap on a white-to-dark-blue ramp over [0, 1].
inline std::string distance_heatmap(const std::vector<std::vector<double>>& m,
                                    const std::string& title = {}) {
  const std::size_t n = m.size();
  const double cell = 36, left = 40, top = 50;
  const double width = left + cell * static_cast<double>(n) + 20;
  const double height = top + cell * static_cast<double>(n) + 30;
  std::string s = header(width, height);
  s += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape(title) + "</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(top + cell * (static_cast<double>(i) + 0.5) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + std::to_string(i + 1) +
         "</text>\n";
    s += "<text x=\"" + num(left + cell * (static_cast<double>(i) + 0.5)) + "\" y=\"" + num(top - 6) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + std::to_string(i + 1) +
         "</text>\n";
    for (std::size_t j = 0; j < n; ++j) {
      const double v = std::clamp(m[i][j], 0.0, 1.0);
      const int r = static_cast<int>(std::lround(255 - v * (255 - 8)));
      const int g = static_cast<int>(std::lround(255 - v * (255 - 48)));
      const int b = static_cast<int>(std::lround(255 - v * (255 - 107)));
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", r, g, b);
      const double x = left + cell * static_cast<double>(j), y = top + cell * static_cast<double>(i);
      s += "<rect class=\"cell\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) +
           "\" height=\"" + num(cell) + "\" fill=\"" + color + "\" stroke=\"#cccccc\"/>\n";
      s += "<text x=\"" + num(x + cell / 2) + "\" y=\"" + num(y + cell / 2 + 4) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" +
           (v > 0.5 ? "#ffffff" : "#000000") + "\">" + num(m[i][j]) + "</text>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

/// Classic U-link dendrogram. Leaves are laid out in tree order so links do
/// not cross.
inline std::string dendrogram_plot(const Dendrogram& d, const std::string& title = {}) {
  const std::size_t n = d.n_leaves;
  const double left = 50, top = 40, plot_w = std::max(400.0, 4.0 * static_cast<double>(n)),
               plot_h = 300;
  const double width = left + plot_w + 20, height = top + plot_h + 30;
  std::string s = header(width, height);
  s += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape(title) + "</text>\n";
  if (n < 2 || d.merges.empty()) return s + "</svg>\n";

  const double max_h = std::max(d.merges.back().height, 1e-12);
  // leaf order by depth-first traversal from the root
  std::vector<double> xpos(2 * n - 1, 0.0), ypos(2 * n - 1, 0.0);
  std::vector<std::size_t> stack{2 * n - 2}, order;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (v < n) {
      order.push_back(v);
      continue;
    }
    const auto& m = d.merges[v - n];
    stack.push_back(m.right);
    stack.push_back(m.left);
  }
  const double step = plot_w / static_cast<double>(n);
  for (std::size_t i = 0; i < order.size(); ++i) {
    xpos[order[i]] = left + step * (static_cast<double>(i) + 0.5);
    ypos[order[i]] = top + plot_h;
  }
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    const std::size_t v = n + k;
    xpos[v] = (xpos[m.left] + xpos[m.right]) / 2;
    ypos[v] = top + plot_h - plot_h * (m.height / max_h);
    s += "<path class=\"link\" d=\"M" + num(xpos[m.left]) + " " + num(ypos[m.left]) + " V" +
         num(ypos[v]) + " H" + num(xpos[m.right]) + " V" + num(ypos[m.right]) +
         "\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1\"/>\n";
  }
  s += "<line x1=\"" + num(left - 10) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left - 10) +
       "\" y2=\"" + num(top + plot_h) + "\" stroke=\"#333333\"/>\n";
  s += "<text x=\"" + num(left - 14) + "\" y=\"" + num(top + 4) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(max_h) + "</text>\n";
  s += "<text x=\"" + num(left - 14) + "\" y=\"" + num(top + plot_h) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">0.00</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace dlime::svg
