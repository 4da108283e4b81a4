#pragma once

// Tabular dataset ingestion: RFC-4180 CSV parsing, column-role schema,
// missing-row removal, z-score standardization and seeded train/test splits.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"
#include "dlime/rng.hpp"

namespace dlime {

struct Standardization {
  double mean = 0.0;
  double stddev = 1.0;
  bool operator==(const Standardization&) const = default;
};

/// Standardized feature matrix with binary labels.
///
/// `rows` holds z-scored values; `standardization[j]` recovers the raw scale
/// as raw = z * stddev + mean. `source_rows` keeps the 1-based CSV record
/// number (header excluded) each row came from.
struct Dataset {
  std::string name;
  std::vector<std::string> feature_names;
  Matrix rows;
  std::vector<int> labels;
  std::array<std::string, 2> class_names;
  std::vector<Standardization> standardization;
  std::vector<std::size_t> source_rows;

  std::size_t size() const noexcept { return rows.rows(); }
  std::size_t n_features() const noexcept { return rows.cols(); }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.rows = rows.select_rows(idx);
    out.class_names = class_names;
    out.standardization = standardization;
    out.labels.reserve(idx.size());
    out.source_rows.reserve(idx.size());
    for (auto i : idx) {
      out.labels.push_back(labels[i]);
      out.source_rows.push_back(source_rows[i]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> line_numbers;  // physical line where each record starts
};

/// Parses RFC-4180 text. The first record is the header. Accepts LF or CRLF
/// line endings, quoted fields with doubled-quote escapes and embedded line
/// breaks. Lines with no characters at all are skipped.
inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool any_in_record = false;
  bool have_header = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (!have_header) {
      table.header = std::move(record);
      have_header = true;
    } else {
      if (record.size() != table.header.size())
        throw data_error("CSV parse error at line " + std::to_string(record_line) + ": expected " +
                         std::to_string(table.header.size()) + " fields, found " +
                         std::to_string(record.size()));
      table.records.push_back(std::move(record));
      table.line_numbers.push_back(record_line);
    }
    record.clear();
    any_in_record = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          throw data_error("CSV parse error at line " + std::to_string(line) +
                           ": quote inside unquoted field");
        in_quotes = true;
        field_was_quoted = true;
        any_in_record = true;
        break;
      case ',':
        end_field();
        any_in_record = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        if (any_in_record || !record.empty()) end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (field_was_quoted)
          throw data_error("CSV parse error at line " + std::to_string(line) +
                           ": characters after closing quote");
        field.push_back(c);
        any_in_record = true;
    }
  }
  if (in_quotes)
    throw data_error("CSV parse error at line " + std::to_string(record_line) +
                     ": unterminated quoted field");
  if (any_in_record || !field.empty()) end_record();
  if (!have_header) throw data_error("CSV parse error at line 1: missing header");
  return table;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::optional<double> parse_real(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------
// Schema and loading

/// Column roles by header name. Columns that are neither the label nor an id
/// column are features.
struct CsvSchema {
  std::string name;
  std::string label_column;
  std::vector<std::string> id_columns;
  std::set<std::string> missing_tokens{"?", "", "NA"};
};

/// Standardizes each column to zero mean and unit population stddev.
/// Constant columns become all zeros with stddev recorded as 1.
inline std::pair<Matrix, std::vector<Standardization>> standardize(const Matrix& raw) {
  if (raw.rows() < 2) throw data_error("standardize needs at least 2 rows");
  const std::size_t n = raw.rows(), m = raw.cols();
  Matrix out(n, m);
  std::vector<Standardization> stats(m);
  for (std::size_t j = 0; j < m; ++j) {
    bool constant = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += raw(i, j);
      constant = constant && raw(i, j) == raw(0, j);
    }
    if (constant) {
      stats[j] = {raw(0, j), 1.0};
      continue;  // column stays zero
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (raw(i, j) - mean) * (raw(i, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    stats[j] = {mean, sd};
    for (std::size_t i = 0; i < n; ++i) out(i, j) = (raw(i, j) - mean) / sd;
  }
  return {std::move(out), std::move(stats)};
}

inline Matrix destandardize(const Matrix& z, std::span<const Standardization> stats) {
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j)
      out(i, j) = z(i, j) * stats[j].stddev + stats[j].mean;
  return out;
}

namespace detail {

// Ascending order used for label and binary-category mapping: numeric when
// every value parses as a number, lexicographic otherwise.
inline std::vector<std::string> ordered_values(const std::set<std::string>& values) {
  std::vector<std::string> out(values.begin(), values.end());
  const bool numeric = std::all_of(out.begin(), out.end(),
                                   [](const std::string& v) { return parse_real(v).has_value(); });
  if (numeric)
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return *parse_real(a) < *parse_real(b);
    });
  return out;
}

}  // namespace detail

/// Builds a Dataset from a parsed table.
///
/// Rows containing a missing token in any feature or label column are dropped.
/// Feature columns must be numeric, except that a column holding exactly two
/// distinct non-numeric values is mapped to {0, 1} in lexicographic order.
/// Labels map to {0, 1} by ascending raw value.
inline Dataset dataset_from_table(const CsvTable& table, const CsvSchema& schema) {
  const auto& header = table.header;
  {
    std::set<std::string> seen;
    for (const auto& h : header)
      if (!seen.insert(h).second) throw schema_error("duplicate column name: " + h);
  }
  auto column_of = [&](const std::string& name, const char* flag) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw schema_error("column '" + name + "' given by " + flag + " not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  if (schema.label_column.empty()) throw schema_error("no label column given (--label-col)");
  const std::size_t label_col = column_of(schema.label_column, "--label-col");
  std::set<std::size_t> excluded{label_col};
  for (const auto& id : schema.id_columns) excluded.insert(column_of(id, "--id-cols"));

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (!excluded.count(c)) feature_cols.push_back(c);
  if (feature_cols.empty()) throw schema_error("no feature columns remain after removing label/id");

  auto is_missing = [&](const std::string& v) { return schema.missing_tokens.count(v) > 0; };

  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < table.records.size(); ++r) {
    const auto& rec = table.records[r];
    bool complete = !is_missing(rec[label_col]);
    for (auto c : feature_cols) complete = complete && !is_missing(rec[c]);
    if (complete) kept.push_back(r);
  }
  if (kept.empty()) throw data_error("empty dataset: every row was dropped for missing values");

  // Per-column category maps for two-valued text columns.
  std::vector<std::map<std::string, double>> categories(feature_cols.size());
  for (std::size_t f = 0; f < feature_cols.size(); ++f) {
    std::set<std::string> text_values;
    bool all_text = true;
    for (auto r : kept) {
      const auto& v = table.records[r][feature_cols[f]];
      if (parse_real(v))
        all_text = false;
      else
        text_values.insert(v);
    }
    if (!text_values.empty() && all_text && text_values.size() <= 2) {
      double code = 0.0;
      for (const auto& v : text_values) categories[f][v] = code++;
    }
  }

  Matrix raw(kept.size(), feature_cols.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& rec = table.records[kept[i]];
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto& v = rec[feature_cols[f]];
      if (!categories[f].empty()) {
        raw(i, f) = categories[f].at(v);
        continue;
      }
      auto x = parse_real(v);
      if (!x)
        throw data_error("CSV parse error at line " + std::to_string(table.line_numbers[kept[i]]) +
                         ": non-numeric value '" + v + "' in column '" + header[feature_cols[f]] +
                         "'");
      raw(i, f) = *x;
    }
  }

  std::set<std::string> label_values;
  for (auto r : kept) label_values.insert(table.records[r][label_col]);
  if (label_values.size() > 2)
    throw schema_error("label column '" + schema.label_column + "' has " +
                       std::to_string(label_values.size()) + " distinct values; expected 2");
  if (label_values.size() < 2)
    throw schema_error("label column '" + schema.label_column +
                       "' has a single class after cleaning");
  const auto ordered = detail::ordered_values(label_values);

  if (kept.size() < 2) throw data_error("dataset needs at least 2 complete rows");

  Dataset d;
  d.name = schema.name;
  for (auto c : feature_cols) d.feature_names.push_back(header[c]);
  d.class_names = {ordered[0], ordered[1]};
  for (std::size_t i = 0; i < kept.size(); ++i) {
    d.labels.push_back(table.records[kept[i]][label_col] == ordered[0] ? 0 : 1);
    d.source_rows.push_back(kept[i] + 1);
  }
  std::tie(d.rows, d.standardization) = standardize(raw);
  return d;
}

inline Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return dataset_from_table(parse_csv(read_text_file(path)), schema);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Number of training rows: ceil(n * fraction), where products within 1e-9
/// of an integer count as that integer.
inline std::size_t train_count(std::size_t n, double fraction) {
  const double t = static_cast<double>(n) * fraction;
  const double r = std::round(t);
  return static_cast<std::size_t>(std::abs(t - r) < 1e-9 ? r : std::ceil(t));
}

/// Shuffles row indices with CounterRng(seed) and assigns the first
/// train_count(n, fraction) shuffled indices to train, the rest to test.
inline Split train_test_split(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw usage_error("train fraction must lie in (0, 1)");
  const std::size_t n = d.size();
  const std::size_t n_train = train_count(n, spec.train_fraction);
  if (n_train == 0 || n_train >= n)
    throw usage_error("train fraction " + std::to_string(spec.train_fraction) + " leaves an empty " +
                      (n_train == 0 ? "train" : "test") + " partition for n=" + std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  CounterRng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));
  Split s;
  s.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  s.train = d.subset(s.train_indices);
  s.test = d.subset(s.test_indices);
  return s;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json to_json(const Dataset& d) {
  nlohmann::ordered_json j;
  j["spec_version"] = kSpecVersion;
  j["name"] = d.name;
  j["feature_names"] = d.feature_names;
  j["class_names"] = d.class_names;
  j["rows"] = d.rows.to_rows();
  j["labels"] = d.labels;
  auto& st = j["standardization"] = nlohmann::ordered_json::array();
  for (const auto& s : d.standardization) st.push_back({{"mean", s.mean}, {"std", s.stddev}});
  return j;
}

}  // namespace dlime
