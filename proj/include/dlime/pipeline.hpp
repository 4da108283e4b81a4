#pragma once

// Experiment plumbing shared by the command-line tool and the acceptance
// suite: dataset presets, model factory, and the dataset x model x method
// stability grid.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"
#include "dlime/data.hpp"
#include "dlime/explainers.hpp"
#include "dlime/external_model.hpp"
#include "dlime/mlp.hpp"
#include "dlime/model.hpp"
#include "dlime/random_forest.hpp"
#include "dlime/rng.hpp"
#include "dlime/stability.hpp"

namespace dlime {

struct DatasetPreset {
  std::string name;
  std::string file;
  CsvSchema schema;
};

/// The three medical datasets, as CSV files with a header row.
///
///   breast_cancer.csv  UCI breast-cancer-wisconsin.data: id, 9 cytology
///                      scores, class (2 benign / 4 malignant), '?' missing
///   liver.csv          UCI ILPD: 10 features (gender as Female/Male), label
///                      column 'selector' (1 patient / 2 non-patient)
///   hepatitis.csv      UCI hepatitis.data: class (1 die / 2 live) first, then
///                      19 features, '?' missing
inline const std::vector<DatasetPreset>& dataset_presets() {
  static const std::vector<DatasetPreset> presets = [] {
    std::vector<DatasetPreset> p;
    p.push_back({"breast_cancer", "breast_cancer.csv", {"breast_cancer", "class", {"id"}, {"?", "", "NA"}}});
    p.push_back({"liver", "liver.csv", {"liver", "selector", {}, {"?", "", "NA"}}});
    p.push_back({"hepatitis", "hepatitis.csv", {"hepatitis", "class", {}, {"?", "", "NA"}}});
    return p;
  }();
  return presets;
}

inline const DatasetPreset& dataset_preset(const std::string& name) {
  for (const auto& p : dataset_presets())
    if (p.name == name) return p;
  throw usage_error("unknown dataset '" + name + "' (known: breast_cancer, liver, hepatitis)");
}

inline Dataset load_preset(const std::filesystem::path& data_dir, const std::string& name) {
  const auto& p = dataset_preset(name);
  const auto path = data_dir / p.file;
  if (!std::filesystem::exists(path))
    throw data_error("dataset file not found: " + path.string());
  return load_csv(path, p.schema);
}

// ---------------------------------------------------------------------------
// Models

enum class ModelKind { random_forest, mlp, external };

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "rf" || s == "random_forest") return ModelKind::random_forest;
  if (s == "mlp") return ModelKind::mlp;
  if (s == "external") return ModelKind::external;
  throw usage_error("unknown model kind '" + s + "' (expected rf, mlp or external)");
}

inline std::string short_name(ModelKind k) {
  switch (k) {
    case ModelKind::random_forest:
      return "rf";
    case ModelKind::mlp:
      return "mlp";
    case ModelKind::external:
      break;
  }
  return "external";
}

/// Trains a built-in model with default hyper-parameters.
inline std::unique_ptr<OpaqueModel> train_model(ModelKind kind, const Dataset& train,
                                                std::uint64_t seed) {
  switch (kind) {
    case ModelKind::random_forest: {
      RandomForestConfig cfg;
      cfg.seed = seed;
      return std::make_unique<RandomForest>(train_random_forest(train, cfg));
    }
    case ModelKind::mlp: {
      MlpConfig cfg;
      cfg.seed = seed;
      return std::make_unique<Mlp>(train_mlp(train, cfg));
    }
    case ModelKind::external:
      break;
  }
  throw usage_error("external models are not trained; pass --model-cmd");
}

inline std::unique_ptr<OpaqueModel> model_from_json(const nlohmann::ordered_json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "random_forest") return std::make_unique<RandomForest>(RandomForest::from_json(j));
    if (kind == "mlp") return std::make_unique<Mlp>(Mlp::from_json(j));
    if (kind == "external")
      return std::make_unique<ExternalModel>(j.at("command").get<std::string>(),
                                             j.at("n_features").get<std::size_t>());
    throw model_error("unknown model kind in model file: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw model_error(std::string("malformed model file: ") + e.what());
  }
}

/// Index of a test row chosen by CounterRng(seed).
inline std::size_t random_instance(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw data_error("cannot pick an instance from an empty test split");
  CounterRng rng(seed);
  return static_cast<std::size_t>(rng.uniform_index(n));
}

// ---------------------------------------------------------------------------
// Stability grid

struct BenchmarkOptions {
  std::filesystem::path data_dir = "data";
  std::vector<std::string> datasets{"breast_cancer", "liver", "hepatitis"};
  std::vector<ModelKind> models{ModelKind::random_forest, ModelKind::mlp};
  std::uint64_t seed = 1;
  std::size_t iterations = 10;
  std::size_t k_features = 5;
  std::size_t lime_samples = 5000;
  std::uint64_t lime_base_seed = 0;
  LimeSampling lime_sampling = LimeSampling::quartile;
  double train_fraction = 0.8;
};

struct BenchmarkRow {
  std::string dataset;
  std::string model;
  bool ok = false;
  std::string error;
  ErrorKind error_kind = ErrorKind::internal;
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  double accuracy = 0.0;
  double majority_baseline = 0.0;
  std::size_t instance = 0;  // index into the test split
  std::size_t clusters = 0;
  std::optional<StabilityReport> dlime;
  std::optional<StabilityReport> lime;
};

/// One row per (dataset, model). Each cell explains one test instance chosen
/// with CounterRng(derive(seed, cell)); LIME iteration i uses seed
/// lime_base_seed + i. A failing cell records its error and the grid goes on.
inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkOptions& opt) {
  std::vector<BenchmarkRow> rows;
  std::uint64_t cell = 0;
  for (const auto& name : opt.datasets) {
    std::optional<Split> split;
    std::optional<DlimeExplainer> dlime;
    std::string data_failure;
    ErrorKind data_failure_kind = ErrorKind::internal;
    try {
      const auto d = load_preset(opt.data_dir, name);
      split = train_test_split(d, {opt.train_fraction, opt.seed});
      DlimeConfig dcfg;
      dcfg.k_features = opt.k_features;
      dlime.emplace(split->train, dcfg);
    } catch (const Error& e) {
      data_failure = e.what();
      data_failure_kind = e.kind();
    } catch (const std::exception& e) {
      data_failure = e.what();
    }
    for (auto kind : opt.models) {
      BenchmarkRow row;
      row.dataset = name;
      row.model = short_name(kind);
      const std::uint64_t cell_seed = CounterRng::derive(opt.seed, cell++);
      if (!data_failure.empty()) {
        row.error = data_failure;
        row.error_kind = data_failure_kind;
        rows.push_back(std::move(row));
        continue;
      }
      try {
        const auto& train = split->train;
        const auto& test = split->test;
        row.n_rows = train.size() + test.size();
        row.n_features = train.n_features();
        row.clusters = static_cast<std::size_t>(dlime->clustering().n_clusters);
        const auto model = train_model(kind, train, opt.seed);
        row.accuracy = accuracy(*model, test.rows, test.labels);
        row.majority_baseline = majority_baseline(test.labels);
        row.instance = random_instance(test.size(), cell_seed);
        const auto x = test.rows.row(row.instance);
        const std::string id = name + "#" + std::to_string(test.source_rows[row.instance]);
        row.dlime = run_stability(
            [&](std::size_t) { return dlime->explain(*model, x, id); }, opt.iterations,
            Method::dlime, name, row.model);
        row.lime = run_stability(
            [&](std::size_t it) {
              LimeConfig lcfg;
              lcfg.n_samples = opt.lime_samples;
              lcfg.k_features = opt.k_features;
              lcfg.seed = opt.lime_base_seed + it;
              lcfg.sampling = opt.lime_sampling;
              return lime_explain(train, *model, x, lcfg, id);
            },
            opt.iterations, Method::lime, name, row.model);
        row.ok = true;
      } catch (const Error& e) {
        row.error = e.what();
        row.error_kind = e.kind();
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline nlohmann::ordered_json benchmark_to_json(const std::vector<BenchmarkRow>& rows,
                                                const BenchmarkOptions& opt) {
  nlohmann::ordered_json j;
  j["spec_version"] = kSpecVersion;
  j["seed"] = opt.seed;
  j["iterations"] = opt.iterations;
  j["k_features"] = opt.k_features;
  j["lime_samples"] = opt.lime_samples;
  j["lime_sampling"] = to_string(opt.lime_sampling);
  auto& out = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["dataset"] = r.dataset;
    o["model"] = r.model;
    o["status"] = r.ok ? "ok" : "error";
    if (!r.ok) {
      o["error"] = r.error;
      out.push_back(std::move(o));
      continue;
    }
    o["n_rows"] = r.n_rows;
    o["n_features"] = r.n_features;
    o["accuracy"] = r.accuracy;
    o["majority_baseline"] = r.majority_baseline;
    o["instance"] = r.instance;
    o["clusters"] = r.clusters;
    o["dlime_average_distance"] = r.dlime->average_distance;
    o["lime_average_distance"] = r.lime->average_distance;
    o["dlime_identical_weights"] = r.dlime->identical_weights;
    o["lime_max_weight_delta"] = r.lime->max_weight_delta;
    out.push_back(std::move(o));
  }
  return j;
}

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

/// Percent string with trailing zeros dropped ("0%", "9.43%").
inline std::string percent_short(double v) {
  std::string s = percent(v);
  s.pop_back();
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s + "%";
}

inline std::string pretty_dataset(const std::string& name) {
  if (name == "breast_cancer") return "Breast Cancer";
  if (name == "liver") return "Liver Patients";
  if (name == "hepatitis") return "Hepatitis Patients";
  return name;
}

inline std::string benchmark_to_markdown(const std::vector<BenchmarkRow>& rows,
                                         const BenchmarkOptions& opt) {
  std::string s = "Average J_distance after " + std::to_string(opt.iterations) + " iterations\n\n";
  s += "| Dataset | Opaque Model | DLIME | LIME |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    std::string model = r.model == "rf" ? "RF" : r.model == "mlp" ? "NN" : r.model;
    if (r.ok)
      s += "| " + pretty_dataset(r.dataset) + " | " + model + " | " +
           percent_short(r.dlime->average_distance) + " | " + percent_short(r.lime->average_distance) +
           " |\n";
    else
      s += "| " + pretty_dataset(r.dataset) + " | " + model + " | error | error |\n";
  }
  bool any_error = false;
  for (const auto& r : rows) any_error = any_error || !r.ok;
  if (any_error) {
    s += "\nErrors:\n\n";
    for (const auto& r : rows)
      if (!r.ok) s += "- " + r.dataset + "/" + r.model + ": " + r.error + "\n";
  }
  return s;
}

}  // namespace dlime
