// dlime: command-line front end.
//
//   dlime prepare    --data f.csv [schema flags] --out dir
//   dlime train      --data f.csv --model rf|mlp|external [--model-cmd c] --seed s --out dir
//   dlime explain    --data f.csv (--model-file m.json | --model ...) --method dlime|lime
//                    --instance i|random --out dir
//   dlime stability  same as explain plus --iterations
//   dlime cluster    --data f.csv --out dir
//   dlime benchmark  --data data_dir [--datasets a,b] --seed s --out dir
//
// Exit codes: 0 ok, 2 usage/schema, 3 data, 4 model, 5 internal.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dlime/dlime.hpp"

namespace fs = std::filesystem;
using namespace dlime;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  out << content;
  if (!out) throw data_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_file(path, j.dump(2) + "\n");
}

struct DataFlags {
  std::string data;
  std::string label_col;
  std::string id_cols;
  std::optional<std::string> missing;
  bool id_cols_set = false;

  void add(CLI::App* app, bool required = true) {
    auto* d = app->add_option("--data", data, "CSV file with a header row");
    if (required) d->required();
    app->add_option("--label-col", label_col,
                    "label column (default: preset for a known file name, else 'class')");
    app->add_option("--id-cols", id_cols, "comma-separated columns to ignore")->each([this](const std::string&) {
      id_cols_set = true;
    });
    app->add_option("--missing", missing, "comma-separated missing-value tokens (default ?,NA)");
  }

  CsvSchema schema() const {
    CsvSchema s;
    const std::string stem = fs::path(data).stem().string();
    s.name = stem;
    bool preset = false;
    for (const auto& p : dataset_presets())
      if (p.name == stem) {
        s = p.schema;
        preset = true;
      }
    if (!preset) s.label_column = "class";
    if (!label_col.empty()) s.label_column = label_col;
    if (id_cols_set) {
      s.id_columns.clear();
      for (auto& c : split_list(id_cols))
        if (!c.empty()) s.id_columns.push_back(c);
    }
    if (missing) {
      s.missing_tokens.clear();
      s.missing_tokens.insert("");
      for (auto& t : split_list(*missing)) s.missing_tokens.insert(t);
    }
    return s;
  }

  Dataset load() const {
    if (!fs::exists(data)) throw data_error("dataset file not found: " + data);
    return load_csv(data, schema());
  }
};

struct ModelFlags {
  std::string kind = "rf";
  std::string command;
  std::string model_file;

  void add(CLI::App* app, bool allow_file) {
    app->add_option("--model", kind, "rf, mlp or external")->check(CLI::IsMember({"rf", "mlp", "external"}));
    app->add_option("--model-cmd", command, "command line of an external model process");
    if (allow_file) app->add_option("--model-file", model_file, "model.json written by 'train'");
  }

  std::unique_ptr<OpaqueModel> make(const Dataset& train, std::uint64_t seed) const {
    if (!model_file.empty()) {
      nlohmann::ordered_json j;
      try {
        j = nlohmann::ordered_json::parse(read_text_file(model_file));
      } catch (const nlohmann::json::exception& e) {
        throw model_error("cannot parse model file " + model_file + ": " + e.what());
      }
      auto m = model_from_json(j);
      if (m->n_features() != train.n_features())
        throw model_error("model expects " + std::to_string(m->n_features()) +
                          " features, dataset has " + std::to_string(train.n_features()));
      return m;
    }
    const auto k = parse_model_kind(kind);
    if (k == ModelKind::external) {
      if (command.empty()) throw usage_error("--model external requires --model-cmd");
      return std::make_unique<ExternalModel>(command, train.n_features());
    }
    if (!command.empty()) throw usage_error("--model-cmd is only valid with --model external");
    return train_model(k, train, seed);
  }
};

struct ExplainFlags {
  std::string method = "dlime";
  std::size_t k_features = 5;
  std::size_t k_neighbors = 1;
  std::string instance = "random";
  std::size_t lime_samples = 5000;
  std::uint64_t lime_seed = 0;
  std::string lime_sampling = "quartile";
  std::string linkage = "average";

  void add(CLI::App* app) {
    app->add_option("--method", method, "dlime or lime")->check(CLI::IsMember({"dlime", "lime"}));
    app->add_option("--k-features", k_features, "explanation length K")->check(CLI::PositiveNumber);
    app->add_option("--k-neighbors", k_neighbors, "neighbors used to route to a cluster")
        ->check(CLI::PositiveNumber);
    app->add_option("--instance", instance, "test-row index, or 'random' (uses --seed)");
    app->add_option("--lime-samples", lime_samples, "perturbation samples per LIME run")
        ->check(CLI::Range(std::size_t{2}, std::size_t{10000000}));
    app->add_option("--lime-seed", lime_seed, "LIME seed (stability: first of consecutive seeds)");
    app->add_option("--lime-sampling", lime_sampling, "quartile or continuous")
        ->check(CLI::IsMember({"quartile", "continuous"}));
    app->add_option("--linkage", linkage, "average, single or complete")
        ->check(CLI::IsMember({"average", "single", "complete"}));
  }

  Linkage parsed_linkage() const {
    if (linkage == "single") return Linkage::single;
    if (linkage == "complete") return Linkage::complete;
    return Linkage::average;
  }

  std::size_t pick(const Dataset& test, std::uint64_t seed) const {
    if (instance == "random") return random_instance(test.size(), seed);
    std::size_t idx = 0;
    std::size_t used = 0;
    try {
      idx = std::stoul(instance, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != instance.size())
      throw usage_error("--instance must be a test-row index or 'random', got '" + instance + "'");
    if (idx >= test.size())
      throw usage_error("--instance " + instance + " is out of range: the test split has " +
                        std::to_string(test.size()) + " rows");
    return idx;
  }
};

struct Context {
  Dataset data;
  Split split;
  std::unique_ptr<OpaqueModel> model;
  std::size_t index = 0;
  std::vector<double> x;
  std::string id;
};

Context prepare_context(const DataFlags& df, const ModelFlags& mf, const ExplainFlags& ef,
                        std::uint64_t seed) {
  Context c;
  c.data = df.load();
  c.split = train_test_split(c.data, {0.8, seed});
  c.model = mf.make(c.split.train, seed);
  c.index = ef.pick(c.split.test, seed);
  const auto row = c.split.test.rows.row(c.index);
  c.x.assign(row.begin(), row.end());
  c.id = c.data.name + "#" + std::to_string(c.split.test.source_rows[c.index]);
  return c;
}

int cmd_prepare(const DataFlags& df, const fs::path& out) {
  const auto d = df.load();
  write_json(out / "dataset.json", to_json(d));
  std::cout << d.name << ": " << d.size() << " rows, " << d.n_features() << " features\n";
  return 0;
}

int cmd_train(const DataFlags& df, const ModelFlags& mf, std::uint64_t seed, const fs::path& out) {
  const auto d = df.load();
  const auto split = train_test_split(d, {0.8, seed});
  const auto model = mf.make(split.train, seed);
  const double acc = accuracy(*model, split.test.rows, split.test.labels);
  const double base = majority_baseline(split.test.labels);
  write_json(out / "model.json", model->to_json());
  nlohmann::ordered_json m;
  m["spec_version"] = kSpecVersion;
  m["dataset"] = d.name;
  m["model"] = model->kind();
  m["seed"] = seed;
  m["n_train"] = split.train.size();
  m["n_test"] = split.test.size();
  m["accuracy"] = acc;
  m["majority_baseline"] = base;
  write_json(out / "metrics.json", m);
  std::cout << model->kind() << " on " << d.name << ": test accuracy " << percent(acc)
            << " (majority baseline " << percent(base) << ")\n";
  return 0;
}

Explanation run_explainer(const Context& c, const ExplainFlags& ef,
                          const std::optional<DlimeExplainer>& dlime, std::uint64_t lime_seed) {
  if (ef.method == "dlime") return dlime->explain(*c.model, c.x, c.id);
  LimeConfig cfg;
  cfg.n_samples = ef.lime_samples;
  cfg.k_features = ef.k_features;
  cfg.seed = lime_seed;
  cfg.sampling = parse_lime_sampling(ef.lime_sampling);
  return lime_explain(c.split.train, *c.model, c.x, cfg, c.id);
}

std::optional<DlimeExplainer> make_dlime(const Context& c, const ExplainFlags& ef) {
  if (ef.method != "dlime") return std::nullopt;
  DlimeConfig cfg;
  cfg.k_features = ef.k_features;
  cfg.k_neighbors = ef.k_neighbors;
  cfg.linkage = ef.parsed_linkage();
  return std::optional<DlimeExplainer>(std::in_place, c.split.train, cfg);
}

int cmd_explain(const DataFlags& df, const ModelFlags& mf, const ExplainFlags& ef,
                std::uint64_t seed, const fs::path& out) {
  const auto c = prepare_context(df, mf, ef, seed);
  const auto dlime = make_dlime(c, ef);
  const auto e = run_explainer(c, ef, dlime, ef.lime_seed);
  write_json(out / "explanation.json", to_json(e));
  write_file(out / "explanation.svg",
             svg::explanation_bars(e, to_string(e.method) + " explanation of " + c.id));
  std::cout << to_string(e.method) << " explanation of " << c.id << ":\n";
  for (const auto& w : e.entries) std::cout << "  " << w.feature << " " << w.weight << "\n";
  return 0;
}

int cmd_stability(const DataFlags& df, const ModelFlags& mf, const ExplainFlags& ef,
                  std::size_t iterations, std::uint64_t seed, const fs::path& out) {
  const auto c = prepare_context(df, mf, ef, seed);
  const auto dlime = make_dlime(c, ef);
  const auto report = run_stability(
      [&](std::size_t it) { return run_explainer(c, ef, dlime, ef.lime_seed + it); }, iterations,
      ef.method == "dlime" ? Method::dlime : Method::lime, c.data.name, c.model->kind());
  write_json(out / "stability.json", to_json(report));
  write_file(out / "stability.svg",
             svg::distance_heatmap(report.distance_matrix,
                                   "Jaccard distance of " + ef.method + " explanations, " + c.id));
  std::cout << "average J_distance = " << percent_short(report.average_distance) << "\n";
  return 0;
}

int cmd_cluster(const DataFlags& df, const ExplainFlags& ef, std::size_t max_clusters,
                std::uint64_t seed, const fs::path& out) {
  const auto d = df.load();
  const auto split = train_test_split(d, {0.8, seed});
  const auto tree = agglomerate(split.train.rows, ef.parsed_linkage());
  const auto flat = cut_largest_gap(tree, max_clusters);
  auto j = to_json(tree);
  j["linkage"] = to_string(ef.parsed_linkage());
  j["largest_gap_clusters"] = flat.n_clusters;
  auto& sizes = j["cluster_sizes"] = nlohmann::ordered_json::array();
  for (int k = 0; k < flat.n_clusters; ++k) sizes.push_back(flat.members(k).size());
  write_json(out / "dendrogram.json", j);
  write_file(out / "dendrogram.svg", svg::dendrogram_plot(tree, d.name + " training rows"));
  std::cout << "largest-gap cut: " << flat.n_clusters << " clusters (sizes";
  for (const auto& s : sizes) std::cout << " " << s;
  std::cout << ")\n";
  return 0;
}

int cmd_benchmark(const std::string& data_dir, const std::string& datasets, const ExplainFlags& ef,
                  std::size_t iterations, std::uint64_t seed, const fs::path& out) {
  BenchmarkOptions opt;
  if (!data_dir.empty()) opt.data_dir = data_dir;
  if (!datasets.empty()) {
    opt.datasets.clear();
    for (auto& name : split_list(datasets)) {
      dataset_preset(name);
      opt.datasets.push_back(name);
    }
  }
  opt.seed = seed;
  opt.iterations = iterations;
  opt.k_features = ef.k_features;
  opt.lime_samples = ef.lime_samples;
  opt.lime_base_seed = ef.lime_seed;
  opt.lime_sampling = parse_lime_sampling(ef.lime_sampling);
  const auto rows = run_benchmark(opt);
  const auto md = benchmark_to_markdown(rows, opt);
  write_json(out / "benchmark.json", benchmark_to_json(rows, opt));
  write_file(out / "benchmark.md", md);
  std::cout << md;
  // partial grids still write both reports; the exit code reflects the first failed cell
  for (const auto& r : rows)
    if (!r.ok) return exit_code(r.error_kind);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic local explanations (DLIME) and a LIME baseline"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out = "out";
  std::size_t iterations = 10;
  std::size_t max_clusters = 10;

  DataFlags df;
  ModelFlags mf;
  ExplainFlags ef;

  auto* prepare = app.add_subcommand("prepare", "load and standardize a CSV, write dataset.json");
  df.add(prepare);
  prepare->add_option("--out", out, "output directory");

  auto* train = app.add_subcommand("train", "split 80/20, train a model, write model.json + metrics.json");
  df.add(train);
  mf.add(train, false);
  train->add_option("--seed", seed, "split and training seed");
  train->add_option("--out", out, "output directory");

  auto* explain = app.add_subcommand("explain", "explain one test instance");
  df.add(explain);
  mf.add(explain, true);
  ef.add(explain);
  explain->add_option("--seed", seed, "split, training and random-instance seed");
  explain->add_option("--out", out, "output directory");

  auto* stability = app.add_subcommand("stability", "repeat an explanation and report Jaccard distances");
  df.add(stability);
  mf.add(stability, true);
  ef.add(stability);
  stability->add_option("--iterations", iterations, "number of repeated explanations")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  stability->add_option("--seed", seed, "split, training and random-instance seed");
  stability->add_option("--out", out, "output directory");

  auto* cluster = app.add_subcommand("cluster", "dendrogram of the training rows");
  df.add(cluster);
  cluster->add_option("--linkage", ef.linkage, "average, single or complete")
      ->check(CLI::IsMember({"average", "single", "complete"}));
  cluster->add_option("--max-clusters", max_clusters, "upper bound for the largest-gap cut")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  cluster->add_option("--seed", seed, "split seed");
  cluster->add_option("--out", out, "output directory");

  std::string data_dir = "data";
  std::string datasets;
  auto* bench = app.add_subcommand("benchmark", "dataset x model x method stability grid");
  bench->add_option("--data", data_dir, "directory holding the preset CSV files");
  bench->add_option("--datasets", datasets, "comma-separated subset of breast_cancer,liver,hepatitis");
  bench->add_option("--iterations", iterations, "repeated explanations per cell")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  bench->add_option("--k-features", ef.k_features, "explanation length K")->check(CLI::PositiveNumber);
  bench->add_option("--lime-samples", ef.lime_samples, "perturbation samples per LIME run")
      ->check(CLI::Range(std::size_t{2}, std::size_t{10000000}));
  bench->add_option("--lime-seed", ef.lime_seed, "first LIME seed");
  bench->add_option("--lime-sampling", ef.lime_sampling, "quartile or continuous")
      ->check(CLI::IsMember({"quartile", "continuous"}));
  bench->add_option("--seed", seed, "split, training and instance seed");
  bench->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*prepare) return cmd_prepare(df, out);
    if (*train) return cmd_train(df, mf, seed, out);
    if (*explain) return cmd_explain(df, mf, ef, seed, out);
    if (*stability) return cmd_stability(df, mf, ef, iterations, seed, out);
    if (*cluster) return cmd_cluster(df, ef, max_clusters, seed, out);
    if (*bench) return cmd_benchmark(data_dir, datasets, ef, iterations, seed, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::data);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_code(ErrorKind::internal);
  }
  return 2;
}
