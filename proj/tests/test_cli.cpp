#include <gtest/gtest.h>

#include <sys/wait.h>

#include <nlohmann/json.hpp>
#include <regex>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() { return DLIME_CLI_PATH; }
std::string data(const std::string& f) { return (testutil::data_dir() / f).string(); }
std::string stub(const std::string& f) { return std::string(DLIME_STUB_DIR) + "/" + f; }

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const fs::path& dir) {
  const auto log = dir / "stdout.txt";
  const std::string cmd = cli() + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testutil::slurp(log)};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(testutil::slurp(p)); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!testutil::have_data("breast_cancer.csv")) GTEST_SKIP() << "breast_cancer.csv missing";
  }
};

}  // namespace

TEST_F(Cli, TrainWritesMetricsAndIsDeterministic) {
  const auto a = testutil::scratch_dir("train_a"), b = testutil::scratch_dir("train_b");
  const std::string args = "train --data " + data("breast_cancer.csv") + " --model rf --seed 1 --out ";
  ASSERT_EQ(run(args + a.string(), a).code, 0);
  ASSERT_EQ(run(args + b.string(), b).code, 0);
  EXPECT_EQ(testutil::slurp(a / "model.json"), testutil::slurp(b / "model.json"));
  const auto m = read_json(a / "metrics.json");
  EXPECT_GE(m["accuracy"].get<double>(), 0.90);
  EXPECT_EQ(m["spec_version"], "1.0");
}

TEST_F(Cli, MissingLabelColumnNamesTheFlag) {
  const auto d = testutil::scratch_dir("label");
  const auto r = run("train --data " + data("breast_cancer.csv") + " --label-col nope --out " + d.string(), d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("--label-col"), std::string::npos) << r.out;
}

TEST_F(Cli, ExitCodes) {
  const auto d = testutil::scratch_dir("codes");
  EXPECT_EQ(run("bogus", d).code, 2);
  EXPECT_EQ(run("train --unknown-flag", d).code, 2);
  EXPECT_EQ(run("train --data /nonexistent/x.csv --out " + d.string(), d).code, 3);
  EXPECT_EQ(run("explain --data " + data("breast_cancer.csv") + " --instance 100000 --out " + d.string(), d).code,
            2);
  EXPECT_EQ(run("explain --data " + data("breast_cancer.csv") + " --model external --model-cmd " +
                    stub("out_of_range.py") + " --out " + d.string(),
                d)
                .code,
            4);
}

TEST_F(Cli, ModelFileFeatureMismatchIsModelError) {
  if (!testutil::have_data("hepatitis.csv")) GTEST_SKIP();
  const auto d = testutil::scratch_dir("mismatch");
  ASSERT_EQ(run("train --data " + data("hepatitis.csv") + " --model rf --out " + d.string(), d).code, 0);
  const auto r = run("explain --data " + data("breast_cancer.csv") + " --model-file " + (d / "model.json").string() +
                         " --out " + d.string(),
                     d);
  EXPECT_EQ(r.code, 4) << r.out;
}

TEST_F(Cli, ExplainIsDeterministicAndDrawsKBars) {
  for (const std::string method : {"dlime", "lime"}) {
    const auto a = testutil::scratch_dir("ex_a"), b = testutil::scratch_dir("ex_b");
    const std::string args = "explain --data " + data("breast_cancer.csv") + " --model rf --method " + method +
                             " --instance random --seed 3 --k-features 5 --out ";
    ASSERT_EQ(run(args + a.string(), a).code, 0);
    ASSERT_EQ(run(args + b.string(), b).code, 0);
    EXPECT_EQ(testutil::slurp(a / "explanation.json"), testutil::slurp(b / "explanation.json")) << method;
    EXPECT_EQ(testutil::slurp(a / "explanation.svg"), testutil::slurp(b / "explanation.svg")) << method;
    const auto svg = testutil::slurp(a / "explanation.svg");
    const std::regex bar("class=\"bar");
    EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), bar), std::sregex_iterator()), 5) << method;
    EXPECT_EQ(read_json(a / "explanation.json")["entries"].size(), 5u);
  }
}

TEST_F(Cli, ExplainByIndex) {
  const auto d = testutil::scratch_dir("idx");
  ASSERT_EQ(run("explain --data " + data("breast_cancer.csv") + " --instance 0 --out " + d.string(), d).code, 0);
  EXPECT_EQ(read_json(d / "explanation.json")["method"], "dlime");
}

TEST_F(Cli, DlimeStabilitySummaryIsZero) {
  const auto d = testutil::scratch_dir("stab");
  const auto r = run("stability --data " + data("breast_cancer.csv") +
                         " --model mlp --method dlime --instance random --seed 1 --out " + d.string(),
                     d);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("average J_distance = 0%"), std::string::npos) << r.out;
  const auto j = read_json(d / "stability.json");
  EXPECT_EQ(j["distance_matrix"].size(), 10u);
  EXPECT_TRUE(fs::exists(d / "stability.svg"));
}

TEST_F(Cli, StabilityIterationsShape) {
  const auto d = testutil::scratch_dir("stab2");
  ASSERT_EQ(run("stability --data " + data("breast_cancer.csv") + " --method lime --iterations 2 --lime-samples 500 --out " +
                    d.string(),
                d)
                .code,
            0);
  const auto j = read_json(d / "stability.json");
  ASSERT_EQ(j["distance_matrix"].size(), 2u);
  EXPECT_EQ(j["distance_matrix"][0].size(), 2u);
}

// LIME on breast cancer with the MLP: the emitted report must show a nonzero
// average for some instance. Test rows are scanned in index order; the
// default random instance is reported for reference.
TEST_F(Cli, LimeStabilityBreastCancerMlp) {
  const auto d = testutil::scratch_dir("stab3");
  const std::string base = "stability --data " + data("breast_cancer.csv") + " --model mlp --method lime --seed 1 ";
  const auto r = run(base + "--instance random --out " + d.string(), d);
  ASSERT_EQ(r.code, 0) << r.out;
  std::cout << "default random instance: " << r.out;
  bool found = false;
  for (int i = 0; i < 136 && !found; ++i) {
    ASSERT_EQ(run(base + "--instance " + std::to_string(i) + " --out " + d.string(), d).code, 0);
    const double avg = read_json(d / "stability.json")["average_distance"].get<double>();
    if (avg > 0.0) {
      std::cout << "first nonzero at test row " << i << ": " << avg << "\n";
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST_F(Cli, BenchmarkFilteredToOneDataset) {
  const auto d = testutil::scratch_dir("bench");
  const auto r = run("benchmark --data " + testutil::data_dir().string() + " --datasets breast_cancer --out " +
                         d.string(),
                     d);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = read_json(d / "benchmark.json");
  ASSERT_EQ(j["rows"].size(), 2u);
  for (const auto& row : j["rows"]) EXPECT_EQ(row["dlime_average_distance"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(d / "benchmark.md"));
}

TEST_F(Cli, ExternalModelViaStub) {
  const auto d = testutil::scratch_dir("ext");
  const auto r = run("explain --data " + data("breast_cancer.csv") + " --model external --model-cmd " +
                         stub("first_feature.py") + " --k-features 1 --out " + d.string(),
                     d);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = read_json(d / "explanation.json");
  ASSERT_EQ(j["entries"].size(), 1u);
  EXPECT_EQ(j["entries"][0]["feature"], "clump_thickness");
  EXPECT_GT(j["entries"][0]["weight"].get<double>(), 0.0);
}

TEST_F(Cli, ClusterReportsTwoClusters) {
  const auto d = testutil::scratch_dir("cluster");
  ASSERT_EQ(run("cluster --data " + data("breast_cancer.csv") + " --seed 1 --out " + d.string(), d).code, 0);
  EXPECT_EQ(read_json(d / "dendrogram.json")["largest_gap_clusters"], 2);
}
