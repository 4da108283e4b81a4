#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "dlime/stability.hpp"

using namespace dlime;

namespace {

std::set<std::string> S(std::initializer_list<const char*> xs) {
  std::set<std::string> out;
  for (auto x : xs) out.insert(x);
  return out;
}

Explanation with_features(const std::set<std::string>& names) {
  Explanation e;
  e.method = Method::lime;
  for (const auto& n : names) e.entries.push_back({n, 1.0});
  return e;
}

// Exact rational p/q in lowest terms.
struct Rational {
  long long p, q;
  Rational(long long a, long long b) : p(a), q(b) {
    const long long g = std::gcd(p, q);
    if (g) {
      p /= g;
      q /= g;
    }
  }
  Rational operator+(const Rational& o) const { return {p * o.q + o.p * q, q * o.q}; }
  Rational operator-(const Rational& o) const { return {p * o.q - o.p * q, q * o.q}; }
  bool operator<=(const Rational& o) const { return p * o.q <= o.p * q; }
  bool operator==(const Rational& o) const { return p == o.p && q == o.q; }
};

Rational distance_exact(const std::set<int>& a, const std::set<int>& b) {
  const auto c = jaccard_counts(a, b);
  if (c.union_size == 0) return {0, 1};
  return {static_cast<long long>(c.union_size - c.intersection), static_cast<long long>(c.union_size)};
}

std::set<int> random_set(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> bit(0, 1);
  std::set<int> s;
  for (int i = 0; i < 8; ++i)
    if (bit(gen)) s.insert(i);
  return s;
}

}  // namespace

TEST(Jaccard, ExamplesFromDefinition) {
  EXPECT_EQ(jaccard_coefficient(S({"a", "b", "c"}), S({"a", "b", "c"})), 1.0);
  EXPECT_EQ(jaccard_coefficient(S({"a"}), S({"b"})), 0.0);
  EXPECT_DOUBLE_EQ(jaccard_coefficient(S({"a", "b"}), S({"b", "c"})), 1.0 / 3.0);
  EXPECT_EQ(jaccard_distance(S({"x", "y"}), S({"x", "y"})), 0.0);
  EXPECT_EQ(jaccard_distance(S({"x"}), S({"y", "z"})), 1.0);
  EXPECT_DOUBLE_EQ(jaccard_distance(S({"a", "b"}), S({"b", "c"})), 2.0 / 3.0);
  EXPECT_EQ(jaccard_coefficient(S({}), S({})), 1.0);
}

TEST(Jaccard, MetricPropertiesExact) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = random_set(gen), b = random_set(gen), c = random_set(gen);
    const auto ab = distance_exact(a, b), ba = distance_exact(b, a);
    ASSERT_EQ(ab, ba);
    ASSERT_EQ(distance_exact(a, a), Rational(0, 1));
    ASSERT_TRUE(Rational(0, 1) <= ab && ab <= Rational(1, 1));
    ASSERT_TRUE(distance_exact(a, c) <= ab + distance_exact(b, c)) << "triangle inequality, trial " << trial;
    // floating version agrees with the rational one
    ASSERT_DOUBLE_EQ(jaccard_distance(a, b), static_cast<double>(ab.p) / static_cast<double>(ab.q));
  }
}

TEST(Stability, ConstantExplainerGivesZeroMatrix) {
  const auto r = run_stability([](std::size_t) { return with_features(S({"a", "b"})); }, 10, Method::lime);
  EXPECT_EQ(r.average_distance, 0.0);
  EXPECT_TRUE(r.identical_weights);
  for (const auto& row : r.distance_matrix)
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(Stability, AlternatingSetsClosedForm) {
  for (std::size_t it : {2u, 3u, 4u, 5u, 10u}) {
    const auto r = run_stability(
        [](std::size_t i) { return with_features(i % 2 ? S({"b", "c"}) : S({"a", "b"})); }, it, Method::lime);
    // enumerate pairs with exact counts
    std::size_t differing = 0;
    for (std::size_t i = 0; i < it; ++i)
      for (std::size_t j = i + 1; j < it; ++j) differing += (i % 2) != (j % 2);
    const double pairs = static_cast<double>(it * (it - 1) / 2);
    EXPECT_DOUBLE_EQ(r.average_distance, (2.0 / 3.0) * static_cast<double>(differing) / pairs);
    const double closed = (2.0 / 3.0) * static_cast<double>(((it + 1) / 2) * (it / 2)) / pairs;
    EXPECT_DOUBLE_EQ(r.average_distance, closed);
    for (std::size_t i = 0; i < it; ++i)
      for (std::size_t j = 0; j < it; ++j) {
        const double v = r.distance_matrix[i][j];
        EXPECT_TRUE(v == 0.0 || std::abs(v - 2.0 / 3.0) < 1e-15);
        EXPECT_EQ(v, r.distance_matrix[j][i]);
      }
  }
  // it = 4: pairs (0,1),(0,3),(1,2),(2,3) differ -> 4/6 * 2/3 = 4/9
  const auto r4 = run_stability(
      [](std::size_t i) { return with_features(i % 2 ? S({"b", "c"}) : S({"a", "b"})); }, 4, Method::lime);
  EXPECT_DOUBLE_EQ(r4.average_distance, 4.0 / 9.0);
}

TEST(Stability, MatrixShapeAndDiagonal) {
  std::mt19937_64 gen(2);
  const auto r = run_stability(
      [&](std::size_t) {
        std::set<std::string> s;
        for (int i = 0; i < 5; ++i) s.insert(std::string(1, static_cast<char>('a' + gen() % 8)));
        return with_features(s);
      },
      7, Method::lime);
  ASSERT_EQ(r.distance_matrix.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    ASSERT_EQ(r.distance_matrix[i].size(), 7u);
    EXPECT_EQ(r.distance_matrix[i][i], 0.0);
  }
  EXPECT_GE(r.average_distance, 0.0);
  EXPECT_LE(r.average_distance, 1.0);
}

TEST(Stability, WeightDeltaReported) {
  const auto r = run_stability(
      [](std::size_t i) {
        Explanation e;
        e.entries = {{"a", i == 0 ? 1.0 : 1.25}};
        return e;
      },
      3, Method::lime);
  EXPECT_EQ(r.average_distance, 0.0);
  EXPECT_FALSE(r.identical_weights);
  EXPECT_DOUBLE_EQ(r.max_weight_delta, 0.25);
}

TEST(Stability, ErrorsCarryIterationIndex) {
  try {
    run_stability(
        [](std::size_t i) -> Explanation {
          if (i == 3) throw data_error("boom");
          return with_features(S({"a"}));
        },
        5, Method::dlime);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("iteration 3"), std::string::npos);
  }
  EXPECT_THROW(run_stability([](std::size_t) { return Explanation{}; }, 1, Method::dlime), Error);
}

TEST(Stability, JsonShape) {
  const auto r = run_stability([](std::size_t) { return with_features(S({"a"})); }, 2, Method::dlime, "d", "rf");
  const auto j = to_json(r);
  EXPECT_EQ(j["spec_version"], "1.0");
  EXPECT_EQ(j["distance_matrix"].size(), 2u);
  EXPECT_EQ(j["method"], "dlime");
}
