#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dlime/neighbors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dlime;

namespace {

const auto brute_force = oracle::brute_force_knn;

}  // namespace

TEST(Knn, SelfNeighbor) {
  std::mt19937_64 gen(1);
  const auto x = testutil::random_matrix(20, 3, gen);
  const NeighborIndex idx(x, std::vector<int>(20, 0));
  for (std::size_t i = 0; i < 20; ++i) {
    const auto r = idx.query(x.row(i), 1);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0], (Neighbor{i, 0.0}));
  }
}

TEST(Knn, DuplicateRowsTieToLowerIndex) {
  const auto x = Matrix::from_rows({{5}, {1}, {1}, {9}});
  const NeighborIndex idx(x, {0, 0, 0, 0});
  EXPECT_EQ(idx.query(std::vector<double>{1.0}, 1)[0].row, 1u);
  EXPECT_EQ(idx.query(std::vector<double>{2.0}, 2)[1].row, 2u);
}

TEST(Knn, OneDimensionalHandCase) {
  const auto x = Matrix::from_rows({{0}, {10}});
  const NeighborIndex idx(x, {0, 1});
  EXPECT_EQ(idx.query(std::vector<double>{4.0}, 1), (std::vector<Neighbor>{{0, 4.0}}));
}

TEST(Knn, MatchesBruteForce) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<std::size_t> size(1, 200), dim(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(gen);
    const auto x = testutil::random_matrix(n, dim(gen), gen);
    const NeighborIndex idx(x, std::vector<int>(n, 0));
    const auto q = testutil::random_matrix(1, x.cols(), gen);
    std::uniform_int_distribution<std::size_t> kk(1, n);
    const std::size_t k = kk(gen);
    const auto got = idx.query(q.row(0), k);
    ASSERT_EQ(got, brute_force(x, q.row(0), k)) << "trial " << trial;
    for (std::size_t i = 1; i < got.size(); ++i) ASSERT_LE(got[i - 1].distance, got[i].distance);
  }
}

TEST(Knn, RandomThirtyByThreeK5) {
  std::mt19937_64 gen(30);
  const auto x = testutil::random_matrix(30, 3, gen);
  const NeighborIndex idx(x, std::vector<int>(30, 0));
  const std::vector<double> q{0.1, -0.2, 0.3};
  EXPECT_EQ(idx.query(q, 5), brute_force(x, q, 5));
}

TEST(Knn, InvalidArguments) {
  const auto x = Matrix::from_rows({{0, 0}, {1, 1}});
  const NeighborIndex idx(x, {0, 1});
  EXPECT_THROW(idx.query(std::vector<double>{1.0}, 1), Error);
  EXPECT_THROW(idx.query(std::vector<double>{1.0, 2.0}, 0), Error);
  EXPECT_THROW(idx.query(std::vector<double>{1.0, 2.0}, 3), Error);
  EXPECT_THROW(NeighborIndex(x, {0}), Error);
}

TEST(Route, NearestNeighborClusterForK1) {
  const auto x = Matrix::from_rows({{0}, {1}, {10}, {11}});
  const NeighborIndex idx(x, {0, 0, 1, 1});
  EXPECT_EQ(idx.route(std::vector<double>{9.0}, 1), 1);
  EXPECT_EQ(idx.route(std::vector<double>{0.4}, 1), 0);
}

TEST(Route, StrictMajority) {
  // nearest three rows lie in clusters [1, 1, 0]
  const auto x = Matrix::from_rows({{0}, {1}, {2}, {50}});
  const NeighborIndex idx(x, {1, 1, 0, 0});
  EXPECT_EQ(idx.route(std::vector<double>{0.0}, 3), 1);
  // the nearest is in cluster 0, but clusters [0, 1, 1] vote 1
  const NeighborIndex idx2(x, {0, 1, 1, 0});
  EXPECT_EQ(idx2.route(std::vector<double>{0.0}, 3), 1);
}

TEST(Route, TieGoesToNearest) {
  const auto x = Matrix::from_rows({{0}, {1}});
  const NeighborIndex idx(x, {0, 1});
  EXPECT_EQ(idx.route(std::vector<double>{0.9}, 2), 1);
  EXPECT_EQ(idx.route(std::vector<double>{0.1}, 2), 0);
}

TEST(Route, TieWithoutNearestGoesToSmallestId) {
  // votes: cluster 2 (the nearest) 1, cluster 1 2, cluster 0 2
  const auto x = Matrix::from_rows({{0}, {1}, {2}, {3}, {4}});
  const NeighborIndex idx(x, {2, 1, 1, 0, 0});
  EXPECT_EQ(idx.route(std::vector<double>{0.0}, 5), 0);
}
