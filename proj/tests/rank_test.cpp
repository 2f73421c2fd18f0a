#include "gam/rank.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace gam {
namespace {

RankedAttribution ranked(std::vector<double> w, std::vector<int> r) { return {std::move(w), std::move(r)}; }

TEST(Normalize, TieGoesToLowerIndex) {
  const auto r = normalize(std::vector<double>{-2, 1, 1});
  EXPECT_EQ(r.weights, (std::vector<double>{0.5, 0.25, 0.25}));
  EXPECT_EQ(r.ranks, (std::vector<int>{1, 2, 3}));
}

TEST(Normalize, SingleNonzeroFeature) {
  const auto r = normalize(std::vector<double>{1, 0, 0});
  EXPECT_EQ(r.weights, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(r.ranks, (std::vector<int>{1, 2, 3}));
}

TEST(Normalize, SignIsDiscarded) {
  const auto r = normalize(std::vector<double>{0.2, -0.3, 0.5});
  EXPECT_NEAR(r.weights[0], 0.2, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.3, 1e-15);
  EXPECT_NEAR(r.weights[2], 0.5, 1e-15);
  EXPECT_EQ(r.ranks, (std::vector<int>{3, 2, 1}));
}

TEST(Normalize, Errors) {
  try {
    normalize(std::vector<double>{0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllZeroAttribution);
  }
  try {
    normalize(AttributionVector{{"a", "b"}, {1, 2, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  EXPECT_THROW(normalize(std::vector<double>{1}), Error);
}

TEST(Normalize, RandomInputsSumToOneAndRanksArePermutation) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 500; ++t) {
    const auto raw = oracle::random_signed(rng, 2 + t % 12);
    const auto r = normalize(raw);
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GE(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(r.ranks, oracle::ranks_by_counting(r.weights));
    for (std::size_t i = 0; i < raw.size(); ++i) {
      for (std::size_t j = 0; j < raw.size(); ++j) {
        if (r.weights[i] > r.weights[j]) EXPECT_LT(r.ranks[i], r.ranks[j]);
      }
    }
  }
}

// Worked examples: oracle first, then the pinned value.
TEST(Kendall, WorkedExamples) {
  const auto a2 = ranked({0.7, 0.3}, {1, 2});
  const auto b2 = ranked({0.4, 0.6}, {2, 1});
  const double oracle2 = oracle::kendall(a2.weights, a2.ranks, b2.weights, b2.ranks);
  EXPECT_NEAR(oracle2, 0.0504, 1e-15);
  EXPECT_NEAR(kendall_tau_distance(a2, b2), oracle2, 1e-15);

  const auto a3 = ranked({0.5, 0.3, 0.2}, {1, 2, 3});
  const auto b3 = ranked({0.2, 0.3, 0.5}, {3, 2, 1});
  const double oracle3 = oracle::kendall(a3.weights, a3.ranks, b3.weights, b3.ranks);
  EXPECT_NEAR(oracle3, 0.028, 1e-15);
  EXPECT_NEAR(kendall_tau_distance(a3, b3), oracle3, 1e-15);
  EXPECT_EQ(kendall_tau_distance(a3, a3), 0.0);
}

TEST(Spearman, WorkedExamples) {
  const auto a2 = ranked({0.7, 0.3}, {1, 2});
  const auto b2 = ranked({0.4, 0.6}, {2, 1});
  const double oracle2 = oracle::spearman(a2.weights, a2.ranks, b2.weights, b2.ranks);
  EXPECT_NEAR(oracle2, 0.46, 1e-15);
  EXPECT_NEAR(spearman_rho_sq_distance(a2, b2), oracle2, 1e-15);

  const auto a3 = ranked({0.5, 0.3, 0.2}, {1, 2, 3});
  const auto b3 = ranked({0.2, 0.3, 0.5}, {3, 2, 1});
  const double oracle3 = oracle::spearman(a3.weights, a3.ranks, b3.weights, b3.ranks);
  EXPECT_NEAR(oracle3, 0.8, 1e-15);
  EXPECT_NEAR(spearman_rho_sq_distance(a3, b3), oracle3, 1e-15);
  EXPECT_EQ(spearman_rho_sq_distance(b3, b3), 0.0);
}

TEST(Distances, LengthMismatch) {
  const auto a = ranked({0.5, 0.5}, {1, 2});
  const auto b = ranked({0.2, 0.3, 0.5}, {3, 2, 1});
  EXPECT_THROW(kendall_tau_distance(a, b), Error);
  EXPECT_THROW(kendall_tau_distance_naive(a, b), Error);
  EXPECT_THROW(spearman_rho_sq_distance(a, b), Error);
}

TEST(Distances, MergeKendallMatchesNaiveUpTo200Features) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {2, 3, 7, 31, 64, 200}) {
    for (int t = 0; t < 20; ++t) {
      const auto a = normalize(oracle::random_signed(rng, n));
      const auto b = normalize(oracle::random_signed(rng, n));
      EXPECT_NEAR(kendall_tau_distance(a, b), kendall_tau_distance_naive(a, b), 1e-12);
    }
  }
}

TEST(Distances, SymmetricNonnegativeAndSameOrderZero) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + t % 9;
    const auto a = normalize(oracle::random_signed(rng, n));
    const auto b = normalize(oracle::random_signed(rng, n));
    EXPECT_EQ(kendall_tau_distance(a, b), kendall_tau_distance(b, a));
    EXPECT_EQ(spearman_rho_sq_distance(a, b), spearman_rho_sq_distance(b, a));
    EXPECT_GE(kendall_tau_distance(a, b), 0.0);
    EXPECT_GE(spearman_rho_sq_distance(a, b), 0.0);
    // Same order, different weights.
    RankedAttribution c = b;
    c.ranks = a.ranks;
    EXPECT_EQ(kendall_tau_distance(a, c), 0.0);
    EXPECT_EQ(spearman_rho_sq_distance(a, c), 0.0);
  }
}

// The pair-dependent weights w_i = a_i * b_i break subadditivity; this is the
// smallest counterexample, kept so the behaviour is documented by a test.
TEST(Distances, TriangleInequalityCounterexample) {
  const auto a = normalize(std::vector<double>{0.6, 0.4});
  const auto b = normalize(std::vector<double>{0.99, 0.01});
  const auto c = normalize(std::vector<double>{0.4, 0.6});
  EXPECT_GT(kendall_tau_distance(a, c), kendall_tau_distance(a, b) + kendall_tau_distance(b, c));
  EXPECT_GT(spearman_rho_sq_distance(a, c), spearman_rho_sq_distance(a, b) + spearman_rho_sq_distance(b, c));
}

TEST(PairwiseDistances, IdenticalAttributionsGiveZeroMatrix) {
  const auto a = normalize(std::vector<double>{3, -1, 2});
  const std::vector<RankedAttribution> attrs{a, a, a};
  for (auto metric : {Metric::kKendall, Metric::kSpearman}) {
    const auto d = pairwise_distances(attrs, metric);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(d(i, j), 0.0);
    }
  }
}

TEST(PairwiseDistances, WorkedPairs) {
  const std::vector<RankedAttribution> two{ranked({0.7, 0.3}, {1, 2}), ranked({0.4, 0.6}, {2, 1})};
  const auto dk = pairwise_distances(two, Metric::kKendall);
  EXPECT_NEAR(dk(0, 1), 0.0504, 1e-15);
  EXPECT_EQ(dk(0, 1), dk(1, 0));
  const std::vector<RankedAttribution> three{ranked({0.5, 0.3, 0.2}, {1, 2, 3}), ranked({0.2, 0.3, 0.5}, {3, 2, 1})};
  const auto ds = pairwise_distances(three, Metric::kSpearman);
  EXPECT_NEAR(ds(0, 1), 0.8, 1e-15);
  EXPECT_EQ(ds(1, 0), ds(0, 1));
}

TEST(PairwiseDistances, IndependentOfThreadCount) {
  std::mt19937_64 rng(2);
  std::vector<RankedAttribution> attrs;
  for (int i = 0; i < 150; ++i) attrs.push_back(normalize(oracle::random_signed(rng, 6)));
  const auto serial = pairwise_distances(attrs, Metric::kKendall, 1);
  const auto parallel = pairwise_distances(attrs, Metric::kKendall, 4);
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    for (std::size_t j = 0; j < attrs.size(); ++j) ASSERT_EQ(serial(i, j), parallel(i, j));
  }
}

TEST(PairwiseDistances, Errors) {
  const auto a = normalize(std::vector<double>{1, 2});
  const auto b = normalize(std::vector<double>{1, 2, 3});
  EXPECT_THROW(pairwise_distances(std::vector<RankedAttribution>{a}, Metric::kKendall), Error);
  EXPECT_THROW(pairwise_distances(std::vector<RankedAttribution>{a, b}, Metric::kKendall), Error);
}

}  // namespace
}  // namespace gam
