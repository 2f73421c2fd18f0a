#include "gam/flat_api.hpp"

#include <gtest/gtest.h>

namespace gam::flat {
namespace {

TEST(Flat, NormalizeAndDistances) {
  const std::vector<double> a{2, 1, 1}, b{1, 3, 0};
  const auto n = normalize(a);
  EXPECT_EQ(n.weights, (std::vector<double>{0.5, 0.25, 0.25}));
  EXPECT_EQ(n.ranks, (std::vector<int>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(kendall_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(spearman_distance(a, b), spearman_rho_sq_distance(gam::normalize(a), gam::normalize(b)));
  EXPECT_THROW(kendall_distance(a, std::vector<double>{1, 2}), Error);
}

TEST(Flat, PairwiseAndFit) {
  const std::vector<double> data{0.9, 0.1, 0.8, 0.2, 0.1, 0.9, 0.2, 0.8, 0.95, 0.05};
  const auto d = pairwise_distances(data, 5, 2, Metric::kKendall);
  ASSERT_EQ(d.size(), 25u);
  EXPECT_GT(d[0 * 5 + 2], 0.0);
  EXPECT_EQ(d[0 * 5 + 1], 0.0);
  const auto g = fit_gam(data, 5, 2, 2, Metric::kKendall, 1);
  EXPECT_EQ(g.sizes, (std::vector<std::size_t>{3, 2}));
  EXPECT_EQ(g.medoid_weights.size(), 4u);
  EXPECT_EQ(g.assignment[0], g.assignment[4]);
  EXPECT_NE(g.assignment[0], g.assignment[2]);
  EXPECT_GE(silhouette(d, 5, g.assignment), 0.99);
  EXPECT_THROW(pairwise_distances(data, 4, 2, Metric::kKendall), Error);
}

}  // namespace
}  // namespace gam::flat
