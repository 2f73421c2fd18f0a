#pragma once

// Contiguous-array entry points for foreign-language wrappers. Matrices are
// row-major; feature names are synthesized as f0, f1, ...

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gam/error.hpp"
#include "gam/gam.hpp"
#include "gam/kmedoids.hpp"
#include "gam/rank.hpp"

namespace gam::flat {

namespace detail {

inline std::vector<RankedAttribution> rows_of(std::span<const double> data, std::size_t rows, std::size_t cols) {
  if (data.size() != rows * cols) fail(ErrorCode::kShapeMismatch, "buffer size differs from rows * cols");
  std::vector<RankedAttribution> out;
  out.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) out.push_back(gam::normalize(data.subspan(r * cols, cols)));
  return out;
}

inline DistanceMatrix matrix_of(std::span<const double> d, std::size_t n) {
  if (d.size() != n * n) fail(ErrorCode::kShapeMismatch, "buffer size differs from n * n");
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i].assign(d.begin() + i * n, d.begin() + (i + 1) * n);
  return DistanceMatrix::from_rows(rows);
}

}  // namespace detail

struct Normalized {
  std::vector<double> weights;
  std::vector<int> ranks;
};

inline Normalized normalize(std::span<const double> weights) {
  auto r = gam::normalize(weights);
  return {std::move(r.weights), std::move(r.ranks)};
}

/// Distances between two raw (unnormalized) attribution vectors.
inline double kendall_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::kLengthMismatch, "vectors differ in length");
  return kendall_tau_distance(gam::normalize(a), gam::normalize(b));
}

inline double spearman_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::kLengthMismatch, "vectors differ in length");
  return spearman_rho_sq_distance(gam::normalize(a), gam::normalize(b));
}

/// n x n row-major distance buffer.
inline std::vector<double> pairwise_distances(std::span<const double> data, std::size_t rows, std::size_t cols,
                                              Metric metric) {
  const auto d = gam::pairwise_distances(detail::rows_of(data, rows, cols), metric);
  std::vector<double> out;
  out.reserve(rows * rows);
  for (std::size_t i = 0; i < rows; ++i) out.insert(out.end(), d.row(i).begin(), d.row(i).end());
  return out;
}

struct FlatGam {
  std::vector<std::size_t> medoid_indices;
  std::vector<std::size_t> assignment;
  std::vector<double> medoid_weights;  // k x cols, normalized
  std::vector<std::size_t> sizes;
  double cost = 0.0;
};

inline FlatGam fit_gam(std::span<const double> data, std::size_t rows, std::size_t cols, std::size_t k,
                       Metric metric, std::uint64_t seed, std::size_t restarts = 10) {
  if (data.size() != rows * cols) fail(ErrorCode::kShapeMismatch, "buffer size differs from rows * cols");
  std::vector<std::string> names(cols);
  for (std::size_t c = 0; c < cols; ++c) names[c] = "f" + std::to_string(c);
  std::vector<AttributionVector> attrs;
  attrs.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    attrs.push_back({names, std::vector<double>(data.begin() + r * cols, data.begin() + (r + 1) * cols)});
  }
  GamConfig config;
  config.metric = metric;
  config.k = k;
  config.seed = seed;
  config.restarts = restarts;
  const auto map = gam::fit_gam(attrs, config);
  FlatGam out;
  out.assignment = map.assignment();
  out.cost = map.cost;
  for (const auto& c : map.clusters) {
    out.medoid_indices.push_back(c.medoid_sample_index);
    out.sizes.push_back(c.size);
    out.medoid_weights.insert(out.medoid_weights.end(), c.medoid_attribution.weights.begin(),
                              c.medoid_attribution.weights.end());
  }
  return out;
}

inline double silhouette(std::span<const double> distances, std::size_t n, std::span<const std::size_t> labels) {
  return gam::silhouette(detail::matrix_of(distances, n), labels).mean;
}

}  // namespace gam::flat
