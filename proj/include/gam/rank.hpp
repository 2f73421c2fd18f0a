#pragma once

// Attributions as weighted conjoined rankings: normalization and the two
// weighted rank distances (Kendall's tau and Spearman's rho squared).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "gam/error.hpp"

namespace gam {

/// Raw signed per-feature importance for one prediction.
struct AttributionVector {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
};

/// Normalized nonnegative weights (sum 1) with rank 1 = largest weight.
struct RankedAttribution {
  std::vector<double> weights;
  std::vector<int> ranks;

  std::size_t size() const { return weights.size(); }
};

enum class Metric { kKendall, kSpearman };

inline std::string_view to_string(Metric metric) {
  return metric == Metric::kKendall ? "kendall" : "spearman";
}

inline Metric parse_metric(std::string_view name) {
  if (name == "kendall") return Metric::kKendall;
  if (name == "spearman") return Metric::kSpearman;
  fail(ErrorCode::kInvalidArgument, "unknown metric '" + std::string(name) + "'");
}

/// Ranks by descending weight; equal weights go to the lower feature index.
inline std::vector<int> rank_descending(std::span<const double> weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  std::vector<int> ranks(weights.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<int>(pos + 1);
  return ranks;
}

inline RankedAttribution normalize(std::span<const double> weights) {
  if (weights.size() < 2) fail(ErrorCode::kLengthMismatch, "attribution needs at least 2 features");
  double total = 0.0;
  for (double w : weights) total += std::abs(w);
  if (!(total > 0.0)) fail(ErrorCode::kAllZeroAttribution, "every attribution weight is zero");
  RankedAttribution out;
  out.weights.reserve(weights.size());
  for (double w : weights) out.weights.push_back(std::abs(w) / total);
  out.ranks = rank_descending(out.weights);
  return out;
}

inline RankedAttribution normalize(const AttributionVector& attr) {
  if (attr.feature_names.size() != attr.weights.size()) {
    fail(ErrorCode::kLengthMismatch, "feature names and weights differ in length");
  }
  return normalize(std::span<const double>(attr.weights));
}

namespace detail {

inline void check_conjoined(const RankedAttribution& a, const RankedAttribution& b) {
  if (a.size() != b.size() || a.ranks.size() != a.size() || b.ranks.size() != b.size()) {
    fail(ErrorCode::kLengthMismatch, "rankings have different feature counts");
  }
}

// Merge sort over b-ranks (features pre-ordered by a-rank), accumulating
// w_j * sum(w_i) for every left element i that lands after right element j.
inline double weighted_inversions(std::vector<std::pair<int, double>>& items,
                                  std::vector<std::pair<int, double>>& scratch, std::size_t lo,
                                  std::size_t hi) {
  if (hi - lo < 2) return 0.0;
  const std::size_t mid = lo + (hi - lo) / 2;
  double total = weighted_inversions(items, scratch, lo, mid) +
                 weighted_inversions(items, scratch, mid, hi);
  double left_remaining = 0.0;
  for (std::size_t i = lo; i < mid; ++i) left_remaining += items[i].second;
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (items[i].first < items[j].first) {
      left_remaining -= items[i].second;
      scratch[out++] = items[i++];
    } else {
      total += items[j].second * left_remaining;
      scratch[out++] = items[j++];
    }
  }
  while (i < mid) scratch[out++] = items[i++];
  while (j < hi) scratch[out++] = items[j++];
  std::copy(scratch.begin() + lo, scratch.begin() + hi, items.begin() + lo);
  return total;
}

}  // namespace detail

/// Literal pair enumeration; the reference for the O(n log n) version.
inline double kendall_tau_distance_naive(const RankedAttribution& a, const RankedAttribution& b) {
  detail::check_conjoined(a, b);
  const std::size_t n = a.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = a.weights[i] * b.weights[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const long da = a.ranks[i] - a.ranks[j];
      const long db = b.ranks[i] - b.ranks[j];
      if (da * db < 0) total += wi * a.weights[j] * b.weights[j];
    }
  }
  return total;
}

/// Weighted Kendall's tau distance: sum over discordant feature pairs of
/// w_i * w_j with w_i = a_i * b_i. O(n log n).
inline double kendall_tau_distance(const RankedAttribution& a, const RankedAttribution& b) {
  detail::check_conjoined(a, b);
  // The merge order depends on which side is sorted first; fixing the
  // argument order keeps d(a, b) == d(b, a) bit for bit.
  if (std::tie(b.ranks, b.weights) < std::tie(a.ranks, a.weights)) return kendall_tau_distance(b, a);
  const std::size_t n = a.size();
  // Position p holds the feature with a-rank p+1.
  std::vector<std::pair<int, double>> items(n);
  for (std::size_t i = 0; i < n; ++i) {
    items[static_cast<std::size_t>(a.ranks[i] - 1)] = {b.ranks[i], a.weights[i] * b.weights[i]};
  }
  std::vector<std::pair<int, double>> scratch(n);
  return detail::weighted_inversions(items, scratch, 0, n);
}

/// Weighted Spearman's rho squared distance.
inline double spearman_rho_sq_distance(const RankedAttribution& a, const RankedAttribution& b) {
  detail::check_conjoined(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a.ranks[i] - b.ranks[i]);
    total += a.weights[i] * b.weights[i] * diff * diff;
  }
  return total;
}

inline double rank_distance(Metric metric, const RankedAttribution& a, const RankedAttribution& b) {
  return metric == Metric::kKendall ? kendall_tau_distance(a, b) : spearman_rho_sq_distance(a, b);
}

/// Dense symmetric n x n matrix, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), entries_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries_[i * n_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(entries_).subspan(i * n_, n_);
  }

  /// Builds from nested rows; checks symmetry, zero diagonal and nonnegativity.
  static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    DistanceMatrix d(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) fail(ErrorCode::kShapeMismatch, "distance matrix must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) d(i, j) = rows[i][j];
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d(i, i) != 0.0) fail(ErrorCode::kInvalidArgument, "distance matrix diagonal must be zero");
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (d(i, j) < 0.0 || d(i, j) != d(j, i)) {
          fail(ErrorCode::kInvalidArgument, "distance matrix must be symmetric and nonnegative");
        }
      }
    }
    return d;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

/// Pairwise rank distances. Upper triangle is computed (optionally across
/// threads, one row per task) and mirrored; entries do not depend on the
/// thread count.
inline DistanceMatrix pairwise_distances(std::span<const RankedAttribution> attrs, Metric metric,
                                         unsigned threads = 0) {
  if (attrs.size() < 2) fail(ErrorCode::kEmptyInput, "need at least two attributions");
  const std::size_t n = attrs.size();
  for (const auto& a : attrs) {
    if (a.size() != attrs.front().size()) fail(ErrorCode::kLengthMismatch, "attributions differ in feature count");
  }
  DistanceMatrix d(n);
  auto fill_rows = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      for (std::size_t j = i + 1; j < n; ++j) d(i, j) = rank_distance(metric, attrs[i], attrs[j]);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1 || n < 64) {
    fill_rows(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) workers.emplace_back(fill_rows, t, threads);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d(j, i) = d(i, j);
  }
  return d;
}

inline std::vector<RankedAttribution> normalize_all(std::span<const AttributionVector> attrs) {
  std::vector<RankedAttribution> out;
  out.reserve(attrs.size());
  for (const auto& a : attrs) out.push_back(normalize(a));
  return out;
}

}  // namespace gam
