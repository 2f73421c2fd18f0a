#pragma once

// K-medoids over a precomputed distance matrix, silhouette scoring and
// silhouette-driven choice of K. Every tie resolves to the lowest index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "gam/error.hpp"
#include "gam/random.hpp"
#include "gam/rank.hpp"

namespace gam {

struct ClusteringResult {
  std::vector<std::size_t> medoid_indices;
  /// Position into medoid_indices for every point.
  std::vector<std::size_t> assignment;
  double cost = 0.0;
  std::size_t iterations_run = 0;
  std::uint64_t seed = 0;
  /// Cost after every assignment step, starting with the initial medoids.
  std::vector<double> cost_history;
};

struct SilhouetteReport {
  std::vector<double> per_point;
  double mean = 0.0;
};

struct KMedoidsOptions {
  std::size_t max_iter = 100;
  std::size_t restarts = 10;
};

namespace detail {

inline void check_k(std::size_t n, std::size_t k) {
  if (k < 1) fail(ErrorCode::kKZero, "k must be at least 1");
  if (k > n) fail(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
}

}  // namespace detail

/// K distinct indices drawn uniformly without replacement (partial
/// Fisher-Yates), in draw order.
inline std::vector<std::size_t> init_medoids(std::size_t n, std::size_t k, std::uint64_t seed) {
  detail::check_k(n, k);
  Rng rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

namespace detail {

/// Correctly rounded sum (Shewchuk's exact partials). Costs computed this way
/// are monotone in their terms, so an iteration that lowers the exact cost
/// can never raise the reported one.
class ExactSum {
 public:
  void add(double x) {
    std::size_t used = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[used++] = lo;
      x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
  }

  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t i = partials_.size() - 1;
    double hi = partials_[i];
    double lo = 0.0;
    while (i > 0) {
      const double x = hi;
      const double y = partials_[--i];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    // Round-half-even correction when the remaining partials push past a tie.
    if (i > 0 && ((lo < 0.0 && partials_[i - 1] < 0.0) || (lo > 0.0 && partials_[i - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

}  // namespace detail

/// Nearest medoid per point, ties to the earliest medoid position. A medoid
/// always belongs to its own cluster, even when another medoid is a duplicate
/// at distance zero.
inline std::vector<std::size_t> assign_clusters(const DistanceMatrix& d,
                                                std::span<const std::size_t> medoids) {
  const std::size_t n = d.size();
  if (medoids.empty()) fail(ErrorCode::kKZero, "no medoids given");
  std::set<std::size_t> seen;
  for (auto m : medoids) {
    if (m >= n) fail(ErrorCode::kInvalidMedoidIndex, "medoid index " + std::to_string(m) + " out of range");
    if (!seen.insert(m).second) fail(ErrorCode::kInvalidMedoidIndex, "duplicate medoid " + std::to_string(m));
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_dist = d(i, medoids[0]);
    for (std::size_t c = 1; c < medoids.size(); ++c) {
      const double dist = d(i, medoids[c]);
      if (dist < best_dist) {
        best = c;
        best_dist = dist;
      }
    }
    assignment[i] = best;
  }
  for (std::size_t c = 0; c < medoids.size(); ++c) assignment[medoids[c]] = c;
  return assignment;
}

/// Member minimizing the summed distance to all other members.
inline std::size_t update_medoid(const DistanceMatrix& d, std::span<const std::size_t> members) {
  if (members.empty()) fail(ErrorCode::kEmptyCluster, "cluster has no members");
  std::size_t best = members[0];
  double best_sum = std::numeric_limits<double>::infinity();
  for (auto candidate : members) {
    if (candidate >= d.size()) fail(ErrorCode::kIndexOutOfRange, "member index out of range");
    detail::ExactSum acc;
    for (auto j : members) acc.add(d(j, candidate));
    const double sum = acc.value();
    if (sum < best_sum || (sum == best_sum && candidate < best)) {
      best = candidate;
      best_sum = sum;
    }
  }
  return best;
}

inline double clustering_cost(const DistanceMatrix& d, std::span<const std::size_t> medoids,
                              std::span<const std::size_t> assignment) {
  detail::ExactSum cost;
  for (std::size_t i = 0; i < assignment.size(); ++i) cost.add(d(i, medoids[assignment[i]]));
  return cost.value();
}

inline std::vector<std::vector<std::size_t>> cluster_members(std::span<const std::size_t> assignment,
                                                             std::size_t k) {
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) members[assignment[i]].push_back(i);
  return members;
}

/// Alternates nearest-medoid assignment and medoid update from the given
/// initial medoids until the assignment repeats or max_iter updates have run.
inline ClusteringResult fit_kmedoids_from(const DistanceMatrix& d, std::vector<std::size_t> initial,
                                          std::uint64_t seed, std::size_t max_iter = 100) {
  const std::size_t k = initial.size();
  detail::check_k(d.size(), k);
  if (max_iter < 1) fail(ErrorCode::kInvalidArgument, "max_iter must be at least 1");

  ClusteringResult result;
  result.seed = seed;
  result.medoid_indices = std::move(initial);
  result.assignment = assign_clusters(d, result.medoid_indices);
  result.cost_history.push_back(clustering_cost(d, result.medoid_indices, result.assignment));

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    result.iterations_run = iter;
    // A medoid always owns itself, so no cluster is ever empty here.
    const auto members = cluster_members(result.assignment, k);
    for (std::size_t c = 0; c < k; ++c) result.medoid_indices[c] = update_medoid(d, members[c]);
    auto next = assign_clusters(d, result.medoid_indices);
    result.cost_history.push_back(clustering_cost(d, result.medoid_indices, next));
    const bool converged = next == result.assignment;
    result.assignment = std::move(next);
    if (converged) break;
  }
  result.cost = result.cost_history.back();
  return result;
}

/// Single run from init_medoids(n, k, seed).
inline ClusteringResult fit_kmedoids(const DistanceMatrix& d, std::size_t k, std::uint64_t seed,
                                     std::size_t max_iter = 100) {
  detail::check_k(d.size(), k);
  return fit_kmedoids_from(d, init_medoids(d.size(), k, seed), seed, max_iter);
}

namespace detail {

/// C(n, k), saturating at `cap`.
inline std::size_t choose_capped(std::size_t n, std::size_t k, std::size_t cap) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c >= static_cast<double>(cap)) return cap;
  }
  return static_cast<std::size_t>(std::llround(c));
}

}  // namespace detail

/// Best (lowest cost, earliest on ties) of `restarts` runs. Restart r starts
/// from init_medoids(derive_seed(seed, r)); when that medoid set was already
/// tried, it redraws with derive_seed(that seed, attempt) so every restart
/// explores a new starting point. Stops early once all C(n, k) sets are used.
inline ClusteringResult fit_kmedoids_restarts(const DistanceMatrix& d, std::size_t k,
                                              std::uint64_t seed, std::size_t restarts,
                                              std::size_t max_iter = 100) {
  if (restarts < 1) fail(ErrorCode::kInvalidArgument, "restarts must be at least 1");
  const std::size_t n = d.size();
  detail::check_k(n, k);
  constexpr std::size_t kMaxRedraws = 64;
  const std::size_t subsets = detail::choose_capped(n, k, restarts + 1);
  std::set<std::vector<std::size_t>> tried;
  std::optional<ClusteringResult> best;
  for (std::size_t r = 0; r < restarts && tried.size() < subsets; ++r) {
    std::uint64_t run_seed = derive_seed(seed, r);
    auto initial = init_medoids(n, k, run_seed);
    auto key = initial;
    std::sort(key.begin(), key.end());
    for (std::size_t attempt = 1; tried.count(key) && attempt <= kMaxRedraws; ++attempt) {
      run_seed = derive_seed(derive_seed(seed, r), attempt);
      initial = init_medoids(n, k, run_seed);
      key = initial;
      std::sort(key.begin(), key.end());
    }
    tried.insert(std::move(key));
    auto run = fit_kmedoids_from(d, std::move(initial), run_seed, max_iter);
    if (!best || run.cost < best->cost) best = std::move(run);
  }
  return *best;
}

/// Silhouette (b - a) / max(a, b) per point; members of singleton clusters
/// score 0.
inline SilhouetteReport silhouette(const DistanceMatrix& d, std::span<const std::size_t> assignment) {
  const std::size_t n = d.size();
  if (assignment.size() != n) fail(ErrorCode::kLengthMismatch, "assignment length differs from matrix size");
  if (n == 0) fail(ErrorCode::kEmptyInput, "empty assignment");
  const std::size_t k = *std::max_element(assignment.begin(), assignment.end()) + 1;
  std::vector<std::size_t> sizes(k, 0);
  for (auto c : assignment) ++sizes[c];
  if (std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }) < 2) {
    fail(ErrorCode::kSingleCluster, "silhouette needs at least two clusters");
  }

  SilhouetteReport report;
  report.per_point.resize(n, 0.0);
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = assignment[i];
    if (sizes[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    const auto row = d.row(i);
    for (std::size_t j = 0; j < n; ++j) sums[assignment[j]] += row[j];
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    report.per_point[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  double total = 0.0;
  for (double s : report.per_point) total += s;
  report.mean = total / static_cast<double>(n);
  return report;
}

struct KScore {
  std::size_t k = 0;
  double silhouette_mean = 0.0;
  ClusteringResult clustering;
};

struct KSelection {
  std::size_t k = 0;
  std::vector<KScore> scores;

  const KScore& chosen() const {
    for (const auto& s : scores) {
      if (s.k == k) return s;
    }
    fail(ErrorCode::kIndexOutOfRange, "selected k missing from score table");
  }
};

/// Scores every k in [k_min, k_max] by the mean silhouette of its best
/// restart and picks the maximum (ties to the smaller k).
inline KSelection select_k(const DistanceMatrix& d, std::size_t k_min, std::size_t k_max,
                           std::uint64_t seed, std::size_t restarts, std::size_t max_iter = 100) {
  const std::size_t n = d.size();
  if (k_min < 2 || k_min > k_max || k_max + 1 > n) {
    fail(ErrorCode::kInvalidArgument, "k range must satisfy 2 <= k_min <= k_max <= n-1");
  }
  KSelection selection;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    KScore score;
    score.k = k;
    score.clustering = fit_kmedoids_restarts(d, k, seed, restarts, max_iter);
    score.silhouette_mean = silhouette(d, score.clustering.assignment).mean;
    if (score.silhouette_mean > best) {
      best = score.silhouette_mean;
      selection.k = k;
    }
    selection.scores.push_back(std::move(score));
  }
  return selection;
}

}  // namespace gam
