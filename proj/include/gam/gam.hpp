#pragma once

// Global attribution mapping: normalize local attributions, cluster them in
// rank-distance space and report each medoid as the explanation for its
// subpopulation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gam/error.hpp"
#include "gam/io.hpp"
#include "gam/kmedoids.hpp"
#include "gam/rank.hpp"

namespace gam {

struct KRange {
  std::size_t k_min = 2;
  std::size_t k_max = 8;
};

struct GamConfig {
  Metric metric = Metric::kKendall;
  /// Fixed K; when unset, K is chosen by silhouette over auto_k.
  std::optional<std::size_t> k;
  KRange auto_k;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iter = 100;

  void validate() const {
    if (k && *k < 1) fail(ErrorCode::kKZero, "k must be at least 1");
    if (!k && (auto_k.k_min < 2 || auto_k.k_min > auto_k.k_max)) {
      fail(ErrorCode::kInvalidArgument, "auto k range must satisfy 2 <= min <= max");
    }
    if (restarts < 1) fail(ErrorCode::kInvalidArgument, "restarts must be at least 1");
    if (max_iter < 1) fail(ErrorCode::kInvalidArgument, "max_iter must be at least 1");
  }
};

struct GlobalAttribution {
  RankedAttribution medoid_attribution;
  /// The medoid's original signed attribution.
  std::vector<double> medoid_raw_weights;
  std::size_t medoid_sample_index = 0;
  std::size_t size = 0;
  std::vector<std::size_t> member_sample_indices;
  double explanatory_power = 0.0;
};

struct GlobalAttributionMap {
  std::vector<std::string> feature_names;
  std::vector<GlobalAttribution> clusters;
  /// Unset when only one cluster exists.
  std::optional<double> silhouette_mean;
  double cost = 0.0;
  GamConfig config;
  /// Filled only when K was selected automatically.
  std::vector<std::pair<std::size_t, double>> k_scores;

  /// Cluster position for every sample.
  std::vector<std::size_t> assignment() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.size;
    std::vector<std::size_t> out(n);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      for (auto i : clusters[c].member_sample_indices) out[i] = c;
    }
    return out;
  }
};

/// Builds the map from an existing clustering, ordering clusters by
/// descending size (ties by medoid index).
inline GlobalAttributionMap build_map(std::span<const AttributionVector> attributions,
                                      std::span<const RankedAttribution> ranked,
                                      const DistanceMatrix& d, const ClusteringResult& clustering,
                                      const GamConfig& config) {
  const std::size_t n = ranked.size();
  const std::size_t k = clustering.medoid_indices.size();
  GlobalAttributionMap map;
  map.config = config;
  map.feature_names = attributions.front().feature_names;
  map.cost = clustering.cost;
  const auto members = cluster_members(clustering.assignment, k);
  for (std::size_t c = 0; c < k; ++c) {
    GlobalAttribution g;
    g.medoid_sample_index = clustering.medoid_indices[c];
    g.medoid_attribution = ranked[g.medoid_sample_index];
    g.medoid_raw_weights = attributions[g.medoid_sample_index].weights;
    g.member_sample_indices = members[c];
    g.size = members[c].size();
    g.explanatory_power = static_cast<double>(g.size) / static_cast<double>(n);
    map.clusters.push_back(std::move(g));
  }
  std::sort(map.clusters.begin(), map.clusters.end(), [](const auto& a, const auto& b) {
    return a.size != b.size ? a.size > b.size : a.medoid_sample_index < b.medoid_sample_index;
  });
  if (k >= 2) map.silhouette_mean = silhouette(d, map.assignment()).mean;
  return map;
}

inline GlobalAttributionMap fit_gam(std::span<const AttributionVector> attributions,
                                    const GamConfig& config) {
  config.validate();
  if (attributions.size() < 2) fail(ErrorCode::kEmptyInput, "need at least two attributions");
  const auto ranked = normalize_all(attributions);
  const auto d = pairwise_distances(ranked, config.metric);
  if (config.k) {
    const auto clustering = fit_kmedoids_restarts(d, *config.k, config.seed, config.restarts, config.max_iter);
    return build_map(attributions, ranked, d, clustering, config);
  }
  const std::size_t k_max = std::min(config.auto_k.k_max, d.size() - 1);
  const auto selection = select_k(d, config.auto_k.k_min, k_max, config.seed, config.restarts, config.max_iter);
  auto map = build_map(attributions, ranked, d, selection.chosen().clustering, config);
  for (const auto& s : selection.scores) map.k_scores.emplace_back(s.k, s.silhouette_mean);
  return map;
}

struct FeatureStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Per-cluster, per-feature summary of the raw feature rows of the members.
/// Standard deviation is the population form.
inline std::vector<std::vector<FeatureStats>> subpopulation_summary(
    const GlobalAttributionMap& map, const std::vector<std::vector<double>>& features) {
  const auto assignment = map.assignment();
  if (features.size() != assignment.size()) {
    fail(ErrorCode::kRowCountMismatch, "feature table has " + std::to_string(features.size()) +
                                           " rows, map covers " + std::to_string(assignment.size()));
  }
  std::vector<std::vector<FeatureStats>> out;
  for (const auto& cluster : map.clusters) {
    const std::size_t m = features.empty() ? 0 : features[cluster.member_sample_indices.front()].size();
    std::vector<FeatureStats> stats(m);
    for (std::size_t f = 0; f < m; ++f) {
      double sum = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (auto i : cluster.member_sample_indices) {
        if (features[i].size() != m) fail(ErrorCode::kShapeMismatch, "ragged feature table");
        sum += features[i][f];
        lo = std::min(lo, features[i][f]);
        hi = std::max(hi, features[i][f]);
      }
      const double mean = sum / static_cast<double>(cluster.size);
      double sq = 0.0;
      for (auto i : cluster.member_sample_indices) sq += (features[i][f] - mean) * (features[i][f] - mean);
      stats[f] = {mean, std::sqrt(sq / static_cast<double>(cluster.size)), lo, hi};
    }
    out.push_back(std::move(stats));
  }
  return out;
}

/// Above this many nodes the graph keeps only each node's nearest neighbors.
inline constexpr std::size_t kCompleteGraphLimit = 500;
inline constexpr std::size_t kNearestEdges = 10;

/// DOT document: one node per attribution with its cluster id, medoids
/// flagged, edges weighted by rank distance. Complete undirected graph up to
/// kCompleteGraphLimit nodes, otherwise a digraph with kNearestEdges outgoing
/// edges per node.
inline std::string export_rank_graph(const DistanceMatrix& d, const GlobalAttributionMap& map) {
  const std::size_t n = d.size();
  if (n == 0) fail(ErrorCode::kEmptyInput, "no attributions to export");
  const auto assignment = map.assignment();
  if (assignment.size() != n) fail(ErrorCode::kRowCountMismatch, "map and distance matrix disagree on n");
  std::vector<bool> is_medoid(n, false);
  for (const auto& c : map.clusters) is_medoid[c.medoid_sample_index] = true;

  const bool complete = n <= kCompleteGraphLimit;
  std::string out = complete ? "graph gam {\n" : "digraph gam {\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += "  n" + std::to_string(i) + " [cluster=" + std::to_string(assignment[i]);
    if (is_medoid[i]) out += ", medoid=true";
    out += "];\n";
  }
  if (complete) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        out += "  n" + std::to_string(i) + " -- n" + std::to_string(j) +
               " [weight=" + io::format_double(d(i, j)) + "];\n";
      }
    }
  } else {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
      order.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) order.push_back(j);
      }
      std::partial_sort(order.begin(), order.begin() + kNearestEdges, order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return d(i, a) != d(i, b) ? d(i, a) < d(i, b) : a < b;
                        });
      for (std::size_t e = 0; e < kNearestEdges; ++e) {
        out += "  n" + std::to_string(i) + " -> n" + std::to_string(order[e]) +
               " [weight=" + io::format_double(d(i, order[e])) + "];\n";
      }
    }
  }
  out += "}\n";
  return out;
}

inline std::string export_rank_graph(std::span<const RankedAttribution> attrs,
                                     const GlobalAttributionMap& map, Metric metric) {
  if (attrs.empty()) fail(ErrorCode::kEmptyInput, "no attributions to export");
  if (attrs.size() == 1) return export_rank_graph(DistanceMatrix(1), map);
  return export_rank_graph(pairwise_distances(attrs, metric), map);
}

}  // namespace gam
