#pragma once

// JSON documents for clustering results and global attribution maps.
// Key order is fixed so identical inputs serialize byte-identically.

#include <string>

#include "json.hpp"

#include "gam/gam.hpp"
#include "gam/kmedoids.hpp"

namespace gam {

using Json = nlohmann::ordered_json;

inline Json to_json(const GamConfig& config) {
  Json j;
  j["metric"] = std::string(to_string(config.metric));
  if (config.k) {
    j["k"] = *config.k;
  } else {
    j["k"] = "auto";
    j["auto_k"] = {config.auto_k.k_min, config.auto_k.k_max};
  }
  j["seed"] = config.seed;
  j["restarts"] = config.restarts;
  j["max_iter"] = config.max_iter;
  return j;
}

inline Json to_json(const ClusteringResult& result, std::optional<double> silhouette_mean) {
  Json j;
  j["k"] = result.medoid_indices.size();
  j["seed"] = result.seed;
  j["medoid_indices"] = result.medoid_indices;
  j["assignment"] = result.assignment;
  j["cost"] = result.cost;
  j["silhouette_mean"] = silhouette_mean ? Json(*silhouette_mean) : Json(nullptr);
  j["iterations_run"] = result.iterations_run;
  return j;
}

inline Json to_json(const GlobalAttributionMap& map) {
  Json j;
  j["config"] = to_json(map.config);
  j["silhouette_mean"] = map.silhouette_mean ? Json(*map.silhouette_mean) : Json(nullptr);
  j["cost"] = map.cost;
  if (!map.k_scores.empty()) {
    Json table = Json::array();
    for (const auto& [k, score] : map.k_scores) table.push_back({{"k", k}, {"silhouette_mean", score}});
    j["k_scores"] = table;
  }
  Json clusters = Json::array();
  for (const auto& c : map.clusters) {
    Json cj;
    cj["size"] = c.size;
    cj["explanatory_power"] = c.explanatory_power;
    cj["medoid_sample_index"] = c.medoid_sample_index;
    Json weights = Json::object();
    Json raw = Json::object();
    for (std::size_t f = 0; f < map.feature_names.size(); ++f) {
      weights[map.feature_names[f]] = c.medoid_attribution.weights[f];
      raw[map.feature_names[f]] = c.medoid_raw_weights[f];
    }
    cj["medoid_weights"] = weights;
    cj["medoid_raw_weights"] = raw;
    cj["member_sample_indices"] = c.member_sample_indices;
    clusters.push_back(cj);
  }
  j["clusters"] = clusters;
  return j;
}

inline Json to_json(const KSelection& selection) {
  Json j;
  j["k"] = selection.k;
  Json table = Json::array();
  for (const auto& s : selection.scores) {
    table.push_back({{"k", s.k}, {"silhouette_mean", s.silhouette_mean}, {"cost", s.clustering.cost}});
  }
  j["scores"] = table;
  return j;
}

}  // namespace gam

namespace gam {

/// Reads back the parts of a GAM result document needed to reattach a map to
/// its attributions (membership and medoids). Medoid weights are recomputed
/// from the attributions by the caller.
inline GlobalAttributionMap map_from_json(const nlohmann::json& j,
                                          std::span<const AttributionVector> attributions) {
  GlobalAttributionMap map;
  try {
    if (!attributions.empty()) map.feature_names = attributions.front().feature_names;
    std::size_t n = 0;
    for (const auto& cj : j.at("clusters")) {
      GlobalAttribution g;
      g.medoid_sample_index = cj.at("medoid_sample_index").get<std::size_t>();
      g.member_sample_indices = cj.at("member_sample_indices").get<std::vector<std::size_t>>();
      g.size = g.member_sample_indices.size();
      n += g.size;
      map.clusters.push_back(std::move(g));
    }
    if (n != attributions.size()) {
      fail(ErrorCode::kRowCountMismatch, "map covers " + std::to_string(n) + " samples, attributions have " +
                                             std::to_string(attributions.size()));
    }
    std::vector<bool> seen(n, false);
    for (auto& g : map.clusters) {
      for (auto i : g.member_sample_indices) {
        if (i >= n || seen[i]) fail(ErrorCode::kInvalidArgument, "cluster members do not partition the samples");
        seen[i] = true;
      }
      if (g.medoid_sample_index >= n) fail(ErrorCode::kInvalidMedoidIndex, "medoid index out of range");
      g.medoid_attribution = normalize(attributions[g.medoid_sample_index]);
      g.medoid_raw_weights = attributions[g.medoid_sample_index].weights;
      g.explanatory_power = static_cast<double>(g.size) / static_cast<double>(n);
    }
    if (j.contains("silhouette_mean") && !j["silhouette_mean"].is_null()) {
      map.silhouette_mean = j["silhouette_mean"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedCsv, std::string("malformed GAM document: ") + e.what());
  }
  return map;
}

}  // namespace gam
