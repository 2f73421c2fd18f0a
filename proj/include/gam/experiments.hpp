#pragma once

// End-to-end reproductions: the two-group synthetic study (balanced and
// unbalanced mixtures) and the Iris silhouette study.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "gam/data.hpp"
#include "gam/explain.hpp"
#include "gam/gam.hpp"
#include "gam/mlp.hpp"
#include "gam/serialize.hpp"

namespace gam {

enum class SyntheticVariant { kBalanced, kUnbalanced };

inline SyntheticVariant parse_variant(std::string_view name) {
  if (name == "balanced") return SyntheticVariant::kBalanced;
  if (name == "unbalanced") return SyntheticVariant::kUnbalanced;
  fail(ErrorCode::kInvalidArgument, "unknown variant '" + std::string(name) + "'");
}

struct SyntheticOptions {
  std::size_t train_rows = 10000;
  std::size_t test_rows = 2000;
  TrainConfig train;
  ExplainConfig explain;
  GamConfig gam;

  SyntheticOptions() {
    train.loss = Loss::kBinaryCrossEntropy;
    train.init_restarts = 5;
    explain.method = ExplainMethod::kLime;
    explain.target_output = 0;
    gam.k = 2;
  }
};

inline double fraction_a(SyntheticVariant variant) {
  return variant == SyntheticVariant::kBalanced ? 0.5 : 0.75;
}

struct SyntheticReport {
  SyntheticVariant variant = SyntheticVariant::kBalanced;
  std::uint64_t seed = 0;
  SyntheticOptions options;
  Dataset train;
  Dataset test;
  MlpModel model;
  double test_accuracy = 0.0;
  std::vector<AttributionVector> attributions;
  GlobalAttributionMap map;
};

/// Sub-seeds of one experiment seed.
inline constexpr std::uint64_t kTrainDataStream = 10;
inline constexpr std::uint64_t kTestDataStream = 11;
inline constexpr std::uint64_t kTrainStream = 12;

/// generate -> train -> LIME on the held-out rows -> GAM.
inline SyntheticReport run_synthetic(SyntheticVariant variant, std::uint64_t seed,
                                     SyntheticOptions options = {}) {
  SyntheticReport report;
  report.variant = variant;
  report.seed = seed;
  options.train.seed = derive_seed(seed, kTrainStream);
  options.explain.seed = seed;
  options.gam.seed = seed;
  report.options = options;
  report.train = synth_mixture(options.train_rows, fraction_a(variant), derive_seed(seed, kTrainDataStream));
  report.test = synth_mixture(options.test_rows, fraction_a(variant), derive_seed(seed, kTestDataStream));
  report.model = train(report.train, Architecture{{4}, Activation::kRelu}, options.train);
  report.test_accuracy = accuracy(report.model, report.test);
  const auto stats = feature_statistics(report.train);
  report.attributions = batch_explain(report.model, report.test, options.explain, stats);
  report.map = fit_gam(report.attributions, options.gam);
  return report;
}

inline Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["loss"] = c.loss == Loss::kBinaryCrossEntropy ? "binary_cross_entropy" : "categorical_cross_entropy";
  j["standardize_inputs"] = c.standardize_inputs;
  j["init_restarts"] = c.init_restarts;
  return j;
}

inline Json to_json(const ExplainConfig& c, std::size_t feature_count) {
  Json j;
  j["method"] = std::string(to_string(c.method));
  if (c.method == ExplainMethod::kLime) {
    j["lime_samples"] = c.lime_samples;
    j["lime_kernel_width"] = c.lime_kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(feature_count)));
    j["lime_ridge"] = c.lime_ridge;
  } else {
    j["baseline"] = c.baseline;
    if (c.method == ExplainMethod::kIntegratedGradients) j["ig_steps"] = c.ig_steps;
  }
  j["seed"] = c.seed;
  j["target_output"] = c.target_output ? Json(*c.target_output) : Json("predicted");
  return j;
}

inline Json to_json(const SyntheticReport& r) {
  Json j;
  j["experiment"] = "synthetic";
  j["variant"] = r.variant == SyntheticVariant::kBalanced ? "balanced" : "unbalanced";
  j["seed"] = r.seed;
  j["fraction_a"] = fraction_a(r.variant);
  j["train_rows"] = r.options.train_rows;
  j["test_rows"] = r.options.test_rows;
  j["architecture"] = {{"hidden", {4}}, {"hidden_activation", "relu"}, {"output_activation", "sigmoid"}};
  j["train_config"] = to_json(r.options.train);
  j["explain_config"] = to_json(r.options.explain, r.train.width());
  j["test_accuracy"] = r.test_accuracy;
  Json subpops = Json::array();
  for (const auto& c : r.map.clusters) {
    std::size_t from_a = 0;
    for (auto i : c.member_sample_indices) from_a += r.test.groups[i] == 0;
    Json s;
    s["size"] = c.size;
    s["proportion"] = c.explanatory_power;
    s["medoid_weights"] = {{"A", c.medoid_attribution.weights[0]}, {"B", c.medoid_attribution.weights[1]}};
    s["dominant_feature"] = c.medoid_attribution.ranks[0] == 1 ? "A" : "B";
    s["members_from_group_a"] = from_a;
    subpops.push_back(s);
  }
  j["subpopulations"] = subpops;
  j["gam"] = to_json(r.map);
  return j;
}

struct IrisOptions {
  double test_fraction = 0.25;
  Architecture architecture{{6, 6}, Activation::kRelu};
  TrainConfig train;
  ExplainConfig explain;
  KRange k_range{2, 4};
  std::size_t restarts = 10;
  Metric metric = Metric::kKendall;

  IrisOptions() {
    train.loss = Loss::kCategoricalCrossEntropy;
    train.epochs = 1000;
    train.batch_size = 16;
    train.init_restarts = 3;
    explain.method = ExplainMethod::kLime;
  }
};

struct IrisReport {
  std::uint64_t seed = 0;
  IrisOptions options;
  Dataset data;
  Split split;
  MlpModel model;
  double validation_accuracy = 0.0;
  std::vector<AttributionVector> attributions;
  KSelection selection;
  GlobalAttributionMap map;
};

/// Train on a stratified 75/25 split, explain all 150 rows with LIME, score
/// K over the configured range and build the map at the selected K.
inline IrisReport run_iris(std::uint64_t seed, IrisOptions options = {}) {
  IrisReport report;
  report.seed = seed;
  options.train.seed = derive_seed(seed, kTrainStream);
  options.explain.seed = seed;
  report.options = options;
  report.data = load_iris();
  report.split = train_test_split(report.data, options.test_fraction, derive_seed(seed, kTestDataStream));
  report.model = train(report.split.train, options.architecture, options.train);
  report.validation_accuracy = accuracy(report.model, report.split.test);
  const auto stats = feature_statistics(report.split.train);
  report.attributions = batch_explain(report.model, report.data, options.explain, stats);
  const auto ranked = normalize_all(report.attributions);
  const auto d = pairwise_distances(ranked, options.metric);
  report.selection = select_k(d, options.k_range.k_min, options.k_range.k_max, seed, options.restarts);
  GamConfig config;
  config.metric = options.metric;
  config.k = report.selection.k;
  config.seed = seed;
  config.restarts = options.restarts;
  report.map = build_map(report.attributions, ranked, d, report.selection.chosen().clustering, config);
  for (const auto& s : report.selection.scores) report.map.k_scores.emplace_back(s.k, s.silhouette_mean);
  return report;
}

inline Json to_json(const IrisReport& r) {
  Json j;
  j["experiment"] = "iris";
  j["seed"] = r.seed;
  j["architecture"] = {{"hidden", r.options.architecture.hidden},
                       {"hidden_activation", std::string(to_string(r.options.architecture.hidden_activation))},
                       {"output_activation", "softmax"}};
  j["train_config"] = to_json(r.options.train);
  j["explain_config"] = to_json(r.options.explain, r.data.width());
  j["validation_accuracy"] = r.validation_accuracy;
  j["silhouette_by_k"] = to_json(r.selection);
  Json subpops = Json::array();
  for (const auto& c : r.map.clusters) {
    Json s;
    s["size"] = c.size;
    Json weights = Json::object();
    for (std::size_t f = 0; f < r.data.width(); ++f) weights[r.data.feature_names[f]] = c.medoid_attribution.weights[f];
    s["medoid_weights"] = weights;
    Json species = Json::object();
    for (const auto& name : r.data.class_names) species[name] = 0;
    for (auto i : c.member_sample_indices) {
      const auto& name = r.data.class_names[static_cast<std::size_t>(r.data.labels[i])];
      species[name] = species[name].get<int>() + 1;
    }
    s["species_counts"] = species;
    subpops.push_back(s);
  }
  j["subpopulations"] = subpops;
  j["gam"] = to_json(r.map);
  return j;
}

}  // namespace gam
