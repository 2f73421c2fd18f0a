// Command-line front end. Exit codes: 0 success, 1 usage error,
// 2 data/validation error, 3 internal error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gam/data.hpp"
#include "gam/experiments.hpp"
#include "gam/explain.hpp"
#include "gam/gam.hpp"
#include "gam/io.hpp"
#include "gam/kmedoids.hpp"
#include "gam/mlp.hpp"
#include "gam/rank.hpp"
#include "gam/serialize.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

/// Usage problems detected after parsing (flag combinations).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& out, const std::string& contents) {
  if (out.empty() || out == "-") {
    std::cout << contents;
  } else {
    gam::io::write_atomic(out, contents);
  }
}

std::string dump(const gam::Json& j) { return j.dump(2) + "\n"; }

gam::Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) gam::fail(gam::ErrorCode::kIo, "cannot open '" + path.string() + "'");
  try {
    return gam::Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    gam::fail(gam::ErrorCode::kMalformedCsv, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// A baseline file holds one numeric row, optionally preceded by a header.
std::vector<double> read_baseline(const fs::path& path) {
  const auto lines = gam::io::read_lines(path);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::vector<double> row;
    bool numeric = true;
    for (const auto& f : gam::io::split_csv_line(*it)) {
      double v;
      numeric = numeric && gam::io::parse_double(f, v);
      row.push_back(v);
    }
    if (numeric) return row;
  }
  gam::fail(gam::ErrorCode::kMalformedCsv, "baseline file '" + path.string() + "' has no numeric row");
}

struct Common {
  std::uint64_t seed = 0;
  std::string metric = "kendall";
  std::string out;
};

void add_seed(CLI::App* cmd, Common& c) { cmd->add_option("--seed", c.seed, "Seed for all randomness")->capture_default_str(); }
void add_metric(CLI::App* cmd, Common& c) {
  cmd->add_option("--metric", c.metric, "Rank distance")->check(CLI::IsMember({"kendall", "spearman"}))->capture_default_str();
}
void add_out(CLI::App* cmd, Common& c, bool required) {
  auto* opt = cmd->add_option("--out", c.out, "Output file (stdout when omitted)");
  if (required) opt->required();
}

struct KChoice {
  std::optional<std::size_t> k;
  std::vector<std::size_t> auto_k;
  std::size_t restarts = 10;
  std::size_t max_iter = 100;
};

void add_k(CLI::App* cmd, KChoice& k, bool allow_auto) {
  auto* fixed = cmd->add_option("--k", k.k, "Number of clusters")->check(CLI::PositiveNumber);
  if (allow_auto) {
    auto* aut = cmd->add_option("--auto-k", k.auto_k, "Choose K by silhouette over MIN MAX")->expected(2);
    fixed->excludes(aut);
  }
  cmd->add_option("--restarts", k.restarts, "K-medoids restarts")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--max-iter", k.max_iter, "K-medoids iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
}

gam::GamConfig make_config(const Common& c, const KChoice& k) {
  gam::GamConfig config;
  config.metric = gam::parse_metric(c.metric);
  config.seed = c.seed;
  config.restarts = k.restarts;
  config.max_iter = k.max_iter;
  if (k.k) {
    config.k = *k.k;
  } else if (!k.auto_k.empty()) {
    if (k.auto_k[0] < 2 || k.auto_k[0] > k.auto_k[1]) throw UsageError("--auto-k needs 2 <= MIN <= MAX");
    config.auto_k = {k.auto_k[0], k.auto_k[1]};
  } else {
    throw UsageError("one of --k or --auto-k is required");
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global attribution mapping: cluster local explanations into global ones"};
  app.require_subcommand(1);
  app.allow_extras(false);
  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic or bundled dataset as CSV");
  std::string variant = "balanced";
  std::size_t synth_n = 10000;
  std::optional<double> fraction;
  synth->add_option("--variant", variant, "balanced | unbalanced | group-a | group-b | iris")
      ->check(CLI::IsMember({"balanced", "unbalanced", "group-a", "group-b", "iris"}))
      ->capture_default_str();
  synth->add_option("--n", synth_n, "Row count")->capture_default_str();
  synth->add_option("--fraction", fraction, "Share of group-A rows (overrides the variant's)");
  add_seed(synth, common);
  add_out(synth, common, false);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a feed-forward network on a CSV dataset");
  std::string data_path, label = "label", loss = "binary_cross_entropy";
  std::vector<std::size_t> hidden{4};
  std::string hidden_activation = "relu";
  bool one_hot = false;
  gam::TrainConfig train_config;
  std::string eval_path;
  train_cmd->add_option("--data", data_path, "Training CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--label", label, "Label column")->capture_default_str();
  train_cmd->add_flag("--one-hot", one_hot, "Expand text columns to indicator features");
  train_cmd->add_option("--hidden", hidden, "Hidden layer widths")->capture_default_str();
  train_cmd->add_option("--hidden-activation", hidden_activation)->check(CLI::IsMember({"relu", "sigmoid", "identity"}))->capture_default_str();
  train_cmd->add_option("--loss", loss)->check(CLI::IsMember({"binary_cross_entropy", "categorical_cross_entropy"}))->capture_default_str();
  train_cmd->add_option("--epochs", train_config.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch", train_config.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr", train_config.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--init-restarts", train_config.init_restarts)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--eval", eval_path, "Held-out CSV; accuracy is printed")->check(CLI::ExistingFile);
  add_seed(train_cmd, common);
  add_out(train_cmd, common, true);

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Compute local attributions for every row of a dataset");
  std::string model_path, method = "lime", baseline_path, stats_path, target = "predicted";
  gam::ExplainConfig explain_config;
  std::optional<double> kernel_width;
  explain_cmd->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--data", data_path, "Rows to explain")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--label", label, "Label column")->capture_default_str();
  explain_cmd->add_flag("--one-hot", one_hot, "Expand text columns to indicator features");
  explain_cmd->add_option("--method", method)->check(CLI::IsMember({"lime", "ig", "integrated_gradients", "deeplift"}))->capture_default_str();
  explain_cmd->add_option("--steps", explain_config.ig_steps, "Integrated Gradients steps")->check(CLI::PositiveNumber)->capture_default_str();
  explain_cmd->add_option("--samples", explain_config.lime_samples, "LIME perturbations")->check(CLI::Range(std::size_t{10}, std::size_t{100000000}))->capture_default_str();
  explain_cmd->add_option("--kernel-width", kernel_width, "LIME kernel width (default 0.75*sqrt(features))")->check(CLI::PositiveNumber);
  explain_cmd->add_option("--baseline", baseline_path, "Baseline vector CSV (IG/DeepLIFT)")->check(CLI::ExistingFile);
  explain_cmd->add_option("--stats-data", stats_path, "Dataset providing LIME feature statistics (default --data)")->check(CLI::ExistingFile);
  explain_cmd->add_option("--target", target, "Output index or 'predicted'")->capture_default_str();
  add_seed(explain_cmd, common);
  add_out(explain_cmd, common, false);

  // distances
  auto* dist_cmd = app.add_subcommand("distances", "Pairwise rank distance matrix of attributions");
  std::string attrs_path;
  dist_cmd->add_option("--attributions", attrs_path, "Attribution CSV")->required()->check(CLI::ExistingFile);
  add_metric(dist_cmd, common);
  add_out(dist_cmd, common, false);

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "K-medoids over attributions or a distance matrix");
  std::string dist_path;
  KChoice kchoice;
  auto* ca = cluster_cmd->add_option("--attributions", attrs_path, "Attribution CSV")->check(CLI::ExistingFile);
  auto* cd = cluster_cmd->add_option("--distances", dist_path, "Distance matrix CSV")->check(CLI::ExistingFile);
  ca->excludes(cd);
  add_k(cluster_cmd, kchoice, false);
  cluster_cmd->get_option("--k")->required();
  add_metric(cluster_cmd, common);
  add_seed(cluster_cmd, common);
  add_out(cluster_cmd, common, false);

  // gam
  auto* gam_cmd = app.add_subcommand("gam", "Global attribution map from local attributions");
  std::string features_path, summary_out;
  gam_cmd->add_option("--attributions", attrs_path, "Attribution CSV")->required()->check(CLI::ExistingFile);
  add_k(gam_cmd, kchoice, true);
  gam_cmd->add_option("--features", features_path, "Raw feature CSV for per-subpopulation summaries")->check(CLI::ExistingFile);
  gam_cmd->add_option("--label", label, "Label column of --features")->capture_default_str();
  gam_cmd->add_option("--summary-out", summary_out, "Where to write subpopulation summaries");
  add_metric(gam_cmd, common);
  add_seed(gam_cmd, common);
  add_out(gam_cmd, common, false);

  // select-k
  auto* selk_cmd = app.add_subcommand("select-k", "Silhouette score per K");
  std::vector<std::size_t> k_range{2, 8};
  selk_cmd->add_option("--attributions", attrs_path, "Attribution CSV")->required()->check(CLI::ExistingFile);
  selk_cmd->add_option("--auto-k", k_range, "MIN MAX")->expected(2)->capture_default_str();
  selk_cmd->add_option("--restarts", kchoice.restarts)->check(CLI::PositiveNumber)->capture_default_str();
  selk_cmd->add_option("--max-iter", kchoice.max_iter)->check(CLI::PositiveNumber)->capture_default_str();
  add_metric(selk_cmd, common);
  add_seed(selk_cmd, common);
  add_out(selk_cmd, common, false);

  // graph
  auto* graph_cmd = app.add_subcommand("graph", "DOT export of attributions in rank-distance space");
  std::string map_path;
  graph_cmd->add_option("--attributions", attrs_path, "Attribution CSV")->required()->check(CLI::ExistingFile);
  graph_cmd->add_option("--map", map_path, "GAM result JSON")->required()->check(CLI::ExistingFile);
  add_metric(graph_cmd, common);
  add_out(graph_cmd, common, false);

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "One-shot reproduction: data, model, LIME, GAM");
  std::string experiment = "balanced";
  pipe_cmd->add_option("--experiment", experiment, "balanced | unbalanced | iris")
      ->check(CLI::IsMember({"balanced", "unbalanced", "iris"}))
      ->capture_default_str();
  pipe_cmd->add_option("--samples", explain_config.lime_samples, "LIME perturbations")->check(CLI::Range(std::size_t{10}, std::size_t{100000000}))->capture_default_str();
  add_seed(pipe_cmd, common);
  add_out(pipe_cmd, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      gam::Dataset ds;
      if (variant == "iris") {
        ds = gam::load_iris();
      } else if (variant == "group-a") {
        ds = gam::synth_group_a(synth_n, common.seed);
      } else if (variant == "group-b") {
        ds = gam::synth_group_b(synth_n, common.seed);
      } else {
        ds = gam::synth_mixture(synth_n, fraction.value_or(variant == "balanced" ? 0.5 : 0.75), common.seed);
      }
      emit(common.out, gam::format_dataset_csv(ds));
    } else if (*train_cmd) {
      const auto ds = gam::load_csv(data_path, label, one_hot);
      train_config.seed = common.seed;
      train_config.loss = loss == "binary_cross_entropy" ? gam::Loss::kBinaryCrossEntropy : gam::Loss::kCategoricalCrossEntropy;
      const auto model = gam::train(ds, gam::Architecture{hidden, gam::parse_activation(hidden_activation)}, train_config);
      gam::save_model(model, common.out);
      if (!eval_path.empty()) {
        const auto eval = gam::load_csv(eval_path, label, one_hot);
        std::cout << "accuracy " << gam::io::format_double(gam::accuracy(model, eval)) << "\n";
      }
    } else if (*explain_cmd) {
      const auto model = gam::load_model(model_path);
      const auto ds = gam::load_csv(data_path, label, one_hot);
      const auto stats = gam::feature_statistics(stats_path.empty() ? ds : gam::load_csv(stats_path, label, one_hot));
      explain_config.method = gam::parse_explain_method(method);
      explain_config.seed = common.seed;
      explain_config.lime_kernel_width = kernel_width;
      if (target != "predicted") {
        std::size_t t;
        auto [ptr, ec] = std::from_chars(target.data(), target.data() + target.size(), t);
        if (ec != std::errc() || ptr != target.data() + target.size()) throw UsageError("--target must be an index or 'predicted'");
        explain_config.target_output = t;
      }
      if (explain_config.method != gam::ExplainMethod::kLime) {
        if (!baseline_path.empty()) {
          explain_config.baseline = read_baseline(baseline_path);
        } else if (model.output_width() == 1) {
          std::vector<double> lo(ds.width()), hi(ds.width());
          for (std::size_t f = 0; f < ds.width(); ++f) {
            lo[f] = hi[f] = ds.features.front()[f];
            for (const auto& row : ds.features) {
              lo[f] = std::min(lo[f], row[f]);
              hi[f] = std::max(hi[f], row[f]);
            }
          }
          explain_config.baseline = gam::neutral_baseline(model, lo, hi, 0, 0.5, ds.width() <= 3 ? 101 : 11);
        } else {
          explain_config.baseline = stats.mean;
        }
      }
      const auto attrs = gam::batch_explain(model, ds, explain_config, stats);
      emit(common.out, gam::io::format_attributions_csv(ds.feature_names, attrs));
    } else if (*dist_cmd) {
      const auto attrs = gam::io::read_attributions_csv(attrs_path);
      const auto d = gam::pairwise_distances(gam::normalize_all(attrs), gam::parse_metric(common.metric));
      emit(common.out, gam::io::format_distance_csv(d));
    } else if (*cluster_cmd) {
      gam::DistanceMatrix d;
      if (!dist_path.empty()) {
        std::ifstream in(dist_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        d = gam::io::parse_distance_csv(buffer.str());
      } else if (!attrs_path.empty()) {
        d = gam::pairwise_distances(gam::normalize_all(gam::io::read_attributions_csv(attrs_path)),
                                    gam::parse_metric(common.metric));
      } else {
        throw UsageError("one of --attributions or --distances is required");
      }
      const auto result = gam::fit_kmedoids_restarts(d, *kchoice.k, common.seed, kchoice.restarts, kchoice.max_iter);
      std::optional<double> sil;
      if (*kchoice.k >= 2) sil = gam::silhouette(d, result.assignment).mean;
      emit(common.out, dump(gam::to_json(result, sil)));
    } else if (*gam_cmd) {
      const auto config = make_config(common, kchoice);
      const auto attrs = gam::io::read_attributions_csv(attrs_path);
      const auto map = gam::fit_gam(attrs, config);
      emit(common.out, dump(gam::to_json(map)));
      if (!features_path.empty()) {
        const auto ds = gam::load_csv(features_path, label, true);
        const auto summary = gam::subpopulation_summary(map, ds.features);
        gam::Json sj = gam::Json::array();
        for (std::size_t c = 0; c < summary.size(); ++c) {
          gam::Json cj;
          cj["cluster"] = c;
          cj["size"] = map.clusters[c].size;
          gam::Json features = gam::Json::object();
          for (std::size_t f = 0; f < summary[c].size(); ++f) {
            const auto& s = summary[c][f];
            features[ds.feature_names[f]] = {{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"max", s.max}};
          }
          cj["features"] = features;
          sj.push_back(cj);
        }
        if (summary_out.empty()) {
          std::cerr << dump(sj);
        } else {
          gam::io::write_atomic(summary_out, dump(sj));
        }
      }
    } else if (*selk_cmd) {
      const auto attrs = gam::io::read_attributions_csv(attrs_path);
      const auto d = gam::pairwise_distances(gam::normalize_all(attrs), gam::parse_metric(common.metric));
      if (k_range[0] < 2 || k_range[0] > k_range[1]) throw UsageError("--auto-k needs 2 <= MIN <= MAX");
      const auto selection = gam::select_k(d, k_range[0], k_range[1], common.seed, kchoice.restarts, kchoice.max_iter);
      auto j = gam::to_json(selection);
      j["metric"] = common.metric;
      j["seed"] = common.seed;
      j["restarts"] = kchoice.restarts;
      j["max_iter"] = kchoice.max_iter;
      emit(common.out, dump(j));
    } else if (*graph_cmd) {
      const auto attrs = gam::io::read_attributions_csv(attrs_path);
      const auto map = gam::map_from_json(read_json(map_path), attrs);
      emit(common.out, gam::export_rank_graph(gam::normalize_all(attrs), map, gam::parse_metric(common.metric)));
    } else if (*pipe_cmd) {
      if (experiment == "iris") {
        gam::IrisOptions options;
        options.explain.lime_samples = explain_config.lime_samples;
        emit(common.out, dump(gam::to_json(gam::run_iris(common.seed, options))));
      } else {
        gam::SyntheticOptions options;
        options.explain.lime_samples = explain_config.lime_samples;
        emit(common.out, dump(gam::to_json(gam::run_synthetic(gam::parse_variant(experiment), common.seed, options))));
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const gam::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
