#pragma once

// Local explainers over MlpModel: Integrated Gradients, DeepLIFT with the
// Rescale rule, and LIME for continuous tabular features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gam/data.hpp"
#include "gam/error.hpp"
#include "gam/mlp.hpp"
#include "gam/random.hpp"
#include "gam/rank.hpp"

namespace gam {

enum class ExplainMethod { kLime, kIntegratedGradients, kDeepLift };

inline std::string_view to_string(ExplainMethod m) {
  switch (m) {
    case ExplainMethod::kLime: return "lime";
    case ExplainMethod::kIntegratedGradients: return "integrated_gradients";
    case ExplainMethod::kDeepLift: return "deeplift";
  }
  return "lime";
}

inline ExplainMethod parse_explain_method(std::string_view name) {
  if (name == "lime") return ExplainMethod::kLime;
  if (name == "integrated_gradients" || name == "ig") return ExplainMethod::kIntegratedGradients;
  if (name == "deeplift") return ExplainMethod::kDeepLift;
  fail(ErrorCode::kInvalidArgument, "unknown explanation method '" + std::string(name) + "'");
}

struct FeatureStatistics {
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline FeatureStatistics feature_statistics(const Dataset& data) {
  if (data.rows() == 0) fail(ErrorCode::kEmptyDataset, "cannot compute statistics of an empty dataset");
  const std::size_t m = data.width();
  FeatureStatistics stats{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  for (const auto& row : data.features) {
    for (std::size_t f = 0; f < m; ++f) stats.mean[f] += row[f];
  }
  for (auto& v : stats.mean) v /= static_cast<double>(data.rows());
  for (const auto& row : data.features) {
    for (std::size_t f = 0; f < m; ++f) stats.stddev[f] += (row[f] - stats.mean[f]) * (row[f] - stats.mean[f]);
  }
  for (auto& v : stats.stddev) v = std::sqrt(v / static_cast<double>(data.rows()));
  return stats;
}

struct ExplainConfig {
  ExplainMethod method = ExplainMethod::kLime;
  std::vector<double> baseline;
  std::size_t ig_steps = 50;
  std::size_t lime_samples = 5000;
  /// Defaults to 0.75 * sqrt(feature count).
  std::optional<double> lime_kernel_width;
  double lime_ridge = 1e-3;
  std::uint64_t seed = 0;
  /// Output to explain; unset explains the predicted class.
  std::optional<std::size_t> target_output;

  void validate() const {
    if (ig_steps < 1) fail(ErrorCode::kInvalidArgument, "ig_steps must be at least 1");
    if (lime_samples < 10) fail(ErrorCode::kInvalidArgument, "lime_samples must be at least 10");
    if (lime_kernel_width && !(*lime_kernel_width > 0.0)) {
      fail(ErrorCode::kInvalidArgument, "kernel width must be positive");
    }
  }
};

namespace detail {

inline void check_pair(const MlpModel& model, std::span<const double> input, std::span<const double> baseline) {
  if (input.size() != model.input_width || baseline.size() != model.input_width) {
    fail(ErrorCode::kShapeMismatch, "input and baseline must match the model input width");
  }
}

}  // namespace detail

/// (x - x') times the left-Riemann mean of the gradient at
/// x' + (k / steps)(x - x'), k = 0..steps-1.
inline std::vector<double> integrated_gradients(const MlpModel& model, std::span<const double> input,
                                                std::span<const double> baseline, std::size_t steps,
                                                std::size_t target_output) {
  detail::check_pair(model, input, baseline);
  if (steps < 1) fail(ErrorCode::kInvalidArgument, "steps must be at least 1");
  const std::size_t m = input.size();
  std::vector<double> total(m, 0.0), point(m);
  for (std::size_t k = 0; k < steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps);
    for (std::size_t i = 0; i < m; ++i) point[i] = baseline[i] + alpha * (input[i] - baseline[i]);
    const auto grad = gradient_wrt_input(model, point, target_output);
    for (std::size_t i = 0; i < m; ++i) total[i] += grad[i];
  }
  for (std::size_t i = 0; i < m; ++i) total[i] *= (input[i] - baseline[i]) / static_cast<double>(steps);
  return total;
}

/// The quantity DeepLIFT attributions sum to: the target output, or its
/// pre-activation logit when the final layer is softmax.
inline double deeplift_target_value(const MlpModel& model, std::span<const double> input, std::size_t target_output) {
  const auto trace = forward_trace(model, input);
  if (target_output >= model.output_width()) fail(ErrorCode::kIndexOutOfRange, "output index out of range");
  return model.layers.back().activation == Activation::kSoftmax ? trace.pre.back()[target_output]
                                                                : trace.post.back()[target_output];
}

/// Rescale-rule multipliers chained from the target back to the inputs.
/// Attributions sum to deeplift_target_value(input) - deeplift_target_value(baseline).
inline std::vector<double> deeplift_rescale(const MlpModel& model, std::span<const double> input,
                                            std::span<const double> baseline, std::size_t target_output) {
  detail::check_pair(model, input, baseline);
  if (target_output >= model.output_width()) fail(ErrorCode::kIndexOutOfRange, "output index out of range");
  const auto actual = forward_trace(model, input);
  const auto reference = forward_trace(model, baseline);

  const std::size_t last = model.layers.size() - 1;
  std::vector<double> mult(model.output_width(), 0.0);
  mult[target_output] = 1.0;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    // Multipliers w.r.t. this layer's pre-activations.
    std::vector<double> pre_mult(layer.outputs, 0.0);
    const bool logit_target = l == last && layer.activation == Activation::kSoftmax;
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      if (logit_target || layer.activation == Activation::kIdentity) {
        pre_mult[o] = mult[o];
        continue;
      }
      if (layer.activation == Activation::kSoftmax) {
        fail(ErrorCode::kUnsupportedActivation, "softmax is only supported on the final layer");
      }
      const double dz = actual.pre[l][o] - reference.pre[l][o];
      const double da = actual.post[l + 1][o] - reference.post[l + 1][o];
      double slope;
      if (std::abs(dz) > 1e-12) {
        slope = da / dz;
      } else if (layer.activation == Activation::kRelu) {
        slope = actual.pre[l][o] > 0.0 ? 1.0 : 0.0;
      } else {
        const double s = actual.post[l + 1][o];
        slope = s * (1.0 - s);
      }
      pre_mult[o] = mult[o] * slope;
    }
    std::vector<double> in_mult(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      for (std::size_t i = 0; i < layer.inputs; ++i) in_mult[i] += layer.weight(o, i) * pre_mult[o];
    }
    mult = std::move(in_mult);
  }
  std::vector<double> attribution(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) attribution[i] = mult[i] * (input[i] - baseline[i]);
  return attribution;
}

struct LimeExplanation {
  std::vector<double> coefficients;
  double intercept = 0.0;
  /// Set when every perturbation label was identical; coefficients are zero.
  bool zero_variance = false;
};

/// Gaussian perturbations around the input scaled by the per-feature
/// training std, labelled by the model, fit by kernel-weighted ridge
/// regression on the raw offsets. Kernel: exp(-d^2 / width^2) with d the
/// standardized Euclidean distance to the input.
inline LimeExplanation lime_tabular(const MlpModel& model, std::span<const double> input,
                                    const FeatureStatistics& stats, const ExplainConfig& config,
                                    std::size_t target_output) {
  config.validate();
  const std::size_t m = model.input_width;
  if (input.size() != m || stats.stddev.size() != m) fail(ErrorCode::kShapeMismatch, "input or statistics width mismatch");
  if (target_output >= model.output_width()) fail(ErrorCode::kIndexOutOfRange, "output index out of range");
  const double width = config.lime_kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(m)));
  const std::size_t s_count = config.lime_samples;

  Rng rng(config.seed);
  Eigen::MatrixXd offsets(static_cast<Eigen::Index>(s_count), static_cast<Eigen::Index>(m));
  Eigen::VectorXd labels(static_cast<Eigen::Index>(s_count));
  Eigen::VectorXd kernel(static_cast<Eigen::Index>(s_count));
  std::vector<double> point(m);
  for (std::size_t s = 0; s < s_count; ++s) {
    double dist_sq = 0.0;
    for (std::size_t f = 0; f < m; ++f) {
      const double scale = stats.stddev[f] > 0.0 ? stats.stddev[f] : 1.0;
      const double z = standard_normal(rng);
      dist_sq += z * z;
      const double offset = stats.stddev[f] > 0.0 ? z * scale : 0.0;
      offsets(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)) = offset;
      point[f] = input[f] + offset;
    }
    labels(static_cast<Eigen::Index>(s)) = forward(model, point)[target_output];
    kernel(static_cast<Eigen::Index>(s)) = std::exp(-dist_sq / (width * width));
  }

  LimeExplanation result;
  result.coefficients.assign(m, 0.0);
  if (labels.maxCoeff() - labels.minCoeff() <= 1e-12) {
    result.zero_variance = true;
    result.intercept = labels(0);
    return result;
  }
  // Centre with kernel-weighted means so the intercept is unpenalized.
  const double total_weight = kernel.sum();
  const Eigen::RowVectorXd x_mean = (kernel.transpose() * offsets) / total_weight;
  const double y_mean = kernel.dot(labels) / total_weight;
  const Eigen::MatrixXd xc = offsets.rowwise() - x_mean;
  const Eigen::VectorXd yc = labels.array() - y_mean;
  const Eigen::MatrixXd xw = xc.array().colwise() * kernel.array();
  Eigen::MatrixXd gram = xc.transpose() * xw;
  gram.diagonal().array() += config.lime_ridge;
  const Eigen::VectorXd beta = gram.ldlt().solve(xw.transpose() * yc);
  for (std::size_t f = 0; f < m; ++f) result.coefficients[f] = beta(static_cast<Eigen::Index>(f));
  result.intercept = y_mean - x_mean.dot(beta);
  return result;
}

/// Grid search over [lo, hi] per feature for the input whose output is
/// closest to `target` (ties to the first grid point in row-major order).
inline std::vector<double> neutral_baseline(const MlpModel& model, std::span<const double> lo,
                                            std::span<const double> hi, std::size_t output_index,
                                            double target = 0.5, std::size_t points_per_feature = 101) {
  const std::size_t m = model.input_width;
  if (lo.size() != m || hi.size() != m) fail(ErrorCode::kShapeMismatch, "grid bounds must match input width");
  if (points_per_feature < 2) fail(ErrorCode::kInvalidArgument, "grid needs at least 2 points per feature");
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> point(m), best;
  double best_gap = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t f = 0; f < m; ++f) {
      point[f] = lo[f] + (hi[f] - lo[f]) * static_cast<double>(idx[f]) / static_cast<double>(points_per_feature - 1);
    }
    const double gap = std::abs(forward(model, point)[output_index] - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = point;
    }
    std::size_t f = m;
    while (f-- > 0) {
      if (++idx[f] < points_per_feature) break;
      idx[f] = 0;
    }
    if (f == static_cast<std::size_t>(-1)) break;
  }
  return best;
}

inline std::size_t resolve_target(const MlpModel& model, std::span<const double> input, const ExplainConfig& config) {
  if (config.target_output) return *config.target_output;
  const auto out = forward(model, input);
  if (out.size() == 1) return 0;
  return static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
}

/// One explanation for one row.
inline std::vector<double> explain_row(const MlpModel& model, std::span<const double> input,
                                       const ExplainConfig& config, const FeatureStatistics& stats) {
  const std::size_t target = resolve_target(model, input, config);
  switch (config.method) {
    case ExplainMethod::kLime:
      return lime_tabular(model, input, stats, config, target).coefficients;
    case ExplainMethod::kIntegratedGradients:
      return integrated_gradients(model, input, config.baseline, config.ig_steps, target);
    case ExplainMethod::kDeepLift:
      return deeplift_rescale(model, input, config.baseline, target);
  }
  return {};
}

/// Explains every row in order; row r uses seed + r. Rows are split across
/// threads, which does not change the result.
inline std::vector<AttributionVector> batch_explain(const MlpModel& model, const Dataset& data,
                                                    const ExplainConfig& config, const FeatureStatistics& stats,
                                                    unsigned threads = 0) {
  config.validate();
  for (const auto& row : data.features) {
    if (row.size() != model.input_width) fail(ErrorCode::kShapeMismatch, "row width differs from model input width");
  }
  std::vector<AttributionVector> out(data.rows());
  std::vector<std::exception_ptr> errors(data.rows());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t r = first; r < data.rows(); r += stride) {
      ExplainConfig row_config = config;
      row_config.seed = config.seed + r;
      try {
        out[r] = AttributionVector{data.feature_names, explain_row(model, data.features[r], row_config, stats)};
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, data.rows())));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) workers.emplace_back(work, t, threads);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace gam
