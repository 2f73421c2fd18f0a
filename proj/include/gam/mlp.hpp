#pragma once

// Small dense feed-forward network: forward pass, exact input gradients,
// mini-batch SGD training and JSON persistence.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gam/data.hpp"
#include "gam/error.hpp"
#include "gam/io.hpp"
#include "gam/random.hpp"

namespace gam {

enum class Activation { kRelu, kSigmoid, kSoftmax, kIdentity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softmax") return Activation::kSoftmax;
  if (name == "identity") return Activation::kIdentity;
  fail(ErrorCode::kUnsupportedActivation, "unknown activation '" + std::string(name) + "'");
}

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  /// Row-major outputs x inputs.
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  double weight(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }
  double& weight(std::size_t out, std::size_t in) { return weights[out * inputs + in]; }

  std::vector<double> pre_activation(std::span<const double> x) const {
    std::vector<double> z(bias);
    for (std::size_t o = 0; o < outputs; ++o) {
      const double* w = &weights[o * inputs];
      for (std::size_t i = 0; i < inputs; ++i) z[o] += w[i] * x[i];
    }
    return z;
  }
};

inline std::vector<double> activate(Activation a, std::span<const double> z) {
  std::vector<double> out(z.begin(), z.end());
  switch (a) {
    case Activation::kRelu:
      for (auto& v : out) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kSigmoid:
      for (auto& v : out) v = sigmoid(v);
      break;
    case Activation::kSoftmax: {
      const double peak = *std::max_element(out.begin(), out.end());
      double total = 0.0;
      for (auto& v : out) total += (v = std::exp(v - peak));
      for (auto& v : out) v /= total;
      break;
    }
    case Activation::kIdentity:
      break;
  }
  return out;
}

struct MlpModel {
  std::size_t input_width = 0;
  std::vector<DenseLayer> layers;

  std::size_t output_width() const { return layers.empty() ? input_width : layers.back().outputs; }

  void validate() const {
    if (layers.empty()) fail(ErrorCode::kShapeMismatch, "model has no layers");
    std::size_t width = input_width;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      if (layer.inputs != width) fail(ErrorCode::kShapeMismatch, "layer " + std::to_string(l) + " input width does not chain");
      if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
        fail(ErrorCode::kShapeMismatch, "layer " + std::to_string(l) + " parameter shapes are inconsistent");
      }
      if (layer.activation == Activation::kSoftmax && l + 1 != layers.size()) {
        fail(ErrorCode::kShapeMismatch, "softmax is only allowed on the final layer");
      }
      width = layer.outputs;
    }
  }
};

/// Per-layer pre-activations and activations; activations[0] is the input.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

inline ForwardTrace forward_trace(const MlpModel& model, std::span<const double> input) {
  if (input.size() != model.input_width) {
    fail(ErrorCode::kShapeMismatch, "input has " + std::to_string(input.size()) + " values, model expects " +
                                        std::to_string(model.input_width));
  }
  ForwardTrace trace;
  trace.post.emplace_back(input.begin(), input.end());
  for (const auto& layer : model.layers) {
    trace.pre.push_back(layer.pre_activation(trace.post.back()));
    trace.post.push_back(activate(layer.activation, trace.pre.back()));
  }
  return trace;
}

inline std::vector<double> forward(const MlpModel& model, std::span<const double> input) {
  return std::move(forward_trace(model, input).post.back());
}

namespace detail {

// Back-propagates dOutput/dPost of the last layer down to the input.
inline std::vector<double> backprop_to_input(const MlpModel& model, const ForwardTrace& trace,
                                             std::vector<double> grad_post) {
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    const auto& z = trace.pre[l];
    const auto& a = trace.post[l + 1];
    std::vector<double> grad_pre(layer.outputs);
    switch (layer.activation) {
      case Activation::kRelu:
        for (std::size_t o = 0; o < layer.outputs; ++o) grad_pre[o] = z[o] > 0.0 ? grad_post[o] : 0.0;
        break;
      case Activation::kSigmoid:
        for (std::size_t o = 0; o < layer.outputs; ++o) grad_pre[o] = grad_post[o] * a[o] * (1.0 - a[o]);
        break;
      case Activation::kSoftmax: {
        double dot = 0.0;
        for (std::size_t o = 0; o < layer.outputs; ++o) dot += grad_post[o] * a[o];
        for (std::size_t o = 0; o < layer.outputs; ++o) grad_pre[o] = a[o] * (grad_post[o] - dot);
        break;
      }
      case Activation::kIdentity:
        grad_pre = grad_post;
        break;
    }
    std::vector<double> grad_in(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      for (std::size_t i = 0; i < layer.inputs; ++i) grad_in[i] += layer.weight(o, i) * grad_pre[o];
    }
    grad_post = std::move(grad_in);
  }
  return grad_post;
}

}  // namespace detail

/// Exact reverse-mode gradient of output[output_index] w.r.t. the input.
/// The ReLU derivative at exactly zero is taken as 0.
inline std::vector<double> gradient_wrt_input(const MlpModel& model, std::span<const double> input,
                                              std::size_t output_index) {
  if (output_index >= model.output_width()) fail(ErrorCode::kIndexOutOfRange, "output index out of range");
  const auto trace = forward_trace(model, input);
  std::vector<double> seed(model.output_width(), 0.0);
  seed[output_index] = 1.0;
  return detail::backprop_to_input(model, trace, std::move(seed));
}

enum class Loss { kBinaryCrossEntropy, kCategoricalCrossEntropy };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  Loss loss = Loss::kBinaryCrossEntropy;
  /// Train on standardized inputs, then fold the scaling into the first
  /// layer so the returned model consumes raw features.
  bool standardize_inputs = true;
  /// Independent initializations; the one with the lowest final training
  /// loss is kept.
  std::size_t init_restarts = 1;
};

struct Architecture {
  std::vector<std::size_t> hidden;
  Activation hidden_activation = Activation::kRelu;
};

/// Glorot-uniform weights, zero biases.
inline MlpModel init_model(std::size_t input_width, const Architecture& arch, std::size_t output_width,
                           Activation output_activation, std::uint64_t seed) {
  Rng rng(seed);
  MlpModel model;
  model.input_width = input_width;
  std::size_t width = input_width;
  auto add_layer = [&](std::size_t outputs, Activation activation) {
    DenseLayer layer;
    layer.inputs = width;
    layer.outputs = outputs;
    layer.activation = activation;
    const double limit = std::sqrt(6.0 / static_cast<double>(width + outputs));
    layer.weights.resize(width * outputs);
    for (auto& w : layer.weights) w = uniform(rng, -limit, limit);
    layer.bias.assign(outputs, 0.0);
    model.layers.push_back(std::move(layer));
    width = outputs;
  };
  for (auto h : arch.hidden) add_layer(h, arch.hidden_activation);
  add_layer(output_width, output_activation);
  return model;
}

namespace detail {

inline double cross_entropy(const std::vector<double>& output, int label) {
  constexpr double kFloor = 1e-15;
  if (output.size() == 1) {
    const double p = label == 1 ? output[0] : 1.0 - output[0];
    return -std::log(std::max(p, kFloor));
  }
  return -std::log(std::max(output[static_cast<std::size_t>(label)], kFloor));
}

// Mini-batch SGD in place; returns the mean training loss afterwards.
inline double sgd(MlpModel& model, const std::vector<std::vector<double>>& inputs, const std::vector<int>& labels,
                  const TrainConfig& config, std::uint64_t shuffle_seed) {
  const bool binary = config.loss == Loss::kBinaryCrossEntropy;
  Rng rng(shuffle_seed);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<std::vector<double>> grad_w(model.layers.size()), grad_b(model.layers.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        grad_w[l].assign(model.layers[l].weights.size(), 0.0);
        grad_b[l].assign(model.layers[l].bias.size(), 0.0);
      }
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t r = order[b];
        const auto trace = forward_trace(model, inputs[r]);
        // Cross-entropy through sigmoid/softmax: dL/dz = p - y.
        std::vector<double> delta = trace.post.back();
        if (binary) {
          delta[0] -= labels[r] == 1 ? 1.0 : 0.0;
        } else {
          delta[static_cast<std::size_t>(labels[r])] -= 1.0;
        }
        for (std::size_t l = model.layers.size(); l-- > 0;) {
          const auto& layer = model.layers[l];
          const auto& x = trace.post[l];
          for (std::size_t o = 0; o < layer.outputs; ++o) {
            grad_b[l][o] += delta[o];
            for (std::size_t i = 0; i < layer.inputs; ++i) grad_w[l][o * layer.inputs + i] += delta[o] * x[i];
          }
          if (l == 0) break;
          std::vector<double> prev(layer.inputs, 0.0);
          for (std::size_t o = 0; o < layer.outputs; ++o) {
            for (std::size_t i = 0; i < layer.inputs; ++i) prev[i] += layer.weight(o, i) * delta[o];
          }
          const auto& below = model.layers[l - 1];
          const auto& z = trace.pre[l - 1];
          const auto& a = trace.post[l];
          for (std::size_t i = 0; i < prev.size(); ++i) {
            if (below.activation == Activation::kRelu) {
              prev[i] = z[i] > 0.0 ? prev[i] : 0.0;
            } else if (below.activation == Activation::kSigmoid) {
              prev[i] *= a[i] * (1.0 - a[i]);
            }
          }
          delta = std::move(prev);
        }
      }
      const double step = config.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] -= step * grad_w[l][i];
        for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= step * grad_b[l][i];
      }
    }
  }
  double loss = 0.0;
  for (std::size_t r = 0; r < inputs.size(); ++r) loss += cross_entropy(forward(model, inputs[r]), labels[r]);
  return loss / static_cast<double>(inputs.size());
}

}  // namespace detail

/// Binary cross-entropy trains a single sigmoid output on labels {0, 1};
/// categorical cross-entropy trains a softmax over all classes.
inline MlpModel train(const Dataset& data, const Architecture& arch, const TrainConfig& config) {
  if (data.rows() == 0) fail(ErrorCode::kEmptyDataset, "training set is empty");
  data.validate();
  if (!(config.learning_rate > 0.0) || config.batch_size < 1) {
    fail(ErrorCode::kInvalidArgument, "learning rate must be positive and batch size at least 1");
  }
  const std::size_t width = data.width();
  const bool binary = config.loss == Loss::kBinaryCrossEntropy;
  if (binary && data.class_names.size() > 2) {
    fail(ErrorCode::kShapeMismatch, "binary cross-entropy needs at most two classes");
  }
  const std::size_t out_width = binary ? 1 : data.class_names.size();

  std::vector<double> mean(width, 0.0), scale(width, 1.0);
  if (config.standardize_inputs) {
    for (const auto& row : data.features) {
      for (std::size_t f = 0; f < width; ++f) mean[f] += row[f];
    }
    for (auto& m : mean) m /= static_cast<double>(data.rows());
    for (std::size_t f = 0; f < width; ++f) {
      double sq = 0.0;
      for (const auto& row : data.features) sq += (row[f] - mean[f]) * (row[f] - mean[f]);
      const double sd = std::sqrt(sq / static_cast<double>(data.rows()));
      scale[f] = sd > 0.0 ? sd : 1.0;
    }
  }
  std::vector<std::vector<double>> inputs(data.rows(), std::vector<double>(width));
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t f = 0; f < width; ++f) inputs[r][f] = (data.features[r][f] - mean[f]) / scale[f];
  }

  if (config.init_restarts < 1) fail(ErrorCode::kInvalidArgument, "init_restarts must be at least 1");
  MlpModel model;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < config.init_restarts; ++r) {
    auto candidate = init_model(width, arch, out_width, binary ? Activation::kSigmoid : Activation::kSoftmax,
                                derive_seed(config.seed, 2 * r));
    const double loss = detail::sgd(candidate, inputs, data.labels, config, derive_seed(config.seed, 2 * r + 1));
    if (loss < best_loss) {
      best_loss = loss;
      model = std::move(candidate);
    }
  }

  // Fold (x - mean) / scale into the first layer.
  auto& first = model.layers.front();
  for (std::size_t o = 0; o < first.outputs; ++o) {
    for (std::size_t i = 0; i < width; ++i) {
      first.weight(o, i) /= scale[i];
      first.bias[o] -= first.weight(o, i) * mean[i];
    }
  }
  return model;
}

/// Predicted class: sigmoid output thresholded at 0.5, otherwise argmax.
inline int predict_class(const MlpModel& model, std::span<const double> input) {
  const auto out = forward(model, input);
  if (out.size() == 1) return out[0] >= 0.5 ? 1 : 0;
  return static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
}

inline double accuracy(const MlpModel& model, const Dataset& data) {
  if (data.rows() == 0) fail(ErrorCode::kEmptyDataset, "evaluation set is empty");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) correct += predict_class(model, data.features[r]) == data.labels[r];
  return static_cast<double>(correct) / static_cast<double>(data.rows());
}

inline nlohmann::ordered_json model_to_json(const MlpModel& model) {
  nlohmann::ordered_json j;
  j["input_width"] = model.input_width;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& layer : model.layers) {
    nlohmann::ordered_json lj;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      rows.push_back(std::vector<double>(layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.inputs),
                                         layer.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * layer.inputs)));
    }
    lj["weights"] = rows;
    lj["bias"] = layer.bias;
    lj["activation"] = std::string(to_string(layer.activation));
    layers.push_back(lj);
  }
  j["layers"] = layers;
  return j;
}

inline MlpModel model_from_json(const nlohmann::json& j) {
  MlpModel model;
  try {
    model.input_width = j.at("input_width").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
      DenseLayer layer;
      const auto rows = lj.at("weights").get<std::vector<std::vector<double>>>();
      layer.bias = lj.at("bias").get<std::vector<double>>();
      layer.activation = parse_activation(lj.at("activation").get<std::string>());
      layer.outputs = rows.size();
      layer.inputs = rows.empty() ? 0 : rows.front().size();
      for (const auto& row : rows) {
        if (row.size() != layer.inputs) fail(ErrorCode::kMalformedModelFile, "ragged weight matrix");
        layer.weights.insert(layer.weights.end(), row.begin(), row.end());
      }
      model.layers.push_back(std::move(layer));
    }
    model.validate();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedModelFile, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedModelFile) throw;
    fail(ErrorCode::kMalformedModelFile, e.what());
  }
  return model;
}

inline void save_model(const MlpModel& model, const std::filesystem::path& path) {
  io::write_atomic(path, model_to_json(model).dump(2) + "\n");
}

inline MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedModelFile, e.what());
  }
  return model_from_json(j);
}

}  // namespace gam
