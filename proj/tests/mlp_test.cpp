#include "gam/mlp.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"

namespace gam {
namespace {

DenseLayer dense(std::size_t in, std::size_t out, std::vector<double> w, std::vector<double> b, Activation a) {
  return DenseLayer{in, out, std::move(w), std::move(b), a};
}

MlpModel random_model(std::mt19937_64& rng, std::size_t in, std::vector<std::size_t> hidden, std::size_t out,
                      Activation hidden_act, Activation out_act) {
  return init_model(in, Architecture{std::move(hidden), hidden_act}, out, out_act, rng());
}

void randomize_biases(MlpModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& l : m.layers) {
    for (auto& b : l.bias) b = u(rng);
  }
}

TEST(Forward, IdentityLayer) {
  MlpModel m{3, {dense(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, Activation::kIdentity)}};
  EXPECT_EQ(forward(m, std::vector<double>{1.5, -2, 3}), (std::vector<double>{1.5, -2, 3}));
}

TEST(Forward, SigmoidAtZero) {
  MlpModel m{2, {dense(2, 1, {0, 0}, {0}, Activation::kSigmoid)}};
  EXPECT_EQ(forward(m, std::vector<double>{3, 4})[0], 0.5);
}

TEST(Forward, TwoLayerByHand) {
  // h = relu([1 -1; 2 0.5] x + [0, -1]); y = [3 -2] h + 0.5
  MlpModel m{2,
             {dense(2, 2, {1, -1, 2, 0.5}, {0, -1}, Activation::kRelu),
              dense(2, 1, {3, -2}, {0.5}, Activation::kIdentity)}};
  // x = (2, 1): pre = (1, 3.5) -> h = (1, 3.5) -> y = 3 - 7 + 0.5
  EXPECT_DOUBLE_EQ(forward(m, std::vector<double>{2, 1})[0], -3.5);
  // x = (-1, 1): pre = (-2, -2.5) -> h = 0 -> y = 0.5
  EXPECT_DOUBLE_EQ(forward(m, std::vector<double>{-1, 1})[0], 0.5);
}

TEST(Forward, ShapeMismatch) {
  MlpModel m{2, {dense(2, 1, {0, 0}, {0}, Activation::kSigmoid)}};
  try {
    forward(m, std::vector<double>{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Forward, OutputRanges) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0, 3);
  for (int t = 0; t < 100; ++t) {
    auto soft = random_model(rng, 3, {5}, 4, Activation::kRelu, Activation::kSoftmax);
    auto sig = random_model(rng, 3, {5}, 2, Activation::kRelu, Activation::kSigmoid);
    std::vector<double> x{normal(rng), normal(rng), normal(rng)};
    double total = 0.0;
    for (double p : forward(soft, x)) total += p;
    EXPECT_NEAR(total, 1.0, 1e-9);
    for (double p : forward(sig, x)) {
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
  }
}

TEST(Gradient, LinearModel) {
  MlpModel m{2, {dense(2, 1, {2, 3}, {0}, Activation::kIdentity)}};
  EXPECT_EQ(gradient_wrt_input(m, std::vector<double>{-4, 9}, 0), (std::vector<double>{2, 3}));
}

TEST(Gradient, DeadReluPassesNothing) {
  MlpModel m{1, {dense(1, 1, {1}, {-5}, Activation::kRelu), dense(1, 1, {4}, {0}, Activation::kIdentity)}};
  EXPECT_EQ(gradient_wrt_input(m, std::vector<double>{1}, 0)[0], 0.0);
  EXPECT_EQ(gradient_wrt_input(m, std::vector<double>{6}, 0)[0], 4.0);
}

TEST(Gradient, IndexOutOfRange) {
  MlpModel m{2, {dense(2, 1, {2, 3}, {0}, Activation::kIdentity)}};
  try {
    gradient_wrt_input(m, std::vector<double>{1, 1}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOutOfRange);
  }
}

TEST(Gradient, MatchesFiniteDifferencesAwayFromKinks) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0, 1);
  int checked = 0;
  for (int t = 0; t < 300 && checked < 150; ++t) {
    const Activation out_act = t % 3 == 0 ? Activation::kSoftmax : (t % 3 == 1 ? Activation::kSigmoid : Activation::kIdentity);
    const Activation hid_act = t % 2 == 0 ? Activation::kRelu : Activation::kSigmoid;
    auto m = random_model(rng, 3, {6, 4}, 3, hid_act, out_act);
    randomize_biases(m, rng);
    std::vector<double> x{normal(rng), normal(rng), normal(rng)};
    // Skip inputs within 1e-3 of a ReLU kink.
    const auto trace = forward_trace(m, x);
    bool near_kink = false;
    for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
      if (m.layers[l].activation != Activation::kRelu) continue;
      for (double z : trace.pre[l]) near_kink = near_kink || std::abs(z) < 1e-3;
    }
    if (near_kink) continue;
    ++checked;
    const std::size_t out = static_cast<std::size_t>(t) % 3;
    const auto g = gradient_wrt_input(m, x, out);
    const auto fd = oracle::finite_difference([&](const std::vector<double>& p) { return forward(m, p)[out]; }, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double rel = std::abs(g[i] - fd[i]) / std::max(1e-6, std::max(std::abs(g[i]), std::abs(fd[i])));
      EXPECT_LT(rel, 1e-4) << "case " << t << " input " << i;
    }
  }
  EXPECT_GE(checked, 100);
}

TEST(Validate, RejectsBadShapes) {
  MlpModel unchained{2, {dense(2, 3, std::vector<double>(6, 0), {0, 0, 0}, Activation::kRelu),
                         dense(2, 1, {0, 0}, {0}, Activation::kIdentity)}};
  EXPECT_THROW(unchained.validate(), Error);
  MlpModel inner_softmax{2, {dense(2, 2, std::vector<double>(4, 0), {0, 0}, Activation::kSoftmax),
                             dense(2, 1, {0, 0}, {0}, Activation::kIdentity)}};
  EXPECT_THROW(inner_softmax.validate(), Error);
}

Dataset xor_free_data(std::size_t n, std::uint64_t seed) {
  // Linearly separable: label = x0 + x1 > 1.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Dataset ds;
  ds.feature_names = {"x0", "x1"};
  ds.class_names = {"no", "yes"};
  for (std::size_t i = 0; i < n; ++i) {
    double a = u(rng), b = u(rng);
    ds.features.push_back({a, b});
    ds.labels.push_back(a + b > 1.0 ? 1 : 0);
  }
  return ds;
}

TEST(Train, DeterministicUnderSeed) {
  const auto ds = xor_free_data(300, 1);
  TrainConfig c;
  c.epochs = 5;
  c.seed = 42;
  const auto a = train(ds, Architecture{{4}}, c);
  const auto b = train(ds, Architecture{{4}}, c);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_EQ(a.layers[l].weights, b.layers[l].weights);
    EXPECT_EQ(a.layers[l].bias, b.layers[l].bias);
  }
}

TEST(Train, ConstantLabel) {
  auto ds = xor_free_data(200, 2);
  std::fill(ds.labels.begin(), ds.labels.end(), 1);
  TrainConfig c;
  c.epochs = 20;
  EXPECT_EQ(accuracy(train(ds, Architecture{{4}}, c), ds), 1.0);
}

TEST(Train, LearnsSeparableProblem) {
  const auto ds = xor_free_data(1000, 3);
  TrainConfig c;
  c.epochs = 60;
  EXPECT_GE(accuracy(train(ds, Architecture{{4}}, c), xor_free_data(500, 4)), 0.95);
}

TEST(Train, Errors) {
  Dataset empty;
  empty.feature_names = {"a"};
  empty.class_names = {"x", "y"};
  try {
    train(empty, Architecture{{2}}, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
  auto ragged = xor_free_data(10, 1);
  ragged.features[3].push_back(1.0);
  EXPECT_THROW(train(ragged, Architecture{{2}}, TrainConfig{}), Error);
}

TEST(Persistence, RoundTripIsExact) {
  std::mt19937_64 rng(5);
  auto m = random_model(rng, 4, {7, 3}, 3, Activation::kRelu, Activation::kSoftmax);
  randomize_biases(m, rng);
  const auto path = std::filesystem::temp_directory_path() / "gam_mlp_roundtrip.json";
  save_model(m, path);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    EXPECT_EQ(back.layers[l].weights, m.layers[l].weights);
    EXPECT_EQ(back.layers[l].bias, m.layers[l].bias);
    EXPECT_EQ(back.layers[l].activation, m.layers[l].activation);
  }
  const std::vector<double> x{0.3, -1.2, 2.2, 0.0};
  EXPECT_EQ(forward(back, x), forward(m, x));
}

TEST(Persistence, MalformedFile) {
  const auto bad = nlohmann::json::parse(R"({"input_width": 2, "layers": [
      {"weights": [[1, 2, 3]], "bias": [0], "activation": "relu"}]})");
  try {
    model_from_json(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedModelFile);
  }
  try {
    model_from_json(nlohmann::json::parse(R"({"layers": []})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedModelFile);
  }
}

}  // namespace
}  // namespace gam
