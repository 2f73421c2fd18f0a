#pragma once

// Datasets: the two-group synthetic generators, the bundled Iris data,
// generic CSV ingestion and stratified splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gam/error.hpp"
#include "gam/io.hpp"
#include "gam/iris_data.hpp"
#include "gam/random.hpp"

namespace gam {

struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  /// Generating group per row (0 = feature A predictive, 1 = feature B);
  /// empty for non-synthetic data.
  std::vector<int> groups;

  std::size_t rows() const { return features.size(); }
  std::size_t width() const { return feature_names.size(); }

  void validate() const {
    if (labels.size() != features.size()) fail(ErrorCode::kShapeMismatch, "label and feature row counts differ");
    for (const auto& row : features) {
      if (row.size() != feature_names.size()) fail(ErrorCode::kShapeMismatch, "row width differs from header");
    }
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= class_names.size()) {
        fail(ErrorCode::kShapeMismatch, "label outside class range");
      }
    }
  }
};

namespace detail {

inline Dataset synth_group(std::size_t n, std::uint64_t seed, bool a_predictive) {
  if (n < 2 || n % 2 != 0) fail(ErrorCode::kOddCount, "group size must be even and at least 2");
  Dataset ds;
  ds.feature_names = {"A", "B"};
  ds.class_names = {"class 1", "class 2"};
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    double predictive, noise;
    if (a_predictive) {
      predictive = label == 0 ? uniform(rng, 0.0, 1.0) : uniform(rng, 1.0, 2.0);
      noise = uniform(rng, 0.0, 2.0);
      ds.features.push_back({predictive, noise});
    } else {
      predictive = label == 0 ? uniform(rng, 3.0, 4.0) : uniform(rng, 4.0, 5.0);
      noise = uniform(rng, 3.0, 5.0);
      ds.features.push_back({noise, predictive});
    }
    ds.labels.push_back(label);
    ds.groups.push_back(a_predictive ? 0 : 1);
  }
  return ds;
}

}  // namespace detail

/// Feature A predictive: class 1 A~U[0,1], class 2 A~U[1,2]; B~U[0,2].
inline Dataset synth_group_a(std::size_t n, std::uint64_t seed) { return detail::synth_group(n, seed, true); }

/// Feature B predictive: class 1 B~U[3,4], class 2 B~U[4,5]; A~U[3,5].
inline Dataset synth_group_b(std::size_t n, std::uint64_t seed) { return detail::synth_group(n, seed, false); }

/// round(n * fraction_a) rows from group A, the rest from group B, shuffled.
inline Dataset synth_mixture(std::size_t n, double fraction_a, std::uint64_t seed) {
  if (!(fraction_a > 0.0 && fraction_a < 1.0)) fail(ErrorCode::kDegenerateFraction, "fraction must lie in (0, 1)");
  const auto n_a = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction_a));
  if (n_a == 0 || n_a >= n) fail(ErrorCode::kDegenerateFraction, "fraction leaves one group empty");
  auto a = synth_group_a(n_a, derive_seed(seed, 1));
  auto b = synth_group_b(n - n_a, derive_seed(seed, 2));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 3));
  shuffle(order, rng);
  Dataset ds;
  ds.feature_names = a.feature_names;
  ds.class_names = a.class_names;
  for (auto idx : order) {
    const Dataset& src = idx < n_a ? a : b;
    const std::size_t row = idx < n_a ? idx : idx - n_a;
    ds.features.push_back(src.features[row]);
    ds.labels.push_back(src.labels[row]);
    ds.groups.push_back(src.groups[row]);
  }
  return ds;
}

inline Dataset load_iris() {
  Dataset ds;
  ds.feature_names = {"sepal length", "sepal width", "petal length", "petal width"};
  ds.class_names = {"setosa", "versicolor", "virginica"};
  for (const auto& row : detail::kIrisRows) {
    ds.features.emplace_back(row.features.begin(), row.features.end());
    ds.labels.push_back(row.label);
  }
  return ds;
}

/// Parses a header + rows CSV. Numeric columns pass through; with one_hot,
/// text columns expand to "col=value" indicators in first-appearance order.
/// Integer labels are used as class indices, other labels are numbered by
/// first appearance.
inline Dataset parse_dataset_csv(std::string_view text, const std::string& label_column, bool one_hot) {
  std::vector<std::vector<std::string>> rows;
  {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (io::trim(line).empty()) continue;
      rows.push_back(io::split_csv_line(line));
    }
  }
  if (rows.empty()) fail(ErrorCode::kMalformedCsv, "missing header row");
  const auto header = rows.front();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      fail(ErrorCode::kMalformedCsv, "row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                                         " fields, expected " + std::to_string(header.size()));
    }
  }
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) fail(ErrorCode::kUnknownLabelColumn, "no column named '" + label_column + "'");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t n = rows.size() - 1;

  Dataset ds;
  ds.features.assign(n, {});
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    std::vector<double> values(n);
    bool numeric = true;
    for (std::size_t r = 0; r < n && numeric; ++r) numeric = io::parse_double(rows[r + 1][c], values[r]);
    if (numeric) {
      ds.feature_names.push_back(header[c]);
      for (std::size_t r = 0; r < n; ++r) ds.features[r].push_back(values[r]);
      continue;
    }
    if (!one_hot) fail(ErrorCode::kNonNumericWithoutOneHot, "column '" + header[c] + "' is not numeric");
    std::vector<std::string> levels;
    for (std::size_t r = 0; r < n; ++r) {
      if (std::find(levels.begin(), levels.end(), rows[r + 1][c]) == levels.end()) levels.push_back(rows[r + 1][c]);
    }
    for (const auto& level : levels) {
      ds.feature_names.push_back(header[c] + "=" + level);
      for (std::size_t r = 0; r < n; ++r) ds.features[r].push_back(rows[r + 1][c] == level ? 1.0 : 0.0);
    }
  }

  bool integer_labels = true;
  std::vector<long long> int_labels(n);
  for (std::size_t r = 0; r < n && integer_labels; ++r) {
    const auto& s = rows[r + 1][label_col];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), int_labels[r]);
    integer_labels = ec == std::errc() && ptr == s.data() + s.size() && int_labels[r] >= 0;
  }
  if (integer_labels && n > 0) {
    const auto max_label = *std::max_element(int_labels.begin(), int_labels.end());
    for (long long c = 0; c <= max_label; ++c) ds.class_names.push_back(std::to_string(c));
    for (auto l : int_labels) ds.labels.push_back(static_cast<int>(l));
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      const auto& s = rows[r + 1][label_col];
      auto it = std::find(ds.class_names.begin(), ds.class_names.end(), s);
      if (it == ds.class_names.end()) {
        ds.class_names.push_back(s);
        it = ds.class_names.end() - 1;
      }
      ds.labels.push_back(static_cast<int>(it - ds.class_names.begin()));
    }
  }
  return ds;
}

inline Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, bool one_hot) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_csv(buffer.str(), label_column, one_hot);
}

/// Features followed by an integer label column.
inline std::string format_dataset_csv(const Dataset& ds, const std::string& label_column = "label") {
  std::string out;
  for (const auto& name : ds.feature_names) out += name + ",";
  out += label_column + "\n";
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (double v : ds.features[r]) out += io::format_double(v) + ",";
    out += std::to_string(ds.labels[r]) + "\n";
  }
  return out;
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.class_names = ds.class_names;
  for (auto r : rows) {
    out.features.push_back(ds.features[r]);
    out.labels.push_back(ds.labels[r]);
    if (!ds.groups.empty()) out.groups.push_back(ds.groups[r]);
  }
  return out;
}

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Stratified split: each class contributes round(count * test_fraction)
/// rows to the test side. Row order within each side follows the source.
inline Split train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "test fraction must lie in (0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < ds.rows(); ++r) by_class[ds.labels[r]].push_back(r);
  Rng rng(seed);
  std::vector<bool> in_test(ds.rows(), false);
  for (auto& [label, rows] : by_class) {
    shuffle(rows, rng);
    const auto take = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
    for (std::size_t i = 0; i < take; ++i) in_test[rows[i]] = true;
  }
  Split split;
  for (std::size_t r = 0; r < ds.rows(); ++r) (in_test[r] ? split.test_rows : split.train_rows).push_back(r);
  split.train = subset(ds, split.train_rows);
  split.test = subset(ds, split.test_rows);
  return split;
}

}  // namespace gam
