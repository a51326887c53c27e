#pragma once

#include "rlnet/common.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rlnet {

enum class Operator { Leq, Gt };

enum class Polarity { Positive, Negative };

/// A single threshold comparison on a named continuous feature.
struct Condition {
  std::size_t feature_index = 0;
  Operator op = Operator::Leq;
  double threshold = 0.0;

  bool holds(double value) const { return op == Operator::Leq ? value <= threshold : value > threshold; }
  friend bool operator==(const Condition&, const Condition&) = default;
};

/// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

/// One binary input column: 1 iff feature <= threshold.
struct Column {
  std::size_t feature = 0;
  double threshold = 0.0;
  friend bool operator==(const Column&, const Column&) = default;
};

/// Frozen per-feature threshold table. Column order is feature-major and, within a
/// feature, ascending in threshold.
class BinarizationScheme {
 public:
  BinarizationScheme() = default;
  BinarizationScheme(std::vector<std::string> feature_names, std::vector<std::string> units,
                     std::vector<std::vector<double>> thresholds);

  std::size_t num_features() const { return thresholds_.size(); }
  std::size_t width() const { return columns_.size(); }
  const Column& column(std::size_t c) const;
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<double>& thresholds(std::size_t feature) const { return thresholds_.at(feature); }
  const std::vector<std::vector<double>>& all_thresholds() const { return thresholds_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<std::string>& units() const { return units_; }

  /// Binary encoding of one continuous sample.
  std::vector<std::uint8_t> encode(std::span<const double> values) const;

  friend bool operator==(const BinarizationScheme&, const BinarizationScheme&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::string> units_;
  std::vector<std::vector<double>> thresholds_;
  std::vector<Column> columns_;
};

struct BinarizedDataset {
  Matrix X;  // [M x D], entries exactly 0.0 or 1.0
  Labels y;
  std::vector<std::string> class_names;
  BinarizationScheme scheme;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t num_classes() const { return class_names.size(); }
  BinarizedDataset subset(std::span<const std::size_t> rows) const;
};

struct SchemeOptions {
  std::size_t thresholds_per_feature = 8;
  // Thresholds are rounded to this many significant digits before deduplication so that
  // rendered rules print exactly the stored comparison. 0 keeps full precision.
  int significant_digits = 4;
};

/// Linear-interpolation quantile of an ascending-sorted sample, level in [0, 1].
double interpolated_quantile(std::span<const double> sorted, double level);

/// Fits quantile thresholds at levels k/(Q+1), k = 1..Q, per feature.
/// Throws ConstantFeatureError for a feature with a single distinct value and DataError
/// for non-finite input or fewer than two rows.
BinarizationScheme fit_scheme(const Matrix& features, const SchemeOptions& options,
                              std::vector<std::string> feature_names = {},
                              std::vector<std::string> units = {});

/// X[m, column(f, t)] = 1 iff features[m, f] <= t.
Matrix binarize(const Matrix& features, const BinarizationScheme& scheme);

/// Condition that a literal on `column` expresses: positive polarity keeps "<=",
/// negative polarity is the negation ">".
Condition column_condition(const BinarizationScheme& scheme, std::size_t column, Polarity polarity);

std::string render_condition(const BinarizationScheme& scheme, const Condition& condition);
std::string render_condition(const BinarizationScheme& scheme, std::size_t column, Polarity polarity);
std::string render_condition(const BinarizationScheme& scheme, std::size_t column, Polarity polarity,
                             const std::vector<std::string>& feature_names);

/// Inverse of render_condition for the scheme's own feature names and units.
std::optional<Condition> parse_condition(const BinarizationScheme& scheme, std::string_view text);

}  // namespace rlnet
