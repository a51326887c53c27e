#include "rlnet/binarizer.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace rlnet {

namespace {

constexpr std::string_view kLeq = "\xE2\x89\xA4";  // U+2264

double round_significant(double value, int digits) {
  if (digits <= 0 || value == 0.0) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("format_number: conversion failed");
  return std::string(buf, end);
}

BinarizationScheme::BinarizationScheme(std::vector<std::string> feature_names, std::vector<std::string> units,
                                       std::vector<std::vector<double>> thresholds)
    : names_(std::move(feature_names)), units_(std::move(units)), thresholds_(std::move(thresholds)) {
  const std::size_t F = thresholds_.size();
  if (names_.empty()) {
    for (std::size_t f = 0; f < F; ++f) names_.push_back("x" + std::to_string(f));
  }
  if (units_.empty()) units_.assign(F, "");
  if (names_.size() != F || units_.size() != F) {
    throw ShapeError("BinarizationScheme: names/units do not match feature count");
  }
  for (std::size_t f = 0; f < F; ++f) {
    const auto& t = thresholds_[f];
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (!std::isfinite(t[k])) throw DataError("BinarizationScheme: non-finite threshold");
      if (k > 0 && !(t[k] > t[k - 1])) {
        throw DataError("BinarizationScheme: thresholds of feature " + std::to_string(f) +
                        " are not strictly increasing");
      }
      columns_.push_back({f, t[k]});
    }
  }
}

const Column& BinarizationScheme::column(std::size_t c) const {
  if (c >= columns_.size()) {
    throw ShapeError("column " + std::to_string(c) + " out of range (width " + std::to_string(width()) + ")");
  }
  return columns_[c];
}

std::vector<std::uint8_t> BinarizationScheme::encode(std::span<const double> values) const {
  if (values.size() != num_features()) {
    throw ShapeError("encode: expected " + std::to_string(num_features()) + " features, got " +
                     std::to_string(values.size()));
  }
  std::vector<std::uint8_t> out(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    out[c] = values[columns_[c].feature] <= columns_[c].threshold ? 1 : 0;
  }
  return out;
}

BinarizedDataset BinarizedDataset::subset(std::span<const std::size_t> rows) const {
  BinarizedDataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    out.y.push_back(y.at(rows[i]));
  }
  out.class_names = class_names;
  out.scheme = scheme;
  return out;
}

double interpolated_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BinarizationScheme fit_scheme(const Matrix& features, const SchemeOptions& options,
                              std::vector<std::string> feature_names, std::vector<std::string> units) {
  const auto M = static_cast<std::size_t>(features.rows());
  const auto F = static_cast<std::size_t>(features.cols());
  if (M < 2) throw DataError("fit_scheme: need at least 2 samples");
  if (options.thresholds_per_feature == 0) throw ConfigError("thresholds_per_feature must be positive");
  if (!features.allFinite()) throw DataError("fit_scheme: non-finite feature value");

  const std::size_t Q = options.thresholds_per_feature;
  std::vector<std::vector<double>> thresholds(F);
  std::vector<double> column(M);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t m = 0; m < M; ++m) column[m] = features(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f));
    std::sort(column.begin(), column.end());
    if (column.front() == column.back()) {
      throw ConstantFeatureError(f, "fit_scheme: feature " + std::to_string(f) + " is constant");
    }
    auto& t = thresholds[f];
    for (std::size_t k = 1; k <= Q; ++k) {
      const double level = static_cast<double>(k) / static_cast<double>(Q + 1);
      t.push_back(round_significant(interpolated_quantile(column, level), options.significant_digits));
    }
    // Quantiles are non-decreasing; rounding keeps that, so adjacent dedupe suffices.
    t.erase(std::unique(t.begin(), t.end()), t.end());
  }
  return BinarizationScheme(std::move(feature_names), std::move(units), std::move(thresholds));
}

Matrix binarize(const Matrix& features, const BinarizationScheme& scheme) {
  if (static_cast<std::size_t>(features.cols()) != scheme.num_features()) {
    throw ShapeError("binarize: feature matrix has " + std::to_string(features.cols()) + " columns, scheme expects " +
                     std::to_string(scheme.num_features()));
  }
  Matrix X(features.rows(), static_cast<Eigen::Index>(scheme.width()));
  for (Eigen::Index m = 0; m < features.rows(); ++m) {
    for (std::size_t c = 0; c < scheme.width(); ++c) {
      const auto& col = scheme.column(c);
      X(m, static_cast<Eigen::Index>(c)) =
          features(m, static_cast<Eigen::Index>(col.feature)) <= col.threshold ? 1.0 : 0.0;
    }
  }
  return X;
}

Condition column_condition(const BinarizationScheme& scheme, std::size_t column, Polarity polarity) {
  const auto& col = scheme.column(column);
  return {col.feature, polarity == Polarity::Positive ? Operator::Leq : Operator::Gt, col.threshold};
}

std::string render_condition(const BinarizationScheme& scheme, const Condition& condition) {
  if (condition.feature_index >= scheme.num_features()) throw ShapeError("render_condition: feature out of range");
  std::string out = scheme.feature_names()[condition.feature_index];
  out += ' ';
  out += condition.op == Operator::Leq ? kLeq : std::string_view(">");
  out += ' ';
  out += format_number(condition.threshold);
  const auto& unit = scheme.units()[condition.feature_index];
  if (!unit.empty()) {
    out += ' ';
    out += unit;
  }
  return out;
}

std::string render_condition(const BinarizationScheme& scheme, std::size_t column, Polarity polarity) {
  return render_condition(scheme, column_condition(scheme, column, polarity));
}

std::string render_condition(const BinarizationScheme& scheme, std::size_t column, Polarity polarity,
                             const std::vector<std::string>& feature_names) {
  const Condition c = column_condition(scheme, column, polarity);
  if (feature_names.size() != scheme.num_features()) throw ShapeError("render_condition: feature name count mismatch");
  BinarizationScheme renamed(feature_names, scheme.units(), scheme.all_thresholds());
  return render_condition(renamed, c);
}

std::optional<Condition> parse_condition(const BinarizationScheme& scheme, std::string_view text) {
  text = trim(text);
  std::size_t op_pos = text.find(kLeq);
  std::size_t op_len = kLeq.size();
  Operator op = Operator::Leq;
  if (op_pos == std::string_view::npos) {
    op_pos = text.find('>');
    op_len = 1;
    op = Operator::Gt;
  }
  if (op_pos == std::string_view::npos) return std::nullopt;
  const std::string_view name = trim(text.substr(0, op_pos));
  std::string_view rest = trim(text.substr(op_pos + op_len));

  const auto& names = scheme.feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  const auto f = static_cast<std::size_t>(it - names.begin());

  double value = 0.0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
  if (ec != std::errc{}) return std::nullopt;
  const std::string_view unit = trim(rest.substr(static_cast<std::size_t>(ptr - rest.data())));
  if (unit != scheme.units()[f]) return std::nullopt;
  return Condition{f, op, value};
}

}  // namespace rlnet
