#include "rlnet/binarizer.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace rlnet;

namespace {

Matrix column_vector(std::initializer_list<double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

// Quantile oracle written independently of the library: order statistic at h = (n-1)p.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

BinarizationScheme gesture_like_scheme() {
  return BinarizationScheme({"range", "doppler", "azimuth"}, {"m", "m/s", "deg"},
                            {{0.3, 0.45}, {-0.5, 0.0, 0.25}, {-10.0, 12.5}});
}

}  // namespace

TEST_CASE("fit_scheme: median boundary for four values") {
  SchemeOptions o;
  o.thresholds_per_feature = 1;
  const auto s = fit_scheme(column_vector({4, 1, 3, 2}), o);
  REQUIRE(s.thresholds(0).size() == 1);
  CHECK(s.thresholds(0)[0] == 2.5);
}

TEST_CASE("fit_scheme: quartiles of [0, 10]") {
  SchemeOptions o;
  o.thresholds_per_feature = 3;
  const auto s = fit_scheme(column_vector({0, 10}), o);
  CHECK(s.thresholds(0) == std::vector<double>{2.5, 5.0, 7.5});
}

TEST_CASE("fit_scheme: constant feature is rejected with its index") {
  Matrix m(4, 2);
  m << 1, 5, 2, 5, 3, 5, 4, 5;
  try {
    fit_scheme(m, SchemeOptions{});
    FAIL("expected ConstantFeatureError");
  } catch (const ConstantFeatureError& e) {
    CHECK(e.feature() == 1);
  }
}

TEST_CASE("fit_scheme: non-finite input and too few rows") {
  CHECK_THROWS_AS(fit_scheme(column_vector({1, std::nan(""), 3}), SchemeOptions{}), DataError);
  CHECK_THROWS_AS(fit_scheme(column_vector({1}), SchemeOptions{}), DataError);
}

TEST_CASE("fit_scheme: thresholds match the quantile oracle and are strictly increasing") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(37);
    for (auto& x : v) x = n(rng);
    Matrix m(37, 1);
    for (int i = 0; i < 37; ++i) m(i, 0) = v[static_cast<std::size_t>(i)];
    SchemeOptions o;
    o.thresholds_per_feature = 8;
    o.significant_digits = 0;
    const auto s = fit_scheme(m, o);
    REQUIRE(s.thresholds(0).size() == 8);
    for (std::size_t k = 1; k <= 8; ++k) {
      CHECK(s.thresholds(0)[k - 1] == doctest::Approx(oracle_quantile(v, static_cast<double>(k) / 9.0)).epsilon(1e-12));
    }
    CHECK(std::adjacent_find(s.thresholds(0).begin(), s.thresholds(0).end(), std::greater_equal<>()) ==
          s.thresholds(0).end());
  }
}

TEST_CASE("fit_scheme: duplicate quantiles are merged") {
  SchemeOptions o;
  o.thresholds_per_feature = 8;
  const auto s = fit_scheme(column_vector({0, 0, 0, 0, 0, 0, 0, 0, 1}), o);
  CHECK(s.thresholds(0).size() < 8);
  CHECK(std::adjacent_find(s.thresholds(0).begin(), s.thresholds(0).end()) == s.thresholds(0).end());
  CHECK(s.width() == s.thresholds(0).size());
}

TEST_CASE("binarize: inclusive boundary and per-threshold columns") {
  const BinarizationScheme one({"f"}, {""}, {{0.5}});
  CHECK(binarize(column_vector({0.5}), one)(0, 0) == 1.0);
  CHECK(binarize(column_vector({0.7}), one)(0, 0) == 0.0);

  const BinarizationScheme three({"f"}, {""}, {{1, 2, 3}});
  const Matrix X = binarize(column_vector({1.5}), three);
  CHECK(X(0, 0) == 0.0);
  CHECK(X(0, 1) == 1.0);
  CHECK(X(0, 2) == 1.0);
}

TEST_CASE("binarize: width mismatch is a shape error") {
  CHECK_THROWS_AS(binarize(Matrix::Zero(2, 2), gesture_like_scheme()), ShapeError);
}

TEST_CASE("binarize: entries are 0/1 and monotone within a feature group; refitting is bit-identical") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  Matrix F(500, 3);
  for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = u(rng);
  const auto s = fit_scheme(F, SchemeOptions{});
  CHECK(s.width() == 24);
  const Matrix X = binarize(F, s);
  CHECK(X == binarize(F, s));
  for (Eigen::Index m = 0; m < X.rows(); ++m) {
    for (std::size_t c = 0; c + 1 < s.width(); ++c) {
      const auto x = X(m, static_cast<Eigen::Index>(c));
      CHECK((x == 0.0 || x == 1.0));
      if (s.column(c).feature == s.column(c + 1).feature && x == 1.0) {
        CHECK(X(m, static_cast<Eigen::Index>(c + 1)) == 1.0);
      }
    }
  }
}

TEST_CASE("render_condition: polarity and units") {
  const auto s = gesture_like_scheme();
  CHECK(render_condition(s, 0, Polarity::Positive) == "range ≤ 0.3 m");
  CHECK(render_condition(s, 0, Polarity::Negative) == "range > 0.3 m");
  CHECK(render_condition(s, 5, Polarity::Negative) == "azimuth > -10 deg");
  CHECK(render_condition(s, 0, Polarity::Positive, {"r", "v", "az"}) == "r ≤ 0.3 m");
  CHECK_THROWS_AS(render_condition(s, s.width(), Polarity::Positive), ShapeError);
}

TEST_CASE("render/parse round-trip agrees with the binary value on random samples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  Matrix F(2000, 3);
  for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = u(rng);
  const auto fitted = fit_scheme(F, SchemeOptions{});
  const BinarizationScheme s({"range", "doppler", "azimuth"}, {"m", "m/s", "deg"}, fitted.all_thresholds());
  const Matrix X = binarize(F, s);
  std::size_t failures = 0;
  for (Eigen::Index m = 0; m < F.rows(); ++m) {
    for (std::size_t c = 0; c < s.width(); ++c) {
      for (Polarity p : {Polarity::Positive, Polarity::Negative}) {
        const auto cond = parse_condition(s, render_condition(s, c, p));
        if (!cond) {
          ++failures;
          continue;
        }
        const bool bit = X(m, static_cast<Eigen::Index>(c)) == 1.0;
        const bool expect = p == Polarity::Positive ? bit : !bit;
        if (cond->holds(F(m, static_cast<Eigen::Index>(cond->feature_index))) != expect) ++failures;
      }
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("parse_condition rejects unknown features and garbage") {
  const auto s = gesture_like_scheme();
  CHECK_FALSE(parse_condition(s, "speed ≤ 3 m").has_value());
  CHECK_FALSE(parse_condition(s, "range = 3").has_value());
  CHECK_FALSE(parse_condition(s, "range ≤ abc m").has_value());
}
