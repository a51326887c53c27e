#pragma once

#include "rlnet/model.hpp"
#include "rlnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace rlnet::testing {

struct GradCheckResult {
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
};

/// Relative error with a small absolute floor so that exactly-zero gradients compare sanely.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

/// Random smooth-mode instance with frozen gate noise. Loss is CE + lambda1 * L_sparse + lambda2 * |W_out|^2.
struct SmoothProblem {
  RuleNetParams params;
  Matrix X;
  Labels y;
  Matrix noise;
  ModelOptions options;
  double lambda1 = 0.025;
  double lambda2 = 0.01;

  SmoothProblem(std::size_t R, std::size_t D, std::size_t C, std::size_t batch, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    params = RuleNetParams::initialize(R, D, C, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // Spread gates across the unclamped region so every coordinate carries gradient.
    for (Eigen::Index i = 0; i < params.loc.size(); ++i) params.loc(i) = 1.5 * u(rng);
    for (Eigen::Index i = 0; i < params.w_out.size(); ++i) params.w_out(i) = u(rng);
    for (Eigen::Index i = 0; i < params.bn_scale.size(); ++i) {
      params.bn_scale(i) = 1.0 + 0.3 * u(rng);
      params.bn_shift(i) = 0.3 * u(rng);
    }
    X.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(D));
    std::bernoulli_distribution bit(0.5);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = bit(rng) ? 1.0 : 0.0;
    std::uniform_int_distribution<int> cls(0, static_cast<int>(C) - 1);
    for (std::size_t b = 0; b < batch; ++b) y.push_back(cls(rng));
    noise = sample_gate_noise(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(D), rng);
    options.hard_gates = false;
  }

  double loss(const RuleNetParams& p) const {
    const ForwardTrace t = forward(p, X, Mode::Smooth, options, &noise);
    return composite_loss(t, y, p, lambda1, lambda2, options.gate).total;
  }

  Gradients gradients() const {
    const ForwardTrace t = forward(params, X, Mode::Smooth, options, &noise);
    return composite_gradients(params, X, t, y, lambda1, lambda2, options);
  }
};

/// Central differences at `count` random coordinates drawn over all trainable groups.
inline GradCheckResult check_gradients(const SmoothProblem& problem, std::size_t count, double step,
                                       std::uint64_t seed) {
  const Gradients g = problem.gradients();
  struct Slot {
    double* (*param)(RuleNetParams&, std::size_t);
    double (*grad)(const Gradients&, std::size_t);
    std::size_t size;
  };
  const auto& p0 = problem.params;
  const std::vector<Slot> slots{
      {[](RuleNetParams& p, std::size_t i) { return &p.ws.data()[i]; },
       [](const Gradients& gr, std::size_t i) { return gr.ws.data()[i]; }, static_cast<std::size_t>(p0.ws.size())},
      {[](RuleNetParams& p, std::size_t i) { return &p.loc.data()[i]; },
       [](const Gradients& gr, std::size_t i) { return gr.loc.data()[i]; }, static_cast<std::size_t>(p0.loc.size())},
      {[](RuleNetParams& p, std::size_t i) { return &p.bn_scale.data()[i]; },
       [](const Gradients& gr, std::size_t i) { return gr.bn_scale.data()[i]; },
       static_cast<std::size_t>(p0.bn_scale.size())},
      {[](RuleNetParams& p, std::size_t i) { return &p.bn_shift.data()[i]; },
       [](const Gradients& gr, std::size_t i) { return gr.bn_shift.data()[i]; },
       static_cast<std::size_t>(p0.bn_shift.size())},
      {[](RuleNetParams& p, std::size_t i) { return &p.w_out.data()[i]; },
       [](const Gradients& gr, std::size_t i) { return gr.w_out.data()[i]; },
       static_cast<std::size_t>(p0.w_out.size())},
  };
  std::size_t total = 0;
  for (const auto& s : slots) total += s.size;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  GradCheckResult result;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t flat = pick(rng);
    std::size_t s = 0;
    while (flat >= slots[s].size) flat -= slots[s++].size;
    RuleNetParams plus = p0, minus = p0;
    *slots[s].param(plus, flat) += step;
    *slots[s].param(minus, flat) -= step;
    const double numeric = (problem.loss(plus) - problem.loss(minus)) / (2.0 * step);
    const double analytic = slots[s].grad(g, flat);
    result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic, numeric));
    ++result.coordinates;
  }
  return result;
}

}  // namespace rlnet::testing
