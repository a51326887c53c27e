#pragma once

#include "rlnet/common.hpp"

#include <random>
#include <span>
#include <vector>

namespace rlnet {

/// Stretch/temperature of the hard-concrete gate distribution.
struct GateParams {
  double beta = 2.0 / 3.0;
  double gamma = -0.1;
  double zeta = 1.1;

  void validate() const;
};

/// Smallest admissible gate noise; u must lie in [eps, 1 - eps].
inline constexpr double kGateNoiseFloor = 1e-6;
/// A rule fires when its pre-activation reaches this value (exact for binary inputs).
inline constexpr double kConjunctionThreshold = 1.0 - 1e-6;
/// Gate value at or above which a literal is part of the extracted rule.
inline constexpr double kGateOpenThreshold = 0.5;
/// Gated weights below this magnitude count as excluded.
inline constexpr double kWeightFloor = 1e-3;

/// What the hard forward indicator thresholds.
enum class ActivationSource {
  /// 1[y >= 1 - 1e-6] on the raw pre-activation (the exact conjunction test), and with
  /// batch norm additionally 1[BN(y) >= 0].
  Conjunction,
  /// 1[BN(y) >= 0] on the batch-normalized pre-activation.
  Normalized,
};

struct ModelOptions {
  bool batch_norm = true;
  ActivationSource activation = ActivationSource::Conjunction;
  /// Train and Eval forwards use the thresholded gates 1[z >= 0.5]; gradients still flow
  /// through the hard-concrete sample.
  bool hard_gates = true;
  double ste_slope = 10.0;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  GateParams gate;
};

/// All trainable state of the rule network.
struct RuleNetParams {
  Matrix ws;   // [R x D] sign/magnitude carrier
  Matrix loc;  // [R x D] gate logits
  Vector bn_scale, bn_shift, bn_mean, bn_var;  // [R]
  Matrix w_out;  // [(R + 1) x C], last row is the default rule

  std::size_t rules() const { return static_cast<std::size_t>(ws.rows()); }
  std::size_t inputs() const { return static_cast<std::size_t>(ws.cols()); }
  std::size_t classes() const { return static_cast<std::size_t>(w_out.cols()); }

  /// Throws ShapeError / DivergenceError when shapes disagree or values are invalid.
  void validate() const;

  /// ws ~ U[-0.3, 0.3], loc ~ U[-1, 0], w_out ~ U[-0.1, 0.1], identity batch norm.
  static RuleNetParams initialize(std::size_t R, std::size_t D, std::size_t C, std::mt19937_64& rng);

  friend bool operator==(const RuleNetParams&, const RuleNetParams&) = default;
};

enum class Mode {
  /// Sampled gates, batch statistics, hard indicator forward with surrogate backward.
  Train,
  /// As Train but the surrogate sigmoid is also used in the forward pass, making the
  /// whole computation differentiable (used for finite-difference checks).
  Smooth,
  /// Deterministic gates, running batch-norm statistics, hard indicator.
  Eval,
  /// Thresholded gates, ternary weights, no batch norm: the extracted rule semantics.
  Discrete,
};

struct ForwardTrace {
  Mode mode = Mode::Eval;
  Matrix z;        // [R x D] gate values
  Matrix dz_dloc;  // [R x D] (Train/Smooth only)
  Matrix weights;  // [R x D] effective weights
  Matrix y;        // [B x R] pre-activations
  Matrix y_hat;    // [B x R] normalized, before scale/shift
  Vector batch_mean, batch_var, inv_std;  // [R]
  Matrix y_bn;     // [B x R]
  Matrix b;        // [B x R] rule activations
  Matrix db;       // [B x R] surrogate derivative of b w.r.t. y_bn
  Matrix h;        // [B x (R + 1)] hierarchy selection
  Matrix logits;   // [B x C]
  Matrix probs;    // [B x C]

  std::size_t batch() const { return static_cast<std::size_t>(y.rows()); }
  /// argmax of probs per sample (first maximum on ties).
  std::vector<int> predictions() const;
};

struct Gradients {
  Matrix ws, loc;
  Vector bn_scale, bn_shift;
  Matrix w_out;

  static Gradients zeros_like(const RuleNetParams& p);
};

// --- gate -----------------------------------------------------------------

/// z = clamp(sigmoid((ln u - ln(1-u) + loc) / beta) * (zeta - gamma) + gamma, 0, 1).
/// Optionally returns dz/dloc (zero where the clamp is active).
Matrix gate_sample(const Matrix& loc, const GateParams& gate, const Matrix& u, Matrix* dz_dloc = nullptr);
double gate_sample(double loc, const GateParams& gate, double u);

/// z = clamp(sigmoid(loc) * (zeta - gamma) + gamma, 0, 1).
Matrix gate_eval(const Matrix& loc, const GateParams& gate);
double gate_eval(double loc, const GateParams& gate);

/// Uniform noise in [eps, 1 - eps] with the shape of `like`.
Matrix sample_gate_noise(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Ternary weights of the discrete network: sign(ws) where the gate is open and the
/// gated weight is above the noise floor, 0 elsewhere.
Matrix ternary_weights(const RuleNetParams& params, const GateParams& gate);

// --- layers ---------------------------------------------------------------

/// y[b, r] = sum_i w[r,i] x[b,i] - sum_{i: w[r,i] > 0} w[r,i] + 1.
Matrix rule_preactivation(const Matrix& weights, const Matrix& X);

struct BatchNormOutput {
  Matrix out;
  Matrix normalized;
  Vector mean, var, inv_std;
};

/// Train mode normalizes by batch statistics (requires batch >= 2); eval mode by the
/// running statistics. Running statistics are not touched here; see update_running_stats.
BatchNormOutput batchnorm(const Matrix& y, const RuleNetParams& params, bool train, double eps);

/// running = (1 - momentum) * running + momentum * batch (unbiased batch variance).
void update_running_stats(RuleNetParams& params, const ForwardTrace& trace, double momentum);

struct Activation {
  Matrix b;
  Matrix grad;  // surrogate derivative k * s * (1 - s), s = sigmoid(k (y - tau))
};

/// Hard indicator 1[y >= tau] (or its sigmoid surrogate when `smooth`), plus the surrogate
/// derivative evaluated at the same points.
Activation binarize_activation(const Matrix& y, double tau, double slope, bool smooth = false);

/// h_k = b_k prod_{j<k} (1 - b_j); h_R = prod_j (1 - b_j).
std::vector<double> hierarchy_forward(std::span<const double> b);
Matrix hierarchy_forward(const Matrix& b);
/// dL/db from dL/dh, O(R) per sample.
Matrix hierarchy_backward(const Matrix& b, const Matrix& dh);

struct OutputResult {
  Matrix logits;
  Matrix probs;
};
OutputResult output_forward(const Matrix& h, const Matrix& w_out);

// --- network --------------------------------------------------------------

/// Runs the full network on a batch X [B x D]. Train and Smooth modes require `noise`
/// (uniform gate noise of shape [R x D]) and a batch of at least 2 when batch norm is on.
ForwardTrace forward(const RuleNetParams& params, const Matrix& X, Mode mode, const ModelOptions& options,
                     const Matrix* noise = nullptr);

/// Exact gradients of the relaxed computation given dL/dlogits [B x C]. Train mode uses the
/// surrogate derivative at the hard activations (straight-through).
Gradients backward(const RuleNetParams& params, const Matrix& X, const ForwardTrace& trace, const Matrix& dlogits,
                   const ModelOptions& options);

/// Rules whose Eval-mode activation is 1 on at least one row of X, ascending. The others are
/// silent: they never fire in the relaxed network, while their discrete counterpart may (an
/// empty conjunction is always true).
std::vector<std::size_t> firing_rules(const RuleNetParams& params, const Matrix& X, const ModelOptions& options);

/// Copy of params keeping only the listed rule neurons (ascending), with the default row.
RuleNetParams keep_rules(const RuleNetParams& params, std::span<const std::size_t> keep);

/// Removes silent rules so the discrete network agrees with the relaxed one on X.
RuleNetParams compact(const RuleNetParams& params, const Matrix& X, const ModelOptions& options);

/// Index of the rule that fired per sample in discrete mode (R for the default rule).
std::vector<std::size_t> fired_rules(const ForwardTrace& trace);

}  // namespace rlnet
