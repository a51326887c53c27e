#include "rlnet/model.hpp"

#include <algorithm>

namespace rlnet {

namespace {

void require_shape(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

// Input to the hard indicator and its threshold.
bool hard_uses_normalized(const ModelOptions& o) {
  return o.batch_norm && o.activation == ActivationSource::Normalized;
}

}  // namespace

void GateParams::validate() const {
  if (!(gamma < 0.0 && zeta > 1.0)) throw ConfigError("gate stretch requires gamma < 0 < 1 < zeta");
  if (!(beta > 0.0)) throw ConfigError("gate temperature beta must be positive");
}

void RuleNetParams::validate() const {
  const auto R = ws.rows();
  const auto D = ws.cols();
  require_shape(loc.rows() == R && loc.cols() == D, "RuleNetParams: loc shape mismatch");
  require_shape(bn_scale.size() == R && bn_shift.size() == R && bn_mean.size() == R && bn_var.size() == R,
                "RuleNetParams: batch-norm vector size mismatch");
  require_shape(w_out.rows() == R + 1 && w_out.cols() >= 1, "RuleNetParams: w_out shape mismatch");
  if (!ws.allFinite() || !loc.allFinite() || !bn_scale.allFinite() || !bn_shift.allFinite() ||
      !bn_mean.allFinite() || !bn_var.allFinite() || !w_out.allFinite()) {
    throw DivergenceError("RuleNetParams: non-finite parameter");
  }
  if ((bn_var.array() <= 0.0).any()) throw DataError("RuleNetParams: running variance must be positive");
}

RuleNetParams RuleNetParams::initialize(std::size_t R, std::size_t D, std::size_t C, std::mt19937_64& rng) {
  if (R == 0 || D == 0 || C < 2) throw ConfigError("RuleNetParams::initialize: need R >= 1, D >= 1, C >= 2");
  const auto r = static_cast<Eigen::Index>(R);
  const auto d = static_cast<Eigen::Index>(D);
  const auto c = static_cast<Eigen::Index>(C);
  std::uniform_real_distribution<double> ws_dist(-0.3, 0.3);
  std::uniform_real_distribution<double> loc_dist(-1.0, 0.0);
  std::uniform_real_distribution<double> out_dist(-0.1, 0.1);
  RuleNetParams p;
  p.ws.resize(r, d);
  p.loc.resize(r, d);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.ws(i, j) = ws_dist(rng);
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.loc(i, j) = loc_dist(rng);
  }
  p.w_out.resize(r + 1, c);
  for (Eigen::Index i = 0; i <= r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) p.w_out(i, j) = out_dist(rng);
  }
  p.bn_scale = Vector::Ones(r);
  p.bn_shift = Vector::Zero(r);
  p.bn_mean = Vector::Zero(r);
  p.bn_var = Vector::Ones(r);
  return p;
}

std::vector<int> ForwardTrace::predictions() const {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Gradients Gradients::zeros_like(const RuleNetParams& p) {
  return {Matrix::Zero(p.ws.rows(), p.ws.cols()), Matrix::Zero(p.loc.rows(), p.loc.cols()),
          Vector::Zero(p.bn_scale.size()), Vector::Zero(p.bn_shift.size()),
          Matrix::Zero(p.w_out.rows(), p.w_out.cols())};
}

// --- gate -----------------------------------------------------------------

double gate_sample(double loc, const GateParams& gate, double u) {
  if (!(u >= kGateNoiseFloor && u <= 1.0 - kGateNoiseFloor)) {
    throw DataError("gate_sample: noise must lie in [1e-6, 1 - 1e-6]");
  }
  const double s = sigmoid((std::log(u) - std::log1p(-u) + loc) / gate.beta);
  return std::clamp(s * (gate.zeta - gate.gamma) + gate.gamma, 0.0, 1.0);
}

Matrix gate_sample(const Matrix& loc, const GateParams& gate, const Matrix& u, Matrix* dz_dloc) {
  require_shape(u.rows() == loc.rows() && u.cols() == loc.cols(), "gate_sample: noise shape mismatch");
  const double stretch = gate.zeta - gate.gamma;
  Matrix z(loc.rows(), loc.cols());
  if (dz_dloc) dz_dloc->resize(loc.rows(), loc.cols());
  for (Eigen::Index i = 0; i < loc.rows(); ++i) {
    for (Eigen::Index j = 0; j < loc.cols(); ++j) {
      const double uij = u(i, j);
      if (!(uij >= kGateNoiseFloor && uij <= 1.0 - kGateNoiseFloor)) {
        throw DataError("gate_sample: noise must lie in [1e-6, 1 - 1e-6]");
      }
      const double s = sigmoid((std::log(uij) - std::log1p(-uij) + loc(i, j)) / gate.beta);
      const double raw = s * stretch + gate.gamma;
      z(i, j) = std::clamp(raw, 0.0, 1.0);
      if (dz_dloc) (*dz_dloc)(i, j) = (raw > 0.0 && raw < 1.0) ? stretch * s * (1.0 - s) / gate.beta : 0.0;
    }
  }
  return z;
}

double gate_eval(double loc, const GateParams& gate) {
  return std::clamp(sigmoid(loc) * (gate.zeta - gate.gamma) + gate.gamma, 0.0, 1.0);
}

Matrix gate_eval(const Matrix& loc, const GateParams& gate) {
  return loc.unaryExpr([&gate](double l) { return gate_eval(l, gate); });
}

Matrix sample_gate_noise(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(kGateNoiseFloor, 1.0 - kGateNoiseFloor);
  Matrix u(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) u(i, j) = dist(rng);
  }
  return u;
}

Matrix ternary_weights(const RuleNetParams& params, const GateParams& gate) {
  const Matrix z = gate_eval(params.loc, gate);
  Matrix t = Matrix::Zero(params.ws.rows(), params.ws.cols());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const double w = params.ws(i, j) * z(i, j);
      if (z(i, j) >= kGateOpenThreshold && std::abs(w) >= kWeightFloor) t(i, j) = w > 0.0 ? 1.0 : -1.0;
    }
  }
  return t;
}

// --- layers ---------------------------------------------------------------

Matrix rule_preactivation(const Matrix& weights, const Matrix& X) {
  require_shape(X.cols() == weights.cols(), "rule_preactivation: input width mismatch");
  const Vector positive = weights.cwiseMax(0.0).rowwise().sum();
  Matrix y = X * weights.transpose();
  y.rowwise() -= positive.transpose();
  y.array() += 1.0;
  return y;
}

BatchNormOutput batchnorm(const Matrix& y, const RuleNetParams& params, bool train, double eps) {
  const auto B = y.rows();
  const auto R = y.cols();
  require_shape(R == params.bn_scale.size(), "batchnorm: width mismatch");
  BatchNormOutput o;
  if (train) {
    if (B < 2) throw DataError("batchnorm: train mode requires a batch of at least 2");
    o.mean = y.colwise().mean().transpose();
    o.var = (y.rowwise() - o.mean.transpose()).array().square().colwise().mean().transpose();
  } else {
    o.mean = params.bn_mean;
    o.var = params.bn_var;
  }
  o.inv_std = (o.var.array() + eps).rsqrt().matrix();
  o.normalized = (y.rowwise() - o.mean.transpose()).array().rowwise() * o.inv_std.transpose().array();
  o.out = (o.normalized.array().rowwise() * params.bn_scale.transpose().array()).rowwise() +
          params.bn_shift.transpose().array();
  return o;
}

void update_running_stats(RuleNetParams& params, const ForwardTrace& trace, double momentum) {
  const auto B = static_cast<double>(trace.batch());
  if (trace.batch_var.size() != params.bn_var.size() || B < 2) return;
  const Vector unbiased = trace.batch_var * (B / (B - 1.0));
  params.bn_mean = (1.0 - momentum) * params.bn_mean + momentum * trace.batch_mean;
  params.bn_var = (1.0 - momentum) * params.bn_var + momentum * unbiased;
}

Activation binarize_activation(const Matrix& y, double tau, double slope, bool smooth) {
  Activation a;
  a.b.resize(y.rows(), y.cols());
  a.grad.resize(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double s = sigmoid(slope * (y(i, j) - tau));
      a.b(i, j) = smooth ? s : (y(i, j) >= tau ? 1.0 : 0.0);
      a.grad(i, j) = slope * s * (1.0 - s);
    }
  }
  return a;
}

std::vector<double> hierarchy_forward(std::span<const double> b) {
  std::vector<double> h(b.size() + 1);
  double none_before = 1.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    h[k] = b[k] * none_before;
    none_before *= 1.0 - b[k];
  }
  h[b.size()] = none_before;
  return h;
}

Matrix hierarchy_forward(const Matrix& b) {
  Matrix h(b.rows(), b.cols() + 1);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    double none_before = 1.0;
    for (Eigen::Index k = 0; k < b.cols(); ++k) {
      h(i, k) = b(i, k) * none_before;
      none_before *= 1.0 - b(i, k);
    }
    h(i, b.cols()) = none_before;
  }
  return h;
}

Matrix hierarchy_backward(const Matrix& b, const Matrix& dh) {
  const auto R = b.cols();
  require_shape(dh.cols() == R + 1 && dh.rows() == b.rows(), "hierarchy_backward: shape mismatch");
  Matrix db(b.rows(), R);
  std::vector<double> prefix(static_cast<std::size_t>(R));
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    double p = 1.0;
    for (Eigen::Index k = 0; k < R; ++k) {
      prefix[static_cast<std::size_t>(k)] = p;
      p *= 1.0 - b(i, k);
    }
    // suffix = d(sum over outputs after k)/d(1 - b_k), with the prefix factored out.
    double suffix = dh(i, R);
    for (Eigen::Index k = R - 1; k >= 0; --k) {
      db(i, k) = prefix[static_cast<std::size_t>(k)] * (dh(i, k) - suffix);
      suffix = dh(i, k) * b(i, k) + (1.0 - b(i, k)) * suffix;
    }
  }
  return db;
}

OutputResult output_forward(const Matrix& h, const Matrix& w_out) {
  require_shape(h.cols() == w_out.rows(), "output_forward: hierarchy width mismatch");
  OutputResult o;
  o.logits = h * w_out;
  o.probs.resize(o.logits.rows(), o.logits.cols());
  for (Eigen::Index i = 0; i < o.logits.rows(); ++i) {
    const double m = o.logits.row(i).maxCoeff();
    auto e = (o.logits.row(i).array() - m).exp();
    o.probs.row(i) = e / e.sum();
  }
  return o;
}

// --- network --------------------------------------------------------------

ForwardTrace forward(const RuleNetParams& params, const Matrix& X, Mode mode, const ModelOptions& options,
                     const Matrix* noise) {
  require_shape(static_cast<std::size_t>(X.cols()) == params.inputs(), "forward: input width mismatch");
  ForwardTrace t;
  t.mode = mode;
  const auto R = static_cast<Eigen::Index>(params.rules());
  const bool sampled = mode == Mode::Train || mode == Mode::Smooth;

  if (mode == Mode::Discrete) {
    t.weights = ternary_weights(params, options.gate);
    t.z = t.weights.cwiseAbs();
    t.y = rule_preactivation(t.weights, X);
    t.y_bn = t.y;
    t.b = (t.y.array() >= kConjunctionThreshold).cast<double>();
    t.db = Matrix::Zero(t.y.rows(), R);
  } else {
    if (sampled) {
      if (noise == nullptr) throw DataError("forward: sampled mode requires gate noise");
      t.z = gate_sample(params.loc, options.gate, *noise, &t.dz_dloc);
    } else {
      t.z = gate_eval(params.loc, options.gate);
    }
    if (options.hard_gates && mode != Mode::Smooth) {
      // Straight-through gates: the literal set of the discrete network, with the
      // hard-concrete derivative kept in dz_dloc for the backward pass.
      for (Eigen::Index i = 0; i < t.z.size(); ++i) {
        t.z(i) = t.z(i) >= kGateOpenThreshold && std::abs(params.ws(i)) >= kWeightFloor ? 1.0 : 0.0;
      }
    }
    t.weights = params.ws.cwiseProduct(t.z);
    t.y = rule_preactivation(t.weights, X);

    if (options.batch_norm) {
      auto bn = batchnorm(t.y, params, sampled, options.bn_eps);
      t.y_bn = std::move(bn.out);
      t.y_hat = std::move(bn.normalized);
      t.batch_mean = std::move(bn.mean);
      t.batch_var = std::move(bn.var);
      t.inv_std = std::move(bn.inv_std);
    } else {
      t.y_bn = t.y;
    }

    // Surrogate lives on the normalized pre-activation (threshold 0) with batch norm,
    // and on the raw pre-activation (conjunction threshold) without it.
    const double surrogate_tau = options.batch_norm ? 0.0 : kConjunctionThreshold;
    Activation act = binarize_activation(t.y_bn, surrogate_tau, options.ste_slope, mode == Mode::Smooth);
    t.db = std::move(act.grad);
    if (mode == Mode::Smooth) {
      t.b = std::move(act.b);
    } else if (hard_uses_normalized(options)) {
      t.b = (t.y_bn.array() >= 0.0).cast<double>();
    } else {
      t.b = (t.y.array() >= kConjunctionThreshold).cast<double>();
      // Batch norm can only veto: every sample satisfying the conjunction has the same
      // pre-activation, so a rule is either the exact conjunction or silent.
      if (options.batch_norm) t.b.array() *= (t.y_bn.array() >= 0.0).cast<double>();
    }
  }

  t.h = hierarchy_forward(t.b);
  auto out = output_forward(t.h, params.w_out);
  t.logits = std::move(out.logits);
  t.probs = std::move(out.probs);
  return t;
}

Gradients backward(const RuleNetParams& params, const Matrix& X, const ForwardTrace& trace, const Matrix& dlogits,
                   const ModelOptions& options) {
  if (trace.mode != Mode::Train && trace.mode != Mode::Smooth) {
    throw DataError("backward: requires a Train or Smooth trace");
  }
  require_shape(dlogits.rows() == trace.logits.rows() && dlogits.cols() == trace.logits.cols(),
                "backward: dlogits shape mismatch");
  Gradients g;
  g.w_out = trace.h.transpose() * dlogits;
  const Matrix dh = dlogits * params.w_out.transpose();
  const Matrix db = hierarchy_backward(trace.b, dh);
  const Matrix dy_bn = db.cwiseProduct(trace.db);

  Matrix dy;
  if (options.batch_norm) {
    const auto B = static_cast<double>(trace.batch());
    g.bn_scale = dy_bn.cwiseProduct(trace.y_hat).colwise().sum().transpose();
    g.bn_shift = dy_bn.colwise().sum().transpose();
    const Matrix dyhat = dy_bn.array().rowwise() * params.bn_scale.transpose().array();
    const Eigen::RowVectorXd sum_dyhat = dyhat.colwise().sum();
    const Eigen::RowVectorXd sum_dyhat_yhat = dyhat.cwiseProduct(trace.y_hat).colwise().sum();
    Matrix centered = (B * dyhat).rowwise() - sum_dyhat;
    centered -= (trace.y_hat.array().rowwise() * sum_dyhat_yhat.array()).matrix();
    dy = (centered.array().rowwise() * (trace.inv_std.transpose().array() / B)).matrix();
  } else {
    g.bn_scale = Vector::Zero(params.bn_scale.size());
    g.bn_shift = Vector::Zero(params.bn_shift.size());
    dy = dy_bn;
  }

  // y = X w^T - sum(relu(w)) + 1
  Matrix dw = dy.transpose() * X;
  const Vector dy_sum = dy.colwise().sum().transpose();
  for (Eigen::Index r = 0; r < dw.rows(); ++r) {
    for (Eigen::Index i = 0; i < dw.cols(); ++i) {
      if (trace.weights(r, i) > 0.0) dw(r, i) -= dy_sum(r);
    }
  }
  g.ws = dw.cwiseProduct(trace.z);
  g.loc = dw.cwiseProduct(params.ws).cwiseProduct(trace.dz_dloc);
  return g;
}

std::vector<std::size_t> fired_rules(const ForwardTrace& trace) {
  std::vector<std::size_t> out(static_cast<std::size_t>(trace.h.rows()));
  for (Eigen::Index i = 0; i < trace.h.rows(); ++i) {
    Eigen::Index k = 0;
    trace.h.row(i).maxCoeff(&k);
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(k);
  }
  return out;
}

std::vector<std::size_t> firing_rules(const RuleNetParams& params, const Matrix& X, const ModelOptions& options) {
  std::vector<std::size_t> out;
  if (X.rows() == 0) return out;
  const ForwardTrace t = forward(params, X, Mode::Eval, options);
  for (Eigen::Index r = 0; r < t.b.cols(); ++r) {
    if ((t.b.col(r).array() != 0.0).any()) out.push_back(static_cast<std::size_t>(r));
  }
  return out;
}

RuleNetParams keep_rules(const RuleNetParams& params, std::span<const std::size_t> keep) {
  const auto n = static_cast<Eigen::Index>(keep.size());
  RuleNetParams p;
  p.ws.resize(n, params.ws.cols());
  p.loc.resize(n, params.loc.cols());
  p.bn_scale.resize(n);
  p.bn_shift.resize(n);
  p.bn_mean.resize(n);
  p.bn_var.resize(n);
  p.w_out.resize(n + 1, params.w_out.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(i)]);
    require_shape(r < params.ws.rows() && (i == 0 || r > static_cast<Eigen::Index>(keep[static_cast<std::size_t>(i - 1)])),
                  "keep_rules: indices must be ascending and in range");
    p.ws.row(i) = params.ws.row(r);
    p.loc.row(i) = params.loc.row(r);
    p.bn_scale(i) = params.bn_scale(r);
    p.bn_shift(i) = params.bn_shift(r);
    p.bn_mean(i) = params.bn_mean(r);
    p.bn_var(i) = params.bn_var(r);
    p.w_out.row(i) = params.w_out.row(r);
  }
  p.w_out.row(n) = params.w_out.row(params.w_out.rows() - 1);
  return p;
}

RuleNetParams compact(const RuleNetParams& params, const Matrix& X, const ModelOptions& options) {
  return keep_rules(params, firing_rules(params, X, options));
}

}  // namespace rlnet
