#include "rlnet/trainer.hpp"

#include "rlnet/binarizer.hpp"
#include "rlnet/rules.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

namespace rlnet {

namespace {

double penalty_argument_scale(const GateParams& g, SparsityPenalty kind) {
  return kind == SparsityPenalty::Stretched ? 1.0 / (g.zeta - g.gamma) : 1.0;
}

double penalty_offset(const GateParams& g, SparsityPenalty kind) {
  return kind == SparsityPenalty::Stretched ? -g.gamma / (g.zeta - g.gamma) : -g.beta * std::log(-g.gamma / g.zeta);
}

void check_finite(const Gradients& g) {
  if (!g.ws.allFinite() || !g.loc.allFinite() || !g.bn_scale.allFinite() || !g.bn_shift.allFinite() ||
      !g.w_out.allFinite()) {
    throw DivergenceError("non-finite gradient");
  }
}

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, const AdamSettings& s, double c1, double c2) {
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  param.array() -= s.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
}

std::size_t count_open_gates(const RuleNetParams& p, const GateParams& gate) {
  const Matrix z = gate_eval(p.loc, gate);
  return static_cast<std::size_t>((z.array() >= kGateOpenThreshold).count());
}

EpochDiagnostics diagnose(std::size_t epoch, double train_loss, const ValidationResult& v, const BinarizedDataset& val,
                          const RuleNetParams& p, const TrainConfig& config) {
  EpochDiagnostics d;
  d.epoch = epoch;
  d.train_loss = train_loss;
  d.val_objective = v.objective;
  d.val_ce = v.ce;
  const auto report = evaluate_predictions(val.y, v.predictions, val.num_classes());
  d.val_accuracy = report.accuracy;
  d.val_f1 = config.f1_average == F1Average::Macro ? report.macro_f1 : report.weighted_f1;
  d.surviving = surviving_rules(p, config.gate());
  d.active_rules = d.surviving.size();
  d.active_conditions = count_open_gates(p, config.gate());
  return d;
}

FitResult run_fit(RuleNetParams params, const BinarizedDataset& train, const BinarizedDataset& val,
                  const TrainConfig& config, const FreezeSpec& freeze, std::mt19937_64& rng,
                  const EpochCallback& on_epoch) {
  config.validate();
  freeze.validate();
  if (train.size() == 0 || val.size() == 0) throw DataError("fit: empty train or validation set");
  if (train.width() != params.inputs() || val.width() != params.inputs()) {
    throw ShapeError("fit: data width does not match the model (" + std::to_string(params.inputs()) + ")");
  }
  if (train.num_classes() != params.classes()) throw ShapeError("fit: class count does not match the model");
  const ModelOptions options = config.model_options();
  const AdamSettings adam{config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps};
  const auto R = static_cast<Eigen::Index>(params.rules());
  const auto D = static_cast<Eigen::Index>(params.inputs());
  const std::size_t M = train.size();
  const std::size_t B = std::min(config.batch_size, M);

  FitResult result;
  AdamState state = AdamState::for_params(params);

  RuleNetParams candidate;
  std::vector<std::size_t> candidate_kept;
  auto evaluate_epoch = [&](std::size_t epoch, double train_loss) {
    candidate_kept = firing_rules(params, train.X, options);
    const RuleNetParams deployed = keep_rules(params, candidate_kept);
    auto v = validation_objective(deployed, val, config.lambda1_val, options, config.sparsity_penalty,
                                  config.validation_network);
    // The penalty is taken over the gates being trained, so a rule going silent is not rewarded.
    v.sparse = sparsity_penalty(params.loc, config.gate(), config.sparsity_penalty);
    v.objective = v.ce + config.lambda1_val * v.sparse;
    if (!std::isfinite(v.objective)) throw DivergenceError("non-finite validation objective at epoch " + std::to_string(epoch));
    result.history.push_back(diagnose(epoch, train_loss, v, val, deployed, config));
    auto& d = result.history.back();
    d.active_conditions = count_open_gates(params, config.gate());
    for (auto& [index, conditions] : d.surviving) index = candidate_kept[index];
    candidate = deployed;
    if (on_epoch) on_epoch(d);
    return v.objective;
  };

  const ForwardTrace initial = forward(params, train.X, Mode::Eval, options);
  const double initial_loss = composite_loss(initial, train.y, params, config.lambda1_train, config.lambda2,
                                             config.gate(), config.sparsity_penalty).total;
  double best = evaluate_epoch(0, initial_loss);
  result.best = candidate;
  result.kept = candidate_kept;
  result.best_epoch = 0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  Matrix Xb;
  std::vector<int> yb;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t start = 0;
    while (start < M) {
      std::size_t end = std::min(start + B, M);
      // A trailing singleton batch cannot be batch-normalized; fold it into this one.
      if (M - end == 1) end = M;
      const auto n = static_cast<Eigen::Index>(end - start);
      Xb.resize(n, D);
      yb.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t row = order[start + static_cast<std::size_t>(i)];
        Xb.row(i) = train.X.row(static_cast<Eigen::Index>(row));
        yb[static_cast<std::size_t>(i)] = train.y[row];
      }
      const Matrix noise = sample_gate_noise(R, D, rng);
      const ForwardTrace trace = forward(params, Xb, Mode::Train, options, &noise);
      const LossTerms loss = composite_loss(trace, yb, params, config.lambda1_train, config.lambda2, config.gate(),
                                            config.sparsity_penalty);
      const Gradients grads = composite_gradients(params, Xb, trace, yb, config.lambda1_train, config.lambda2,
                                                  options, config.sparsity_penalty);
      check_finite(grads);
      adam_step(params, grads, state, adam, freeze);
      if (options.batch_norm && !freeze.bn_stats) update_running_stats(params, trace, options.bn_momentum);
      loss_sum += loss.total * static_cast<double>(n);
      start = end;
    }
    const double objective = evaluate_epoch(epoch, loss_sum / static_cast<double>(M));
    if (objective < best) {
      best = objective;
      result.best = candidate;
      result.kept = candidate_kept;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (lambda1_train < 0.0 || lambda1_val < 0.0 || lambda2 < 0.0) throw ConfigError("lambda values must be >= 0");
  gate().validate();
  if (rules == 0) throw ConfigError("rules must be positive");
  if (thresholds_per_feature == 0) throw ConfigError("thresholds_per_feature must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("invalid Adam moments");
  }
  if (!(ste_slope > 0.0)) throw ConfigError("ste_slope must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0) || !(bn_eps > 0.0)) throw ConfigError("invalid batch-norm settings");
}

ModelOptions TrainConfig::model_options() const {
  ModelOptions o;
  o.batch_norm = batch_norm;
  o.hard_gates = hard_gates;
  o.activation = activation;
  o.ste_slope = ste_slope;
  o.bn_momentum = bn_momentum;
  o.bn_eps = bn_eps;
  o.gate = gate();
  return o;
}

void FreezeSpec::validate() const {
  if (ws && loc && w_out && bn_affine) throw ConfigError("FreezeSpec: at least one parameter group must be trainable");
}

double sparsity_penalty(const Matrix& loc, const GateParams& gate, SparsityPenalty kind) {
  const double a = penalty_argument_scale(gate, kind);
  const double b = penalty_offset(gate, kind);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < loc.rows(); ++i) {
    for (Eigen::Index j = 0; j < loc.cols(); ++j) sum += sigmoid(a * loc(i, j) + b);
  }
  return sum;
}

Matrix sparsity_penalty_grad(const Matrix& loc, const GateParams& gate, SparsityPenalty kind) {
  const double a = penalty_argument_scale(gate, kind);
  const double b = penalty_offset(gate, kind);
  return loc.unaryExpr([a, b](double l) {
    const double s = sigmoid(a * l + b);
    return a * s * (1.0 - s);
  });
}

double cross_entropy(const Matrix& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw ShapeError("cross_entropy: label count mismatch");
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probs(static_cast<Eigen::Index>(i), labels[i]);
    sum -= std::log(std::max(p, std::numeric_limits<double>::min()));
  }
  return sum / static_cast<double>(labels.size());
}

LossTerms composite_loss(const ForwardTrace& trace, std::span<const int> labels, const RuleNetParams& params,
                         double lambda1, double lambda2, const GateParams& gate, SparsityPenalty kind) {
  LossTerms t;
  t.ce = cross_entropy(trace.probs, labels);
  t.sparse = sparsity_penalty(params.loc, gate, kind);
  t.l2 = params.w_out.squaredNorm();
  t.total = t.ce + lambda1 * t.sparse + lambda2 * t.l2;
  if (!std::isfinite(t.total)) {
    throw DivergenceError("non-finite loss (ce=" + std::to_string(t.ce) + ", sparse=" + std::to_string(t.sparse) +
                          ", l2=" + std::to_string(t.l2) + ")");
  }
  return t;
}

Gradients composite_gradients(const RuleNetParams& params, const Matrix& X, const ForwardTrace& trace,
                              std::span<const int> labels, double lambda1, double lambda2,
                              const ModelOptions& options, SparsityPenalty kind) {
  Matrix dlogits = trace.probs;
  for (std::size_t i = 0; i < labels.size(); ++i) dlogits(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
  dlogits /= static_cast<double>(labels.size());
  Gradients g = backward(params, X, trace, dlogits, options);
  if (lambda1 != 0.0) g.loc += lambda1 * sparsity_penalty_grad(params.loc, options.gate, kind);
  if (lambda2 != 0.0) g.w_out += 2.0 * lambda2 * params.w_out;
  return g;
}

AdamState AdamState::for_params(const RuleNetParams& p) {
  return {Gradients::zeros_like(p), Gradients::zeros_like(p), 0};
}

void adam_step(RuleNetParams& params, const Gradients& g, AdamState& state, const AdamSettings& s,
               const FreezeSpec& freeze) {
  ++state.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.step));
  if (!freeze.ws) {
    adam_update(params.ws, g.ws, state.m.ws, state.v.ws, s, c1, c2);
    params.ws = params.ws.cwiseMax(-1.0).cwiseMin(1.0);
  }
  if (!freeze.loc) {
    adam_update(params.loc, g.loc, state.m.loc, state.v.loc, s, c1, c2);
  }
  if (!freeze.bn_affine) {
    adam_update(params.bn_scale, g.bn_scale, state.m.bn_scale, state.v.bn_scale, s, c1, c2);
    adam_update(params.bn_shift, g.bn_shift, state.m.bn_shift, state.v.bn_shift, s, c1, c2);
  }
  if (!freeze.w_out) adam_update(params.w_out, g.w_out, state.m.w_out, state.v.w_out, s, c1, c2);
}

ValidationResult validation_objective(const RuleNetParams& params, const BinarizedDataset& val, double lambda1_val,
                                      const ModelOptions& options, SparsityPenalty kind, ValidationNetwork network) {
  const Mode mode = network == ValidationNetwork::Discrete ? Mode::Discrete : Mode::Eval;
  const ForwardTrace trace = forward(params, val.X, mode, options);
  ValidationResult r;
  r.ce = cross_entropy(trace.probs, val.y);
  r.sparse = sparsity_penalty(params.loc, options.gate, kind);
  r.objective = r.ce + lambda1_val * r.sparse;
  r.predictions = trace.predictions();
  return r;
}

FitResult fit(const BinarizedDataset& train, const BinarizedDataset& val, const TrainConfig& config,
              const EpochCallback& on_epoch) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  RuleNetParams init = RuleNetParams::initialize(config.rules, train.width(), train.num_classes(), rng);
  return run_fit(std::move(init), train, val, config, FreezeSpec{}, rng, on_epoch);
}

FitResult transfer_learn(const RuleNetParams& pretrained, const BinarizedDataset& train, const BinarizedDataset& val,
                         const TrainConfig& config, const FreezeSpec& freeze, const EpochCallback& on_epoch) {
  pretrained.validate();
  if (train.width() != pretrained.inputs()) {
    throw ShapeError("transfer_learn: user data has " + std::to_string(train.width()) +
                     " binary columns, pretrained model expects " + std::to_string(pretrained.inputs()));
  }
  std::mt19937_64 rng(config.seed);
  return run_fit(pretrained, train, val, config, freeze, rng, on_epoch);
}

Split split_dataset(std::span<const int> labels, std::array<double, 3> fractions, std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0) {
    throw ConfigError("split fractions must be non-negative and sum to 1");
  }
  const std::size_t parts =
      static_cast<std::size_t>(fractions[0] > 0) + static_cast<std::size_t>(fractions[1] > 0) + static_cast<std::size_t>(fractions[2] > 0);
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw DataError("split_dataset: negative label");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::mt19937_64 rng(seed);
  Split s;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < parts) {
      throw DataError("split_dataset: class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                      " samples, fewer than the " + std::to_string(parts) + " splits");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * n));
    auto n_val = static_cast<std::size_t>(std::llround(fractions[1] * n));
    n_train = std::min(n_train, idx.size());
    n_val = std::min(n_val, idx.size() - n_train);
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.insert(s.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<EpochDiagnostics>& history) {
  out << "epoch,train_loss,val_objective,val_acc,val_f1,active_rules,active_conditions\n";
  for (const auto& d : history) {
    out << d.epoch << ',' << (std::isfinite(d.train_loss) ? format_number(d.train_loss) : std::string()) << ','
        << format_number(d.val_objective) << ',' << format_number(d.val_accuracy) << ','
        << format_number(d.val_f1) << ',' << d.active_rules << ',' << d.active_conditions << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const std::vector<std::pair<std::size_t, std::size_t>>& surviving) {
  out << "rule_index,condition_count\n";
  for (const auto& [index, count] : surviving) out << index << ',' << count << '\n';
}

}  // namespace rlnet
