#pragma once

#include "rlnet/binarizer.hpp"
#include "rlnet/metrics.hpp"
#include "rlnet/model.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace rlnet {

enum class SparsityPenalty {
  /// sum sigmoid((loc - gamma) / (zeta - gamma))
  Stretched,
  /// Expected L0 of the hard-concrete gate: sum sigmoid(loc - beta * ln(-gamma / zeta)).
  ExpectedL0,
};

enum class F1Average { Macro, Weighted };

/// Network scored by the validation objective.
enum class ValidationNetwork {
  /// Thresholded gates and ternary weights: the network the rule list is extracted from.
  Discrete,
  /// Deterministic gates with batch norm running statistics.
  Relaxed,
};

struct TrainConfig {
  double lr = 0.01;
  std::size_t batch_size = 40;
  std::size_t max_epochs = 200;
  double lambda1_train = 0.025;
  double lambda1_val = 0.3;
  double lambda2 = 0.0;
  double gamma = -0.1;
  double zeta = 1.1;
  double beta = 2.0 / 3.0;
  std::size_t rules = 50;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double ste_slope = 10.0;
  std::size_t thresholds_per_feature = 8;
  bool batch_norm = true;
  bool hard_gates = true;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  ActivationSource activation = ActivationSource::Conjunction;
  SparsityPenalty sparsity_penalty = SparsityPenalty::Stretched;
  F1Average f1_average = F1Average::Macro;
  ValidationNetwork validation_network = ValidationNetwork::Discrete;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  ModelOptions model_options() const;
  GateParams gate() const { return {beta, gamma, zeta}; }
};

/// Parameter groups that the optimizer leaves untouched.
struct FreezeSpec {
  bool ws = false;
  bool loc = false;
  bool w_out = false;
  bool bn_affine = false;  // bn_scale, bn_shift
  bool bn_stats = false;   // running mean / variance

  /// Rejects a spec with every gradient-updated group frozen.
  void validate() const;
  /// Base rule weights fixed; masks, output weights and batch norm adapt.
  static FreezeSpec transfer_default() { return {.ws = true}; }
};

struct LossTerms {
  double total = 0.0;
  double ce = 0.0;
  double sparse = 0.0;
  double l2 = 0.0;
};

double sparsity_penalty(const Matrix& loc, const GateParams& gate, SparsityPenalty kind);
/// d(penalty)/d(loc), elementwise.
Matrix sparsity_penalty_grad(const Matrix& loc, const GateParams& gate, SparsityPenalty kind);

/// Mean cross-entropy of probs against labels.
double cross_entropy(const Matrix& probs, std::span<const int> labels);

/// L = CE + lambda1 * L_sparse + lambda2 * ||W_out||^2. Throws DivergenceError if non-finite.
LossTerms composite_loss(const ForwardTrace& trace, std::span<const int> labels, const RuleNetParams& params,
                         double lambda1, double lambda2, const GateParams& gate,
                         SparsityPenalty kind = SparsityPenalty::Stretched);

/// Full gradient of composite_loss for a Train or Smooth trace.
Gradients composite_gradients(const RuleNetParams& params, const Matrix& X, const ForwardTrace& trace,
                              std::span<const int> labels, double lambda1, double lambda2,
                              const ModelOptions& options, SparsityPenalty kind = SparsityPenalty::Stretched);

struct AdamState {
  Gradients m;
  Gradients v;
  long step = 0;

  static AdamState for_params(const RuleNetParams& p);
};

struct AdamSettings {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update. Frozen groups are untouched; ws is clamped to [-1, 1].
void adam_step(RuleNetParams& params, const Gradients& grads, AdamState& state, const AdamSettings& settings,
               const FreezeSpec& freeze = {});

/// Validation cross-entropy plus lambda1_val * L_sparse(loc).
struct ValidationResult {
  double objective = 0.0;
  double ce = 0.0;
  double sparse = 0.0;
  std::vector<int> predictions;
};
ValidationResult validation_objective(const RuleNetParams& params, const BinarizedDataset& val, double lambda1_val,
                                      const ModelOptions& options, SparsityPenalty kind = SparsityPenalty::Stretched,
                                      ValidationNetwork network = ValidationNetwork::Discrete);

struct EpochDiagnostics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_objective = 0.0;
  double val_ce = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
  /// Rules that fire on the training rows and have at least one condition.
  std::size_t active_rules = 0;
  /// Open gates over the whole rule layer.
  std::size_t active_conditions = 0;
  std::vector<std::pair<std::size_t, std::size_t>> surviving;  // (rule index in the full layer, condition count)
};

struct FitResult {
  /// Selected checkpoint with silent rules removed.
  RuleNetParams best;
  /// Rule indices of the starting network that survive in `best`.
  std::vector<std::size_t> kept;
  std::size_t best_epoch = 0;
  std::vector<EpochDiagnostics> history;
  bool stopped_early = false;
};

/// Called after every epoch with the diagnostics just computed.
using EpochCallback = std::function<void(const EpochDiagnostics&)>;

/// Mini-batch Adam with seeded shuffling; selects the checkpoint with the lowest
/// validation objective (ties keep the earlier one) and stops after `patience` epochs
/// without improvement. Epoch 0 is the initial state. Every checkpoint is scored and
/// returned with the rules that never fire on the training rows removed.
FitResult fit(const BinarizedDataset& train, const BinarizedDataset& val, const TrainConfig& config,
              const EpochCallback& on_epoch = {});

/// Same loop, starting from `pretrained` with the given groups frozen.
FitResult transfer_learn(const RuleNetParams& pretrained, const BinarizedDataset& train, const BinarizedDataset& val,
                         const TrainConfig& config, const FreezeSpec& freeze = FreezeSpec::transfer_default(),
                         const EpochCallback& on_epoch = {});

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Stratified split; each class is shuffled with `seed` and cut by `fractions`
/// (train, val, test), rounding the train and val counts.
Split split_dataset(std::span<const int> labels, std::array<double, 3> fractions, std::uint64_t seed);

void write_diagnostics_csv(std::ostream& out, const std::vector<EpochDiagnostics>& history);
void write_histogram_csv(std::ostream& out, const std::vector<std::pair<std::size_t, std::size_t>>& surviving);

}  // namespace rlnet
