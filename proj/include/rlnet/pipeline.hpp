#pragma once

#include "rlnet/binarizer.hpp"
#include "rlnet/config.hpp"
#include "rlnet/dataset.hpp"
#include "rlnet/metrics.hpp"
#include "rlnet/model_io.hpp"
#include "rlnet/rules.hpp"
#include "rlnet/trainer.hpp"

#include <nlohmann/json.hpp>

namespace rlnet {

/// Fits thresholds on `table` with the gesture feature names and units.
BinarizationScheme fit_gesture_scheme(const FeatureTable& table, std::size_t thresholds_per_feature);

/// Throws ShapeError if the table has a different feature count than the scheme.
BinarizedDataset binarize_table(const FeatureTable& table, const BinarizationScheme& scheme);

struct PreparedData {
  Split split;
  BinarizationScheme scheme;
  BinarizedDataset train, val, test;
};

/// Stratified split, thresholds fitted on the training rows only.
PreparedData prepare_data(const FeatureTable& table, std::size_t thresholds_per_feature, const SplitConfig& split);

/// Same split, binarized with an existing scheme.
PreparedData prepare_data(const FeatureTable& table, const BinarizationScheme& scheme, const SplitConfig& split);

double f1_score(const EvalReport& report, F1Average average);

/// Rule-list predictions scored against the dataset labels, with the list's complexity.
EvalReport evaluate_rules(const RuleList& list, const BinarizedDataset& data);

/// Discrete-network predictions.
EvalReport evaluate_network(const RuleNetParams& params, const BinarizedDataset& data, const ModelOptions& options);

nlohmann::json to_json(const EvalReport& report);

struct TrainedModel {
  ModelFile model;
  FitResult fit;
  RuleList rules;
  EvalReport test_report;
  double test_fidelity = 1.0;
};

TrainedModel train_model(const PreparedData& data, const TrainConfig& config, const std::string& data_hash = {},
                         const std::string& config_hash = {});

/// Rule list of a model with fidelity measured on `X` and provenance filled in.
RuleList rules_of(const ModelFile& model, const Matrix& X);

struct TransferResult {
  ModelFile model;
  FitResult fit;
  RuleList before_rules, after_rules;
  EvalReport before, after;
  bool frozen_groups_ok = false;
  PreparedData data;
};

/// Splits the user's data, scores the base rule list on the user's test rows, adapts with
/// `freeze`, and scores again.
TransferResult transfer_model(const ModelFile& base, const FeatureTable& user_table, const SplitConfig& split,
                              const TrainConfig& config, const FreezeSpec& freeze,
                              const std::string& config_hash = {});

/// True when every frozen group of `after` is bit-identical to `before`. `kept` maps the
/// rules of `after` to rules of `before` (empty: identity, same width required).
bool frozen_groups_identical(const RuleNetParams& before, const RuleNetParams& after, const FreezeSpec& freeze,
                             std::span<const std::size_t> kept = {});

}  // namespace rlnet
