#include "rlnet/pipeline.hpp"

#include <cstring>
#include <numeric>

namespace rlnet {

namespace {

template <typename A, typename B>
bool bit_identical(const A& a, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

}  // namespace

BinarizationScheme fit_gesture_scheme(const FeatureTable& table, std::size_t thresholds_per_feature) {
  SchemeOptions options;
  options.thresholds_per_feature = thresholds_per_feature;
  return fit_scheme(table.features, options, gesture_feature_names(), gesture_feature_units());
}

BinarizedDataset binarize_table(const FeatureTable& table, const BinarizationScheme& scheme) {
  if (static_cast<std::size_t>(table.features.cols()) != scheme.num_features()) {
    throw ShapeError("data has " + std::to_string(table.features.cols()) + " features, scheme expects " +
                     std::to_string(scheme.num_features()));
  }
  BinarizedDataset d;
  d.X = binarize(table.features, scheme);
  d.y = table.labels;
  d.class_names = gesture_class_names();
  d.scheme = scheme;
  return d;
}

PreparedData prepare_data(const FeatureTable& table, const BinarizationScheme& scheme, const SplitConfig& split) {
  PreparedData p;
  p.split = split_dataset(table.labels, split.fractions(), split.seed);
  p.scheme = scheme;
  p.train = binarize_table(table.subset(p.split.train), scheme);
  p.val = binarize_table(table.subset(p.split.val), scheme);
  p.test = binarize_table(table.subset(p.split.test), scheme);
  return p;
}

PreparedData prepare_data(const FeatureTable& table, std::size_t thresholds_per_feature, const SplitConfig& split) {
  const auto s = split_dataset(table.labels, split.fractions(), split.seed);
  const auto scheme = fit_gesture_scheme(table.subset(s.train), thresholds_per_feature);
  return prepare_data(table, scheme, split);
}

double f1_score(const EvalReport& report, F1Average average) {
  return average == F1Average::Macro ? report.macro_f1 : report.weighted_f1;
}

EvalReport evaluate_rules(const RuleList& list, const BinarizedDataset& data) {
  const auto predictions = predict(list, data.X);
  EvalReport report = evaluate_predictions(data.y, predictions, list.class_names.size());
  const auto cx = complexity(list);
  report.num_rules = cx.rules;
  report.num_conditions = cx.conditions;
  return report;
}

EvalReport evaluate_network(const RuleNetParams& params, const BinarizedDataset& data, const ModelOptions& options) {
  const auto predictions = forward(params, data.X, Mode::Discrete, options).predictions();
  return evaluate_predictions(data.y, predictions, params.classes());
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back({{"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1},
                         {"support", c.support},
                         {"undefined", c.undefined}});
  }
  nlohmann::json cm = nlohmann::json::array();
  for (Eigen::Index i = 0; i < report.confusion.rows(); ++i) {
    std::vector<long> row(report.confusion.row(i).begin(), report.confusion.row(i).end());
    cm.push_back(row);
  }
  return {{"accuracy", report.accuracy},
          {"macro_f1", report.macro_f1},
          {"weighted_f1", report.weighted_f1},
          {"per_class", per_class},
          {"confusion", cm},
          {"rules", report.num_rules},
          {"conditions", report.num_conditions},
          {"undefined_metrics", report.any_undefined()}};
}

RuleList rules_of(const ModelFile& model, const Matrix& X) {
  RuleList list = extract_rules(model.params, model.scheme, model.config.gate(), model.class_names);
  list.provenance.model_hash = model_hash(model.params);
  list.provenance.config_hash = model.provenance.config_hash;
  list.provenance.fidelity = fidelity(list, model.params, X, model.config.model_options());
  return list;
}

TrainedModel train_model(const PreparedData& data, const TrainConfig& config, const std::string& data_hash,
                         const std::string& config_hash) {
  TrainedModel out;
  out.fit = fit(data.train, data.val, config);
  out.model.config = config;
  out.model.scheme = data.scheme;
  out.model.class_names = data.train.class_names;
  out.model.params = out.fit.best;
  out.model.provenance.seed = config.seed;
  out.model.provenance.data_hash = data_hash;
  out.model.provenance.config_hash = config_hash;
  out.rules = rules_of(out.model, data.test.X);
  out.test_fidelity = out.rules.provenance.fidelity;
  out.test_report = evaluate_rules(out.rules, data.test);
  return out;
}

bool frozen_groups_identical(const RuleNetParams& before, const RuleNetParams& after, const FreezeSpec& freeze,
                             std::span<const std::size_t> kept) {
  std::vector<std::size_t> all;
  if (kept.empty() && after.rules() == before.rules()) {
    all.resize(before.rules());
    std::iota(all.begin(), all.end(), std::size_t{0});
    kept = all;
  }
  if (kept.size() != after.rules()) return false;
  for (std::size_t r : kept) {
    if (r >= before.rules()) return false;
  }
  // Surviving rules of `before`, in the layout of `after`.
  const RuleNetParams ref = keep_rules(before, kept);
  if (freeze.ws && !bit_identical(ref.ws, after.ws)) return false;
  if (freeze.loc && !bit_identical(ref.loc, after.loc)) return false;
  if (freeze.w_out && !bit_identical(ref.w_out, after.w_out)) return false;
  if (freeze.bn_affine && (!bit_identical(ref.bn_scale, after.bn_scale) ||
                           !bit_identical(ref.bn_shift, after.bn_shift))) {
    return false;
  }
  if (freeze.bn_stats && (!bit_identical(ref.bn_mean, after.bn_mean) ||
                          !bit_identical(ref.bn_var, after.bn_var))) {
    return false;
  }
  return true;
}

TransferResult transfer_model(const ModelFile& base, const FeatureTable& user_table, const SplitConfig& split,
                              const TrainConfig& config, const FreezeSpec& freeze, const std::string& config_hash) {
  freeze.validate();
  TransferResult out;
  out.data = prepare_data(user_table, base.scheme, split);
  if (out.data.train.width() != base.params.inputs()) {
    throw ShapeError("user data width " + std::to_string(out.data.train.width()) + " != model width " +
                     std::to_string(base.params.inputs()));
  }
  out.before_rules = rules_of(base, out.data.test.X);
  out.before = evaluate_rules(out.before_rules, out.data.test);

  // Structural settings come from the base model; only optimization settings are taken from `config`.
  TrainConfig tl = config;
  tl.rules = base.config.rules;
  tl.gamma = base.config.gamma;
  tl.zeta = base.config.zeta;
  tl.beta = base.config.beta;
  tl.batch_norm = base.config.batch_norm;
  tl.hard_gates = base.config.hard_gates;
  tl.activation = base.config.activation;
  tl.ste_slope = base.config.ste_slope;
  tl.bn_eps = base.config.bn_eps;
  tl.thresholds_per_feature = base.config.thresholds_per_feature;

  out.fit = transfer_learn(base.params, out.data.train, out.data.val, tl, freeze);
  out.model = base;
  out.model.config = tl;
  out.model.params = out.fit.best;
  out.model.optimizer.reset();
  out.model.provenance.config_hash = config_hash.empty() ? base.provenance.config_hash : config_hash;
  out.frozen_groups_ok = frozen_groups_identical(base.params, out.model.params, freeze, out.fit.kept);
  out.after_rules = rules_of(out.model, out.data.test.X);
  out.after = evaluate_rules(out.after_rules, out.data.test);
  return out;
}

}  // namespace rlnet
