#pragma once

#include "rlnet/binarizer.hpp"
#include "rlnet/model.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rlnet {

/// One literal of a conjunction: binary column, used as-is or negated.
struct Literal {
  std::size_t column = 0;
  Polarity polarity = Polarity::Positive;
  friend bool operator==(const Literal&, const Literal&) = default;
};

struct Rule {
  std::vector<Literal> literals;  // ascending column order, no duplicates
  int class_index = 0;
  std::size_t position = 0;       // index of the originating rule neuron

  bool matches(std::span<const std::uint8_t> x) const;
  std::vector<Condition> conditions(const BinarizationScheme& scheme) const;
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleProvenance {
  std::string model_hash;
  std::string config_hash;
  double fidelity = -1.0;  // negative when not measured
  std::size_t num_rules = 0;
  std::size_t num_conditions = 0;
  friend bool operator==(const RuleProvenance&, const RuleProvenance&) = default;
};

/// Ordered decision list: the first matching rule decides, otherwise the default class.
struct RuleList {
  std::vector<Rule> rules;
  int default_class = 0;
  std::vector<std::string> class_names;
  BinarizationScheme scheme;
  RuleProvenance provenance;

  friend bool operator==(const RuleList&, const RuleList&) = default;
};

/// Sentinel position reported when the default rule decides.
inline constexpr std::size_t kDefaultRule = static_cast<std::size_t>(-1);

struct Explanation {
  int class_index = 0;
  std::size_t list_index = kDefaultRule;  // index into RuleList::rules
  std::size_t position = kDefaultRule;    // originating neuron
  std::vector<bool> literal_values;       // truth value of each literal of the fired rule
};

/// Literals of every neuron in index order, as the discrete network sees them.
std::vector<std::vector<Literal>> neuron_literals(const RuleNetParams& params, const GateParams& gate);

/// (neuron index, condition count) of reachable non-empty rules; an empty neuron is
/// always true and ends the list.
std::vector<std::pair<std::size_t, std::size_t>> surviving_rules(const RuleNetParams& params, const GateParams& gate);

/// Converts trained parameters into a rule list. Neurons with no open gate are always true:
/// the first one becomes the default (its class), and every later neuron is unreachable.
RuleList extract_rules(const RuleNetParams& params, const BinarizationScheme& scheme, const GateParams& gate,
                       std::vector<std::string> class_names);

Explanation evaluate(const RuleList& list, std::span<const std::uint8_t> x);
/// Continuous features are binarized with the embedded scheme first.
Explanation evaluate_features(const RuleList& list, std::span<const double> features);
std::vector<int> predict(const RuleList& list, const Matrix& X);

/// Fraction of rows of X on which the rule list and the discrete network agree.
double fidelity(const RuleList& list, const RuleNetParams& params, const Matrix& X, const ModelOptions& options);

struct Complexity {
  std::size_t rules = 0;       // excluding the default
  std::size_t conditions = 0;
  friend bool operator==(const Complexity&, const Complexity&) = default;
};
Complexity complexity(const RuleList& list);

enum class ExportFormat { Text, Structured };

/// "IF (c1 AND c2) THEN class = <name>" per rule, then "ELSE class = <name>".
std::string export_text(const RuleList& list);
nlohmann::json to_json(const RuleList& list);
RuleList rule_list_from_json(const nlohmann::json& doc);
std::string export_rules(const RuleList& list, ExportFormat format);
ExportFormat parse_export_format(std::string_view name);

nlohmann::json scheme_to_json(const BinarizationScheme& scheme);
BinarizationScheme scheme_from_json(const nlohmann::json& doc);

inline constexpr int kRuleDocumentVersion = 1;

}  // namespace rlnet
