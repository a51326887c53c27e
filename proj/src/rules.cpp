#include "rlnet/rules.hpp"

#include <algorithm>
#include <sstream>

namespace rlnet {

namespace {

int argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  m.row(row).maxCoeff(&best);
  return static_cast<int>(best);
}

const char* polarity_name(Polarity p) { return p == Polarity::Positive ? "positive" : "negative"; }

Polarity parse_polarity(const std::string& s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "negative") return Polarity::Negative;
  throw DataError("rule document: unknown polarity '" + s + "'");
}

}  // namespace

bool Rule::matches(std::span<const std::uint8_t> x) const {
  for (const auto& lit : literals) {
    const bool v = x[lit.column] != 0;
    if (v != (lit.polarity == Polarity::Positive)) return false;
  }
  return true;
}

std::vector<Condition> Rule::conditions(const BinarizationScheme& scheme) const {
  std::vector<Condition> out;
  out.reserve(literals.size());
  for (const auto& lit : literals) out.push_back(column_condition(scheme, lit.column, lit.polarity));
  return out;
}

std::vector<std::vector<Literal>> neuron_literals(const RuleNetParams& params, const GateParams& gate) {
  const Matrix t = ternary_weights(params, gate);
  std::vector<std::vector<Literal>> out(params.rules());
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
      if (t(r, c) != 0.0) {
        out[static_cast<std::size_t>(r)].push_back(
            {static_cast<std::size_t>(c), t(r, c) > 0.0 ? Polarity::Positive : Polarity::Negative});
      }
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> surviving_rules(const RuleNetParams& params, const GateParams& gate) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto lits = neuron_literals(params, gate);
  for (std::size_t r = 0; r < lits.size(); ++r) {
    if (lits[r].empty()) break;
    out.emplace_back(r, lits[r].size());
  }
  return out;
}

RuleList extract_rules(const RuleNetParams& params, const BinarizationScheme& scheme, const GateParams& gate,
                       std::vector<std::string> class_names) {
  if (params.inputs() != scheme.width()) {
    throw ShapeError("extract_rules: model width " + std::to_string(params.inputs()) + " != scheme width " +
                     std::to_string(scheme.width()));
  }
  RuleList list;
  list.scheme = scheme;
  list.class_names = std::move(class_names);
  if (list.class_names.empty()) {
    for (std::size_t c = 0; c < params.classes(); ++c) list.class_names.push_back("class" + std::to_string(c));
  }
  if (list.class_names.size() != params.classes()) throw ShapeError("extract_rules: class name count mismatch");

  const auto lits = neuron_literals(params, gate);
  list.default_class = argmax_row(params.w_out, static_cast<Eigen::Index>(params.rules()));
  for (std::size_t r = 0; r < lits.size(); ++r) {
    const int cls = argmax_row(params.w_out, static_cast<Eigen::Index>(r));
    if (lits[r].empty()) {
      list.default_class = cls;
      break;
    }
    list.rules.push_back({lits[r], cls, r});
  }
  const auto cx = complexity(list);
  list.provenance.num_rules = cx.rules;
  list.provenance.num_conditions = cx.conditions;
  return list;
}

Explanation evaluate(const RuleList& list, std::span<const std::uint8_t> x) {
  if (x.size() != list.scheme.width()) {
    throw ShapeError("evaluate: input width " + std::to_string(x.size()) + " != " +
                     std::to_string(list.scheme.width()));
  }
  Explanation e;
  for (std::size_t i = 0; i < list.rules.size(); ++i) {
    const Rule& rule = list.rules[i];
    if (rule.matches(x)) {
      e.class_index = rule.class_index;
      e.list_index = i;
      e.position = rule.position;
      for (const auto& lit : rule.literals) {
        e.literal_values.push_back((x[lit.column] != 0) == (lit.polarity == Polarity::Positive));
      }
      return e;
    }
  }
  e.class_index = list.default_class;
  return e;
}

Explanation evaluate_features(const RuleList& list, std::span<const double> features) {
  const auto x = list.scheme.encode(features);
  return evaluate(list, x);
}

std::vector<int> predict(const RuleList& list, const Matrix& X) {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  std::vector<std::uint8_t> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index m = 0; m < X.rows(); ++m) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) row[static_cast<std::size_t>(c)] = X(m, c) != 0.0 ? 1 : 0;
    out[static_cast<std::size_t>(m)] = evaluate(list, row).class_index;
  }
  return out;
}

double fidelity(const RuleList& list, const RuleNetParams& params, const Matrix& X, const ModelOptions& options) {
  if (X.rows() == 0) return 1.0;
  const auto network = forward(params, X, Mode::Discrete, options).predictions();
  const auto rules = predict(list, X);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < rules.size(); ++i) agree += network[i] == rules[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(rules.size());
}

Complexity complexity(const RuleList& list) {
  Complexity c;
  c.rules = list.rules.size();
  for (const auto& r : list.rules) c.conditions += r.literals.size();
  return c;
}

std::string export_text(const RuleList& list) {
  std::ostringstream out;
  for (const auto& rule : list.rules) {
    out << "IF (";
    for (std::size_t i = 0; i < rule.literals.size(); ++i) {
      if (i > 0) out << " AND ";
      out << render_condition(list.scheme, rule.literals[i].column, rule.literals[i].polarity);
    }
    out << ") THEN class = " << list.class_names.at(static_cast<std::size_t>(rule.class_index)) << '\n';
  }
  out << "ELSE class = " << list.class_names.at(static_cast<std::size_t>(list.default_class)) << '\n';
  return out.str();
}

nlohmann::json scheme_to_json(const BinarizationScheme& scheme) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < scheme.num_features(); ++f) {
    features.push_back({{"name", scheme.feature_names()[f]},
                        {"unit", scheme.units()[f]},
                        {"thresholds", scheme.thresholds(f)}});
  }
  return {{"features", features}};
}

BinarizationScheme scheme_from_json(const nlohmann::json& doc) {
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<std::vector<double>> thresholds;
  for (const auto& f : doc.at("features")) {
    names.push_back(f.at("name").get<std::string>());
    units.push_back(f.at("unit").get<std::string>());
    thresholds.push_back(f.at("thresholds").get<std::vector<double>>());
  }
  return BinarizationScheme(std::move(names), std::move(units), std::move(thresholds));
}

nlohmann::json to_json(const RuleList& list) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& rule : list.rules) {
    nlohmann::json literals = nlohmann::json::array();
    for (const auto& lit : rule.literals) {
      literals.push_back({{"column", lit.column},
                          {"polarity", polarity_name(lit.polarity)},
                          {"condition", render_condition(list.scheme, lit.column, lit.polarity)}});
    }
    rules.push_back({{"position", rule.position},
                     {"class", list.class_names.at(static_cast<std::size_t>(rule.class_index))},
                     {"class_index", rule.class_index},
                     {"literals", literals}});
  }
  const auto& p = list.provenance;
  return {{"version", kRuleDocumentVersion},
          {"class_names", list.class_names},
          {"scheme", scheme_to_json(list.scheme)},
          {"rules", rules},
          {"default_class", list.default_class},
          {"provenance",
           {{"model_hash", p.model_hash},
            {"config_hash", p.config_hash},
            {"fidelity", p.fidelity},
            {"complexity", {{"rules", p.num_rules}, {"conditions", p.num_conditions}}}}}};
}

RuleList rule_list_from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("version").get<int>();
    if (version != kRuleDocumentVersion) {
      throw DataError("rule document version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kRuleDocumentVersion) + ")");
    }
    RuleList list;
    list.class_names = doc.at("class_names").get<std::vector<std::string>>();
    list.scheme = scheme_from_json(doc.at("scheme"));
    list.default_class = doc.at("default_class").get<int>();
    const auto C = static_cast<int>(list.class_names.size());
    if (list.default_class < 0 || list.default_class >= C) throw DataError("rule document: default class out of range");
    for (const auto& r : doc.at("rules")) {
      Rule rule;
      rule.position = r.at("position").get<std::size_t>();
      rule.class_index = r.at("class_index").get<int>();
      if (rule.class_index < 0 || rule.class_index >= C) throw DataError("rule document: class index out of range");
      for (const auto& l : r.at("literals")) {
        Literal lit{l.at("column").get<std::size_t>(), parse_polarity(l.at("polarity").get<std::string>())};
        if (lit.column >= list.scheme.width()) throw DataError("rule document: literal column out of range");
        rule.literals.push_back(lit);
      }
      std::sort(rule.literals.begin(), rule.literals.end(),
                [](const Literal& a, const Literal& b) { return a.column < b.column || (a.column == b.column && a.polarity < b.polarity); });
      rule.literals.erase(std::unique(rule.literals.begin(), rule.literals.end()), rule.literals.end());
      list.rules.push_back(std::move(rule));
    }
    const auto& p = doc.at("provenance");
    list.provenance.model_hash = p.at("model_hash").get<std::string>();
    list.provenance.config_hash = p.at("config_hash").get<std::string>();
    list.provenance.fidelity = p.at("fidelity").get<double>();
    list.provenance.num_rules = p.at("complexity").at("rules").get<std::size_t>();
    list.provenance.num_conditions = p.at("complexity").at("conditions").get<std::size_t>();
    return list;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("rule document: ") + e.what());
  }
}

std::string export_rules(const RuleList& list, ExportFormat format) {
  switch (format) {
    case ExportFormat::Text:
      return export_text(list);
    case ExportFormat::Structured:
      return to_json(list).dump(2) + "\n";
  }
  throw ConfigError("unknown export format");
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "text") return ExportFormat::Text;
  if (name == "structured" || name == "json") return ExportFormat::Structured;
  throw ConfigError("unknown export format '" + std::string(name) + "'");
}

}  // namespace rlnet
