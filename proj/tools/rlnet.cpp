#include "rlnet/config.hpp"
#include "rlnet/dataset.hpp"
#include "rlnet/model_io.hpp"
#include "rlnet/pipeline.hpp"
#include "rlnet/radar.hpp"
#include "rlnet/rules.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace rlnet;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kConfigExit = 2,
  kIoExit = 3,
  kDivergenceExit = 4,
  kDataExit = 5,
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data, model, base_model, rules, out_dir, out;
  std::optional<std::size_t> users, per_class, first_user;
  bool shifted = false;
  std::string cube;
  std::string format = "text";
  bool verify = false;
  std::string split = "test";
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) {
    c.train.seed = *o.seed;
    c.simulate.seed = *o.seed;
    c.split.seed = *o.seed;
  }
  if (!o.data.empty()) c.paths.data = o.data;
  if (!o.model.empty()) c.paths.model = o.model;
  if (!o.base_model.empty()) c.paths.base_model = o.base_model;
  if (!o.rules.empty()) c.paths.rules = o.rules;
  if (!o.out_dir.empty()) c.paths.out_dir = o.out_dir;
  if (o.users) c.simulate.users = *o.users;
  if (o.per_class) c.simulate.samples_per_class = *o.per_class;
  if (o.first_user) c.simulate.first_user = *o.first_user;
  if (o.shifted) c.simulate.shifted = true;
  c.validate();
  return c;
}

const std::string& require(const std::string& value, const char* what) {
  if (value.empty()) throw ConfigError(std::string("no ") + what + " given (config paths or command-line flag)");
  return value;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

FeatureTable read_table(const std::string& path, bool& had_errors) {
  auto result = read_feature_csv(path);
  for (const auto& e : result.errors) std::cerr << path << ":" << e.line << ": " << e.message << "\n";
  had_errors = !result.errors.empty();
  return std::move(result.table);
}

/// Writes the manifest that lets a run be reconstructed from its outputs.
nlohmann::json manifest(const RunConfig& c, const std::string& command) {
  const auto j = to_json(c);
  return {{"command", command}, {"config", j}, {"config_hash", config_hash(j)}, {"code_version", kCodeVersion}};
}

int cmd_simulate(const Options& o) {
  const RunConfig c = resolve(o);
  const fs::path out = o.out.empty() ? fs::path(require(c.paths.data, "output path")) : fs::path(o.out);
  DatasetOptions d;
  d.users = c.simulate.users;
  d.samples_per_class = c.simulate.samples_per_class;
  d.first_user = c.simulate.first_user;
  d.seed = c.simulate.seed;
  if (c.simulate.shifted) d.shift = UserShift::held_out();
  const auto report = generate_dataset(d, c.radar);
  {
    auto f = open_out(out);
    write_feature_csv(f, report.table);
  }
  auto m = manifest(c, "simulate");
  m["rows"] = report.table.size();
  m["rejections"] = report.rejections;
  m["data_hash"] = sha256_file(out);
  write_json(fs::path(out.string() + ".manifest.json"), m);

  if (!o.cube.empty()) {
    std::mt19937_64 user_rng(recording_seed(d.seed, d.first_user, kNumGestures, 0, 0));
    UserProfile profile = draw_user_profile(user_rng);
    if (d.shift) profile = d.shift->apply(profile);
    std::mt19937_64 rng(recording_seed(d.seed, d.first_user, 0, 0, 0));
    const auto trajectory = make_gesture(Gesture::SwipeLeft, profile, c.radar, rng);
    const auto cube = synthesize_cube(trajectory, c.radar, rng());
    auto f = open_out(o.cube);
    write_cube(f, cube, m["config_hash"].get<std::string>());
  }
  std::cout << "wrote " << report.table.size() << " samples to " << out.string() << " (" << report.rejections.size()
            << " redrawn recordings)\n";
  return kOk;
}

int cmd_binarize(const Options& o) {
  const RunConfig c = resolve(o);
  bool bad_rows = false;
  const auto table = read_table(require(c.paths.data, "data path"), bad_rows);
  const auto data = prepare_data(table, c.train.thresholds_per_feature, c.split);
  const fs::path dir = c.paths.out_dir;

  std::ostringstream csv;
  csv << "sample_id,label,split";
  for (std::size_t k = 0; k < data.scheme.width(); ++k) {
    csv << ",\"" << render_condition(data.scheme, k, Polarity::Positive) << "\"";
  }
  csv << "\n";
  const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
      {"train", &data.split.train}, {"val", &data.split.val}, {"test", &data.split.test}};
  const Matrix X = binarize(table.features, data.scheme);
  for (const auto& [name, rows] : parts) {
    for (std::size_t r : *rows) {
      csv << table.ids[r] << "," << gesture_class_names().at(static_cast<std::size_t>(table.labels[r])) << "," << name;
      for (Eigen::Index k = 0; k < X.cols(); ++k) csv << "," << X(static_cast<Eigen::Index>(r), k);
      csv << "\n";
    }
  }
  write_text(dir / "binarized.csv", csv.str());
  auto m = manifest(c, "binarize");
  m["scheme"] = scheme_to_json(data.scheme);
  m["data_hash"] = sha256_file(c.paths.data);
  write_json(dir / "scheme.json", m);
  std::cout << "binarized " << table.size() << " samples into " << data.scheme.width() << " columns\n";
  return bad_rows ? kDataExit : kOk;
}

int cmd_train(const Options& o) {
  const RunConfig c = resolve(o);
  const std::string& data_path = require(c.paths.data, "data path");
  const fs::path model_path = require(c.paths.model, "model path");
  bool bad_rows = false;
  const auto table = read_table(data_path, bad_rows);
  const auto data = prepare_data(table, c.train.thresholds_per_feature, c.split);
  const auto m = manifest(c, "train");
  const std::string chash = m["config_hash"];
  const auto trained = train_model(data, c.train, sha256_file(data_path), chash);
  save_model(model_path, trained.model);

  const fs::path dir = c.paths.out_dir;
  {
    auto f = open_out(dir / "diagnostics.csv");
    write_diagnostics_csv(f, trained.fit.history);
  }
  {
    auto f = open_out(dir / "histogram.csv");
    write_histogram_csv(f, trained.fit.history.at(trained.fit.best_epoch).surviving);
  }
  write_text(dir / "rules.txt", export_text(trained.rules));
  write_text(dir / "rules.json", export_rules(trained.rules, ExportFormat::Structured));
  auto report = m;
  report["model_hash"] = model_hash(trained.model.params);
  report["data_hash"] = trained.model.provenance.data_hash;
  report["best_epoch"] = trained.fit.best_epoch;
  report["epochs_run"] = trained.fit.history.size() - 1;
  report["stopped_early"] = trained.fit.stopped_early;
  report["test"] = to_json(trained.test_report);
  report["fidelity"] = trained.test_fidelity;
  write_json(dir / "train_report.json", report);

  std::cout << "test macro F1 " << trained.test_report.macro_f1 << ", accuracy " << trained.test_report.accuracy
            << ", rules " << trained.test_report.num_rules << ", conditions " << trained.test_report.num_conditions
            << ", fidelity " << trained.test_fidelity << ", best epoch " << trained.fit.best_epoch << "\n"
            << "model " << model_path.string() << " (" << report["model_hash"].get<std::string>() << ")\n";
  return bad_rows ? kDataExit : kOk;
}

nlohmann::json table3_row(const EvalReport& r) {
  return {{"accuracy", r.accuracy}, {"macro_f1", r.macro_f1}, {"rules", r.num_rules}, {"conditions", r.num_conditions}};
}

int cmd_transfer(const Options& o) {
  const RunConfig c = resolve(o);
  const auto base = load_model(fs::path(require(c.paths.base_model, "base model path")));
  const std::string& data_path = require(c.paths.data, "data path");
  const fs::path model_path = require(c.paths.model, "model path");
  bool bad_rows = false;
  const auto table = read_table(data_path, bad_rows);
  auto m = manifest(c, "transfer");
  const std::string chash = m["config_hash"];
  auto result = transfer_model(base, table, c.split, c.train, c.freeze, chash);
  result.model.provenance.data_hash = sha256_file(data_path);
  save_model(model_path, result.model);

  const fs::path dir = c.paths.out_dir;
  {
    auto f = open_out(dir / "transfer_diagnostics.csv");
    write_diagnostics_csv(f, result.fit.history);
  }
  write_text(dir / "transfer_rules.txt", export_text(result.after_rules));
  m["base_model_hash"] = model_hash(base.params);
  m["model_hash"] = model_hash(result.model.params);
  m["initial"] = table3_row(result.before);
  m["transfer"] = table3_row(result.after);
  m["before"] = to_json(result.before);
  m["after"] = to_json(result.after);
  m["frozen_groups_ok"] = result.frozen_groups_ok;
  m["best_epoch"] = result.fit.best_epoch;
  write_json(dir / "transfer_report.json", m);

  std::cout << "initial: accuracy " << result.before.accuracy << ", macro F1 " << result.before.macro_f1
            << ", rules " << result.before.num_rules << ", conditions " << result.before.num_conditions << "\n"
            << "transfer: accuracy " << result.after.accuracy << ", macro F1 " << result.after.macro_f1 << ", rules "
            << result.after.num_rules << ", conditions " << result.after.num_conditions << "\n"
            << "frozen-groups-ok " << (result.frozen_groups_ok ? "true" : "false") << "\n";
  if (!result.frozen_groups_ok) return kFailure;
  return bad_rows ? kDataExit : kOk;
}

/// Rule list from --rules (a structured document) or from a model file.
RuleList load_rules(const RunConfig& c, const Matrix* X) {
  if (!c.paths.rules.empty() && c.paths.model.empty()) {
    std::ifstream in(c.paths.rules);
    if (!in) throw IoError("cannot open rule document " + c.paths.rules);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("rule document " + c.paths.rules + ": " + e.what());
    }
    return rule_list_from_json(doc);
  }
  const auto model = load_model(fs::path(require(c.paths.model, "model or rules path")));
  RuleList list = rules_of(model, X ? *X : Matrix(0, static_cast<Eigen::Index>(model.params.inputs())));
  if (!X) list.provenance.fidelity = -1.0;
  return list;
}

int cmd_evaluate(const Options& o) {
  const RunConfig c = resolve(o);
  bool bad_rows = false;
  const auto table = read_table(require(c.paths.data, "data path"), bad_rows);
  const RuleList probe = load_rules(c, nullptr);
  BinarizedDataset data;
  if (o.split == "all") {
    data = binarize_table(table, probe.scheme);
  } else if (o.split == "test") {
    data = prepare_data(table, probe.scheme, c.split).test;
  } else {
    throw ConfigError("--split must be 'test' or 'all'");
  }
  const RuleList list = load_rules(c, &data.X);
  auto report = manifest(c, "evaluate");
  report["split"] = o.split;
  report["metrics"] = to_json(evaluate_rules(list, data));
  if (list.provenance.fidelity >= 0.0) report["fidelity"] = list.provenance.fidelity;
  const std::string text = report.dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text(o.out, text);
  }
  return bad_rows ? kDataExit : kOk;
}

int cmd_export(const Options& o) {
  RunConfig c = resolve(o);
  const auto format = parse_export_format(o.format);
  const auto model = load_model(fs::path(require(c.paths.model, "model path")));
  std::optional<BinarizedDataset> data;
  bool bad_rows = false;
  if (!c.paths.data.empty()) data = binarize_table(read_table(c.paths.data, bad_rows), model.scheme);
  RuleList list = rules_of(model, data ? data->X : Matrix(0, static_cast<Eigen::Index>(model.params.inputs())));
  if (!data) list.provenance.fidelity = -1.0;
  const std::string doc = export_rules(list, format);
  if (o.out.empty()) {
    std::cout << doc;
  } else {
    write_text(o.out, doc);
  }
  const auto cx = complexity(list);
  std::cerr << "rules " << cx.rules << ", conditions " << cx.conditions;
  if (data) std::cerr << ", fidelity " << list.provenance.fidelity << " on " << data->size() << " samples";
  std::cerr << "\n";
  if (o.verify) {
    const RuleList back = rule_list_from_json(nlohmann::json::parse(export_rules(list, ExportFormat::Structured)));
    if (!(back == list)) {
      std::cerr << "verify: re-imported rule list differs\n";
      return kFailure;
    }
    std::cerr << "verify: round trip ok\n";
  }
  return bad_rows ? kDataExit : kOk;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

int cmd_predict(const Options& o) {
  const RunConfig c = resolve(o);
  bool bad_rows = false;
  const auto table = read_table(require(c.paths.data, "data path"), bad_rows);
  const RuleList list = load_rules(c, nullptr);
  if (table.features.cols() != static_cast<Eigen::Index>(list.scheme.num_features())) {
    throw ShapeError("data has " + std::to_string(table.features.cols()) + " features, rules expect " +
                     std::to_string(list.scheme.num_features()));
  }
  std::ostringstream csv;
  csv << "sample_id,predicted,rule,conditions\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto row = table.features.row(static_cast<Eigen::Index>(r));
    const std::vector<double> values(row.begin(), row.end());
    const auto e = evaluate_features(list, values);
    csv << table.ids[r] << "," << list.class_names.at(static_cast<std::size_t>(e.class_index)) << ",";
    if (e.list_index == kDefaultRule) {
      csv << "default,\"\"\n";
      continue;
    }
    const auto& rule = list.rules[e.list_index];
    std::string conditions;
    for (const auto& lit : rule.literals) {
      if (!conditions.empty()) conditions += " AND ";
      conditions += render_condition(list.scheme, lit.column, lit.polarity);
    }
    csv << e.list_index << "," << csv_quote(conditions) << "\n";
  }
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(o.out, csv.str());
  }
  if (bad_rows) std::cerr << "some input rows were skipped\n";
  return bad_rows ? kDataExit : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-list network training and radar gesture simulation"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config, "JSON run configuration");
  app.add_option("--seed", o.seed, "Overrides every seed in the configuration");

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic gesture feature CSV");
  simulate->add_option("-o,--out", o.out, "Output CSV (default: paths.data)");
  simulate->add_option("--users", o.users, "Number of simulated users");
  simulate->add_option("--per-class", o.per_class, "Samples per class and user");
  simulate->add_option("--first-user", o.first_user, "Index of the first user");
  simulate->add_flag("--shifted", o.shifted, "Apply the held-out user shift");
  simulate->add_option("--cube", o.cube, "Also dump the raw cube of the first recording");

  auto* binarize_cmd = app.add_subcommand("binarize", "Fit thresholds on the training split and binarize");
  binarize_cmd->add_option("--data", o.data, "Feature CSV");
  binarize_cmd->add_option("--out-dir", o.out_dir, "Output directory");

  auto* train = app.add_subcommand("train", "Train a model and extract its rule list");
  train->add_option("--data", o.data, "Feature CSV");
  train->add_option("--model", o.model, "Model file to write");
  train->add_option("--out-dir", o.out_dir, "Directory for reports");

  auto* transfer = app.add_subcommand("transfer", "Adapt a trained model to a new user");
  transfer->add_option("--base-model", o.base_model, "Pretrained model file");
  transfer->add_option("--data", o.data, "Feature CSV of the new user");
  transfer->add_option("--model", o.model, "Adapted model file to write");
  transfer->add_option("--out-dir", o.out_dir, "Directory for reports");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model's rule list on labelled data");
  evaluate_cmd->add_option("--model", o.model, "Model file");
  evaluate_cmd->add_option("--rules", o.rules, "Structured rule document (instead of a model)");
  evaluate_cmd->add_option("--data", o.data, "Feature CSV");
  evaluate_cmd->add_option("--split", o.split, "'test' (the configured split) or 'all'");
  evaluate_cmd->add_option("-o,--out", o.out, "Report file (default: stdout)");

  auto* export_cmd = app.add_subcommand("export-rules", "Write the rule list of a model");
  export_cmd->add_option("--model", o.model, "Model file");
  export_cmd->add_option("--data", o.data, "Feature CSV for measuring fidelity");
  export_cmd->add_option("--format", o.format, "'text' or 'structured'");
  export_cmd->add_option("-o,--out", o.out, "Output file (default: stdout)");
  export_cmd->add_flag("--verify", o.verify, "Re-import the structured document and compare");

  auto* predict_cmd = app.add_subcommand("predict", "Classify samples and explain each prediction");
  predict_cmd->add_option("--model", o.model, "Model file");
  predict_cmd->add_option("--rules", o.rules, "Structured rule document (instead of a model)");
  predict_cmd->add_option("--data", o.data, "Feature CSV");
  predict_cmd->add_option("-o,--out", o.out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigExit;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o);
    if (binarize_cmd->parsed()) return cmd_binarize(o);
    if (train->parsed()) return cmd_train(o);
    if (transfer->parsed()) return cmd_transfer(o);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o);
    if (export_cmd->parsed()) return cmd_export(o);
    if (predict_cmd->parsed()) return cmd_predict(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoExit;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDivergenceExit;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataExit;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
