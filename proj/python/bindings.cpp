#include "rlnet/config.hpp"
#include "rlnet/model_io.hpp"
#include "rlnet/pipeline.hpp"
#include "rlnet/radar.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace rlnet;

namespace {

using json = nlohmann::json;

FeatureTable make_table(const Matrix& features, const Labels& labels, std::vector<std::string> ids) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("features have " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels were given");
  }
  if (ids.empty()) {
    for (std::size_t i = 0; i < labels.size(); ++i) ids.push_back("s" + std::to_string(i));
  }
  if (ids.size() != labels.size()) throw ShapeError("ids and labels differ in length");
  FeatureTable t;
  t.ids = std::move(ids);
  t.labels = labels;
  t.features = features;
  return t;
}

py::dict table_dict(const FeatureTable& t) {
  py::dict d;
  d["ids"] = t.ids;
  d["labels"] = t.labels;
  d["features"] = t.features;
  return d;
}

TrainConfig train_config(const std::string& text) {
  return text.empty() ? TrainConfig{} : train_config_from_json(json::parse(text));
}

SplitConfig split_config(const std::string& text) {
  SplitConfig s;
  if (text.empty()) return s;
  RunConfig c = run_config_from_json(json{{"split", json::parse(text)}});
  c.validate();
  return c.split;
}

std::vector<int> predict_features(const RuleList& list, const Matrix& features) {
  return predict(list, binarize(features, list.scheme));
}

std::string history_json(const std::vector<EpochDiagnostics>& history) {
  json out = json::array();
  for (const auto& d : history) {
    out.push_back({{"epoch", d.epoch},
                   {"train_loss", d.train_loss},
                   {"val_objective", d.val_objective},
                   {"val_ce", d.val_ce},
                   {"val_accuracy", d.val_accuracy},
                   {"val_f1", d.val_f1},
                   {"active_rules", d.active_rules},
                   {"active_conditions", d.active_conditions}});
  }
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rule-list network learner and radar gesture simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  m.attr("__version__") = kCodeVersion;
  m.attr("class_names") = gesture_class_names();
  m.attr("feature_names") = gesture_feature_names();

  m.def(
      "generate_dataset",
      [](std::size_t users, std::size_t samples_per_class, std::uint64_t seed, std::size_t first_user, bool shifted,
         const std::string& radar) {
        DatasetOptions o;
        o.users = users;
        o.samples_per_class = samples_per_class;
        o.seed = seed;
        o.first_user = first_user;
        if (shifted) o.shift = UserShift::held_out();
        const RadarConfig rc = radar.empty() ? RadarConfig{} : radar_config_from_json(json::parse(radar));
        DatasetReport report;
        {
          py::gil_scoped_release release;
          report = generate_dataset(o, rc);
        }
        auto d = table_dict(report.table);
        d["rejections"] = report.rejections;
        return d;
      },
      py::arg("users"), py::arg("samples_per_class"), py::arg("seed") = 0, py::arg("first_user") = 0,
      py::arg("shifted") = false, py::arg("radar") = "");

  m.def(
      "read_feature_csv",
      [](const std::filesystem::path& path) {
        const auto r = read_feature_csv(path);
        auto d = table_dict(r.table);
        std::vector<std::pair<std::size_t, std::string>> errors;
        for (const auto& e : r.errors) errors.emplace_back(e.line, e.message);
        d["errors"] = errors;
        return d;
      },
      py::arg("path"));
  m.def(
      "write_feature_csv",
      [](const std::filesystem::path& path, const Matrix& features, const Labels& labels,
         const std::vector<std::string>& ids) { write_feature_csv(path, make_table(features, labels, ids)); },
      py::arg("path"), py::arg("features"), py::arg("labels"), py::arg("ids") = std::vector<std::string>{});

  m.def(
      "binarize",
      [](const Matrix& features, std::size_t thresholds_per_feature) {
        SchemeOptions o;
        o.thresholds_per_feature = thresholds_per_feature;
        const auto scheme = fit_scheme(features, o, gesture_feature_names(), gesture_feature_units());
        std::vector<std::string> columns;
        for (std::size_t k = 0; k < scheme.width(); ++k) {
          columns.push_back(render_condition(scheme, k, Polarity::Positive));
        }
        return py::make_tuple(binarize(features, scheme), columns);
      },
      py::arg("features"), py::arg("thresholds_per_feature") = 8,
      "Fits quantile thresholds and returns (binary matrix, column descriptions).");

  m.def(
      "confusion_scores",
      [](const Labels& y_true, const Labels& y_pred, std::size_t classes) {
        return to_json(evaluate_predictions(y_true, y_pred, classes)).dump();
      },
      py::arg("y_true"), py::arg("y_pred"), py::arg("classes"));

  py::class_<RuleList>(m, "RuleList")
      .def_static(
          "from_json", [](const std::string& text) { return rule_list_from_json(json::parse(text)); },
          py::arg("text"))
      .def("to_json", [](const RuleList& l) { return to_json(l).dump(2); })
      .def("text", &export_text)
      .def_property_readonly("default_class", [](const RuleList& l) { return l.class_names.at(l.default_class); })
      .def_property_readonly("class_names", [](const RuleList& l) { return l.class_names; })
      .def_property_readonly("fidelity", [](const RuleList& l) { return l.provenance.fidelity; })
      .def("complexity",
           [](const RuleList& l) {
             const auto c = complexity(l);
             return py::make_tuple(c.rules, c.conditions);
           })
      .def("predict", &predict_features, py::arg("features"))
      .def(
          "explain",
          [](const RuleList& l, const std::vector<double>& row) {
            const auto e = evaluate_features(l, row);
            py::dict d;
            d["class"] = l.class_names.at(static_cast<std::size_t>(e.class_index));
            d["rule"] = e.list_index == kDefaultRule ? py::object(py::none()) : py::cast(e.list_index);
            std::vector<std::string> conditions;
            if (e.list_index != kDefaultRule) {
              for (const auto& lit : l.rules[e.list_index].literals) {
                conditions.push_back(render_condition(l.scheme, lit.column, lit.polarity));
              }
            }
            d["conditions"] = conditions;
            return d;
          },
          py::arg("features"))
      .def("__eq__", [](const RuleList& a, const RuleList& b) { return a == b; })
      .def("__repr__", [](const RuleList& l) {
        const auto c = complexity(l);
        return "<RuleList " + std::to_string(c.rules) + " rules, " + std::to_string(c.conditions) + " conditions>";
      });

  py::class_<ModelFile>(m, "Model")
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"))
      .def(
          "save", [](const ModelFile& mf, const std::filesystem::path& p) { save_model(p, mf); }, py::arg("path"))
      .def("to_bytes",
           [](const ModelFile& mf) {
             std::ostringstream out;
             save_model(out, mf);
             return py::bytes(out.str());
           })
      .def_static(
          "from_bytes",
          [](const py::bytes& b) {
            std::istringstream in{std::string(b)};
            return load_model(in);
          },
          py::arg("data"))
      .def_property_readonly("hash", [](const ModelFile& mf) { return model_hash(mf.params); })
      .def_property_readonly("config", [](const ModelFile& mf) { return to_json(mf.config).dump(); })
      .def_property_readonly("class_names", [](const ModelFile& mf) { return mf.class_names; })
      .def_property_readonly("rules_width", [](const ModelFile& mf) { return mf.params.rules(); })
      .def(
          "rules",
          [](const ModelFile& mf, std::optional<Matrix> features) {
            if (!features) {
              RuleList l = rules_of(mf, Matrix(0, static_cast<Eigen::Index>(mf.params.inputs())));
              l.provenance.fidelity = -1.0;
              return l;
            }
            return rules_of(mf, binarize(*features, mf.scheme));
          },
          py::arg("features") = std::nullopt,
          "Extracted rule list; fidelity is measured on `features` when given.")
      .def(
          "predict_network",
          [](const ModelFile& mf, const Matrix& features) {
            return forward(mf.params, binarize(features, mf.scheme), Mode::Discrete, mf.config.model_options())
                .predictions();
          },
          py::arg("features"));

  m.def(
      "train",
      [](const Matrix& features, const Labels& labels, const std::string& config, const std::string& split) {
        const TrainConfig tc = train_config(config);
        const SplitConfig sc = split_config(split);
        const auto table = make_table(features, labels, {});
        TrainedModel t;
        {
          py::gil_scoped_release release;
          t = train_model(prepare_data(table, tc.thresholds_per_feature, sc), tc, {},
                          config_hash(to_json(tc)));
        }
        py::dict d;
        d["model"] = t.model;
        d["rules"] = t.rules;
        d["test"] = to_json(t.test_report).dump();
        d["fidelity"] = t.test_fidelity;
        d["best_epoch"] = t.fit.best_epoch;
        d["history"] = history_json(t.fit.history);
        return d;
      },
      py::arg("features"), py::arg("labels"), py::arg("config") = "", py::arg("split") = "");

  m.def(
      "transfer",
      [](const ModelFile& base, const Matrix& features, const Labels& labels, const std::string& config,
         const std::string& split) {
        const TrainConfig tc = train_config(config);
        const SplitConfig sc = split_config(split);
        const auto table = make_table(features, labels, {});
        TransferResult r;
        {
          py::gil_scoped_release release;
          r = transfer_model(base, table, sc, tc, FreezeSpec::transfer_default());
        }
        py::dict d;
        d["model"] = r.model;
        d["rules"] = r.after_rules;
        d["before"] = to_json(r.before).dump();
        d["after"] = to_json(r.after).dump();
        d["frozen_groups_ok"] = r.frozen_groups_ok;
        d["history"] = history_json(r.fit.history);
        return d;
      },
      py::arg("model"), py::arg("features"), py::arg("labels"), py::arg("config") = "", py::arg("split") = "");
}
