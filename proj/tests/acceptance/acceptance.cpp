// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   rlnet_acceptance [--cli PATH] [--work DIR]
//
// The benchmark criteria (4-8) share one synthetic dataset: six users with 100 samples per
// class and user, plus one held-out user drawn with the held-out shift.

#include "rlnet/config.hpp"
#include "rlnet/model_io.hpp"
#include "rlnet/pipeline.hpp"
#include "rlnet/radar.hpp"
#include "support/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace rlnet;

namespace {

// Pinned tolerances.
constexpr double kFdStep = 1e-5;
constexpr double kFdRelErr = 1e-4;
constexpr std::size_t kFdCoordinates = 100;
constexpr double kFdSeconds = 10.0;
constexpr std::size_t kTernaryRows = 1000;
constexpr std::size_t kMaxTernaryWidth = 8;
constexpr std::size_t kMaxHierarchyWidth = 12;
constexpr std::size_t kMaxFidelityWidth = 10;
constexpr double kBenchmarkFidelity = 0.99;
constexpr double kBenchmarkF1 = 0.95;
constexpr std::size_t kBenchmarkConditions = 60;
constexpr double kBenchmarkSeconds = 600.0;
constexpr double kTransferGain = 0.02;
constexpr double kAngleTolDeg = 2.0;
constexpr double kSnrDb = 20.0;
constexpr double kDspSeconds = 60.0;
constexpr std::size_t kRenderSamples = 10000;
constexpr std::array<std::uint64_t, 3> kSeeds = {0, 1, 2};
constexpr std::uint64_t kDataSeed = 1;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Report {
 public:
  void add(int id, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << id << "] " << name << ": " << o.detail
              << std::endl;
    failed_ += o.pass ? 0 : 1;
  }
  int failed() const { return failed_; }

 private:
  int failed_ = 0;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// --- 1 --------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t coords = 0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const testing::SmoothProblem problem(3, 6, 3, 16, seed);
    const auto r = testing::check_gradients(problem, kFdCoordinates, kFdStep, seed + 100);
    worst = std::max(worst, r.max_relative_error);
    coords += r.coordinates;
  }
  const double t = seconds_since(t0);
  return {worst < kFdRelErr && t < kFdSeconds,
          "max relative error " + fmt(worst, 3) + " over " + std::to_string(coords) + " coordinates (R=3, D=6, C=3), " +
              fmt(t, 2) + " s"};
}

// --- 2 --------------------------------------------------------------------

RuleNetParams single_rule(const std::vector<int>& ternary) {
  std::mt19937_64 rng(0);
  RuleNetParams p = RuleNetParams::initialize(1, ternary.size(), 2, rng);
  for (std::size_t i = 0; i < ternary.size(); ++i) {
    p.ws(0, static_cast<Eigen::Index>(i)) = ternary[i] == 0 ? 0.5 : ternary[i];
    p.loc(0, static_cast<Eigen::Index>(i)) = ternary[i] == 0 ? -30.0 : 30.0;
  }
  return p;
}

Matrix all_inputs(std::size_t D) {
  Matrix X(Eigen::Index{1} << D, static_cast<Eigen::Index>(D));
  for (Eigen::Index m = 0; m < X.rows(); ++m) {
    for (std::size_t i = 0; i < D; ++i) X(m, static_cast<Eigen::Index>(i)) = (m >> i) & 1 ? 1.0 : 0.0;
  }
  return X;
}

Outcome logical_semantics() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> width(1, kMaxTernaryWidth);
  std::uniform_int_distribution<int> tri(-1, 1);
  ModelOptions options;
  std::size_t checked = 0, disagreements = 0;
  for (std::size_t row = 0; row < kTernaryRows; ++row) {
    const std::size_t D = width(rng);
    std::vector<int> t(D);
    for (auto& v : t) v = tri(rng);
    const Matrix X = all_inputs(D);
    const auto trace = forward(single_rule(t), X, Mode::Discrete, options);
    for (Eigen::Index m = 0; m < X.rows(); ++m) {
      bool expected = true;
      for (std::size_t i = 0; i < D; ++i) {
        const double x = X(m, static_cast<Eigen::Index>(i));
        if ((t[i] == 1 && x != 1.0) || (t[i] == -1 && x != 0.0)) expected = false;
      }
      disagreements += (trace.b(m, 0) == 1.0) != expected;
      ++checked;
    }
  }
  return {disagreements == 0, std::to_string(disagreements) + " disagreements over " + std::to_string(kTernaryRows) +
                                  " ternary rows (D <= 8), " + std::to_string(checked) + " row/input pairs"};
}

// --- 3 --------------------------------------------------------------------

Outcome hierarchy_exclusivity() {
  std::size_t checked = 0, failures = 0;
  for (std::size_t R = 1; R <= kMaxHierarchyWidth; ++R) {
    const Matrix b = all_inputs(R);
    const Matrix h = hierarchy_forward(b);
    for (Eigen::Index m = 0; m < b.rows(); ++m) {
      std::size_t first = R;
      for (std::size_t k = 0; k < R && first == R; ++k) {
        if (b(m, static_cast<Eigen::Index>(k)) == 1.0) first = k;
      }
      std::size_t ones = 0;
      bool exact = true;
      for (Eigen::Index k = 0; k < h.cols(); ++k) {
        const double v = h(m, k);
        if (v != 0.0 && v != 1.0) exact = false;
        if (v == 1.0) ones += 1;
      }
      failures += !(exact && ones == 1 && h(m, static_cast<Eigen::Index>(first)) == 1.0);
      ++checked;
    }
  }
  return {failures == 0,
          std::to_string(failures) + " failures over " + std::to_string(checked) + " activation vectors (R = 1..12)"};
}

// --- benchmark ------------------------------------------------------------

struct Benchmark {
  FeatureTable table;
  FeatureTable held_out;
  double generation_seconds = 0.0;
};

Benchmark make_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  Benchmark b;
  const RadarConfig radar;
  DatasetOptions o;
  o.users = 6;
  o.samples_per_class = 100;
  o.seed = kDataSeed;
  b.table = generate_dataset(o, radar).table;
  DatasetOptions h;
  h.users = 1;
  h.samples_per_class = 100;
  h.first_user = 50;
  h.seed = kDataSeed;
  h.shift = UserShift::held_out();
  b.held_out = generate_dataset(h, radar).table;
  b.generation_seconds = seconds_since(t0);
  return b;
}

struct Run {
  TrainedModel trained;
  double seconds = 0.0;
};

Run train_run(const FeatureTable& table, TrainConfig config) {
  const auto t0 = std::chrono::steady_clock::now();
  SplitConfig split;
  split.seed = config.seed;
  const auto data = prepare_data(table, config.thresholds_per_feature, split);
  Run r;
  r.trained = train_model(data, config);
  r.seconds = seconds_since(t0);
  return r;
}

struct BenchmarkRuns {
  std::map<std::uint64_t, Run> base, no_val_penalty, no_bn;
};

// --- 4 --------------------------------------------------------------------

Outcome extraction_fidelity(const BenchmarkRuns& runs) {
  // Trained models on a planted rule problem, checked on every input of the binary space.
  std::size_t models = 0, disagreements = 0, total = 0;
  for (std::size_t D : {6u, 8u, 10u}) {
    std::vector<std::vector<double>> t(D, std::vector<double>{0.5});
    std::vector<std::string> names;
    for (std::size_t i = 0; i < D; ++i) names.push_back("x" + std::to_string(i));
    const BinarizationScheme scheme(names, std::vector<std::string>(D, ""), t);
    const Matrix X = all_inputs(D);
    auto label = [&](Eigen::Index m) {
      if (X(m, 0) == 1.0 && X(m, 1) == 0.0) return 1;
      if (X(m, 2) == 1.0) return 2;
      return 0;
    };
    BinarizedDataset all;
    all.X = X;
    for (Eigen::Index m = 0; m < X.rows(); ++m) all.y.push_back(label(m));
    all.class_names = {"a", "b", "c"};
    all.scheme = scheme;
    const auto split = split_dataset(all.y, {0.7, 0.3, 0.0}, D);
    for (std::uint64_t seed : kSeeds) {
      TrainConfig config;
      config.rules = 10;
      config.max_epochs = 60;
      config.batch_size = 16;
      config.seed = seed;
      const auto result = fit(all.subset(split.train), all.subset(split.val), config);
      const auto list = extract_rules(result.best, scheme, config.gate(), all.class_names);
      const auto net = forward(result.best, X, Mode::Discrete, config.model_options()).predictions();
      const auto ev = forward(result.best, X, Mode::Eval, config.model_options()).predictions();
      const auto rules = predict(list, X);
      for (std::size_t m = 0; m < rules.size(); ++m) disagreements += (rules[m] != net[m]) + (rules[m] != ev[m]);
      total += 2 * rules.size();
      ++models;
    }
  }
  double worst = 1.0;
  std::string bench;
  for (const auto& [seed, run] : runs.base) {
    worst = std::min(worst, run.trained.test_fidelity);
    bench += (bench.empty() ? "" : ", ") + fmt(run.trained.test_fidelity);
  }
  return {disagreements == 0 && worst >= kBenchmarkFidelity,
          std::to_string(disagreements) + " disagreements over " + std::to_string(total) +
              " exhaustive comparisons (" + std::to_string(models) + " trained models, D <= " +
              std::to_string(kMaxFidelityWidth) + "); benchmark test fidelity " + bench};
}

// --- 5 --------------------------------------------------------------------

Outcome benchmark_learning(const Benchmark& bench, const BenchmarkRuns& runs) {
  const auto& base = runs.base.at(kSeeds[0]).trained;
  const double f1 = base.test_report.macro_f1;
  const std::size_t conditions = base.test_report.num_conditions;
  const double seconds = bench.generation_seconds + runs.base.at(kSeeds[0]).seconds;
  std::size_t wins = 0;
  std::string pairs;
  for (std::uint64_t seed : kSeeds) {
    const auto with = runs.base.at(seed).trained.test_report.num_conditions;
    const auto without = runs.no_val_penalty.at(seed).trained.test_report.num_conditions;
    wins += with <= without;
    pairs += (pairs.empty() ? "" : ", ") + std::to_string(with) + " vs " + std::to_string(without);
  }
  const bool pass = f1 >= kBenchmarkF1 && conditions <= kBenchmarkConditions && wins >= 2 &&
                    seconds < kBenchmarkSeconds;
  return {pass, "default config macro F1 " + fmt(f1) + " with " + std::to_string(base.test_report.num_rules) +
                    " rules / " + std::to_string(conditions) + " conditions; conditions with vs without validation "
                    "sparsity: " + pairs + " (" + std::to_string(wins) + "/3 not larger); " + fmt(seconds, 3) +
                    " s including data generation"};
}

// --- 6 --------------------------------------------------------------------

Outcome batch_norm_ablation(const BenchmarkRuns& runs) {
  double with = 0.0, without = 0.0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const double a = runs.base.at(seed).trained.test_report.macro_f1;
    const double b = runs.no_bn.at(seed).trained.test_report.macro_f1;
    with += a / kSeeds.size();
    without += b / kSeeds.size();
    detail += (detail.empty() ? "" : ", ") + fmt(a) + " vs " + fmt(b);
  }
  return {with >= without, "mean macro F1 with batch norm " + fmt(with) + ", without " + fmt(without) +
                               " (per seed: " + detail + ")"};
}

// --- 7 --------------------------------------------------------------------

Outcome transfer_learning(const Benchmark& bench, const BenchmarkRuns& runs) {
  std::size_t wins = 0;
  bool frozen_ok = true;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    TrainConfig config;
    config.seed = seed;
    SplitConfig split;
    split.seed = seed;
    const auto& base = runs.base.at(seed).trained.model;
    const auto tl = transfer_model(base, bench.held_out, split, config, FreezeSpec::transfer_default());
    const bool ok = tl.after.macro_f1 - tl.before.macro_f1 >= kTransferGain &&
                    tl.after.num_conditions <= tl.before.num_conditions;
    wins += ok;
    frozen_ok = frozen_ok && tl.frozen_groups_ok;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": F1 " +
              fmt(tl.before.macro_f1) + " -> " + fmt(tl.after.macro_f1) + ", conditions " +
              std::to_string(tl.before.num_conditions) + " -> " + std::to_string(tl.after.num_conditions) +
              (ok ? "" : " (no)");
  }
  return {wins >= 2 && frozen_ok, detail + "; " + std::to_string(wins) + "/3 improved; frozen groups " +
                                      (frozen_ok ? "bit-identical" : "CHANGED")};
}

// --- 8 --------------------------------------------------------------------

Outcome diagnostics_shape(const BenchmarkRuns& runs, const fs::path& work) {
  const auto& fit = runs.base.at(kSeeds[0]).trained.fit;
  const auto& h = fit.history;
  const std::size_t n = h.size();
  const std::size_t start = n - n / 4;
  std::size_t increases = 0;
  std::string where;
  for (std::size_t e = start; e < n; ++e) {
    if (h[e].active_conditions > h[e - 1].active_conditions) {
      ++increases;
      where += (where.empty() ? "" : ", ") + std::to_string(h[e].epoch) + " (" +
               std::to_string(h[e - 1].active_conditions) + " -> " + std::to_string(h[e].active_conditions) + ")";
    }
  }
  std::ostringstream diag, hist;
  write_diagnostics_csv(diag, h);
  write_histogram_csv(hist, h.at(fit.best_epoch).surviving);
  fs::create_directories(work);
  std::ofstream(work / "diagnostics.csv") << diag.str();
  std::ofstream(work / "histogram.csv") << hist.str();
  const std::string hist_text = hist.str();
  const auto hist_rows = static_cast<std::size_t>(std::count(hist_text.begin(), hist_text.end(), '\n')) - 1;
  std::size_t peak = 0;
  for (const auto& d : h) peak = std::max(peak, d.active_conditions);
  std::string detail = "conditions per epoch: peak " + std::to_string(peak) + ", epoch " +
                       std::to_string(h[start - 1].epoch) + " " + std::to_string(h[start - 1].active_conditions) +
                       ", final " + std::to_string(h.back().active_conditions) + "; " + std::to_string(increases) +
                       " increase(s) over the final " + std::to_string(n - start) + " epochs";
  if (!where.empty()) detail += " at epoch " + where;
  detail += "; histogram rows " + std::to_string(hist_rows);
  return {increases == 0 && hist_rows > 0, detail};
}

// --- 9 --------------------------------------------------------------------

TargetState point(double range, double velocity = 0.0, double az_deg = 0.0, double el_deg = 0.0) {
  constexpr double deg = std::numbers::pi / 180.0;
  return {range, velocity, az_deg * deg, el_deg * deg, 0.09 / (range * range)};
}

std::size_t peak_bin(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin() + 1, p.end()) - p.begin());
}

Outcome dsp_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  RadarConfig c;
  c.noise_power = 0.0;
  c.frames = kGestureWindow;
  std::mt19937_64 rng(99);

  double range_err = 0.0;
  std::uniform_real_distribution<double> ranges(0.15, 0.95 * c.max_range());
  for (int i = 0; i < 100; ++i) {
    const double r = ranges(rng);
    const auto cube = synthesize_cube(constant_trajectory(c, point(r)), c, 1);
    const auto det = localize_target(magnitude_profile(range_fft(cube, 0)), c.detection_kappa,
                                     c.detection_peak_fraction);
    const double bin = det ? static_cast<double>(det->bin) : 0.0;
    range_err = std::max(range_err, std::abs(bin - r / c.range_resolution()));
  }

  double vel_err = 0.0;
  std::uniform_real_distribution<double> velocities(-0.99 * c.max_velocity(), 0.99 * c.max_velocity());
  for (int i = 0; i < 100; ++i) {
    const double v = velocities(rng);
    const auto p = range_fft(synthesize_cube(constant_trajectory(c, point(0.8, v)), c, 1), 0);
    const auto d = doppler_fft(p, 0, peak_bin(magnitude_profile(p)), c);
    // Doppler bins wrap at +/-N/2, so the error is measured around the circle.
    const double n = static_cast<double>(c.chirps);
    const double e = std::fmod(std::abs(d.velocity - v) / c.velocity_resolution(), n);
    vel_err = std::max(vel_err, std::min(e, n - e));
  }

  double angle_err = 0.0;
  std::uniform_real_distribution<double> angles(-45.0, 45.0);
  for (int i = 0; i < 100; ++i) {
    const double az = angles(rng), el = angles(rng);
    const auto s = point(0.6, 0.0, az, el);
    RadarConfig noisy = c;
    noisy.noise_power = s.amplitude * s.amplitude / std::pow(10.0, kSnrDb / 10.0);
    const auto p = range_fft(synthesize_cube(constant_trajectory(noisy, s), noisy, 100 + i), 0);
    const auto bin = peak_bin(magnitude_profile(p));
    const auto est = estimate_angles(p, bin, doppler_fft(p, 0, bin, noisy).bin, noisy);
    angle_err = std::max({angle_err, std::abs(est.azimuth_deg - az), std::abs(est.elevation_deg - el)});
  }
  const double t = seconds_since(t0);
  return {range_err <= 1.0 && vel_err <= 1.0 && angle_err <= kAngleTolDeg && t < kDspSeconds,
          "max range error " + fmt(range_err, 3) + " bins, velocity error " + fmt(vel_err, 3) +
              " bins, angle error " + fmt(angle_err, 3) + " deg at " + fmt(kSnrDb, 3) + " dB SNR; " + fmt(t, 3) +
              " s"};
}

// --- 10 -------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Runs every CLI command into `dir`; returns the combined exit status.
int cli_pass(const std::string& cli, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const nlohmann::json config = {
      {"simulate", {{"users", 1}, {"samples_per_class", 8}, {"seed", 5}}},
      {"train", {{"max_epochs", 15}, {"rules", 16}, {"seed", 3}}},
      {"split", {{"seed", 3}}},
      {"paths", {{"data", (dir / "data.csv").string()},
                 {"model", (dir / "model.bin").string()},
                 {"base_model", (dir / "model.bin").string()},
                 {"out_dir", (dir / "out").string()}}}};
  std::ofstream(dir / "config.json") << config.dump(2);
  const std::string base = "\"" + cli + "\" -c \"" + (dir / "config.json").string() + "\" ";
  const std::string quiet = " > /dev/null 2>&1";
  int status = 0;
  auto run = [&](const std::string& args) { status |= std::system((base + args + quiet).c_str()); };
  run("simulate");
  run("binarize");
  run("train");
  run("export-rules --format structured --data \"" + (dir / "data.csv").string() + "\" -o \"" +
      (dir / "out" / "exported.json").string() + "\"");
  run("evaluate -o \"" + (dir / "out" / "evaluate.json").string() + "\"");
  run("predict -o \"" + (dir / "out" / "predictions.csv").string() + "\"");
  run("transfer --model \"" + (dir / "adapted.bin").string() + "\"");
  return status;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  // In-process: dataset bytes and model hashes.
  DatasetOptions o;
  o.users = 1;
  o.samples_per_class = 4;
  o.seed = 8;
  std::ostringstream a, b;
  write_feature_csv(a, generate_dataset(o, RadarConfig{}).table);
  write_feature_csv(b, generate_dataset(o, RadarConfig{}).table);
  bool ok = a.str() == b.str();
  std::string detail = std::string("library dataset CSV ") + (ok ? "identical" : "DIFFERS");
  if (cli.empty()) return {false, detail + "; command-line tool not given (--cli), commands not checked"};

  const fs::path run = work / "cli";
  const fs::path first = work / "cli_first";
  const int s1 = cli_pass(cli, run);
  fs::remove_all(first);
  fs::rename(run, first);
  const int s2 = cli_pass(cli, run);
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(first)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(entry.path(), first);
    if (slurp(entry.path()) != slurp(run / rel)) {
      ++differing;
      detail += "; differs: " + rel.string();
    }
  }
  const bool hashes = model_hash(load_model(first / "model.bin").params) == model_hash(load_model(run / "model.bin").params);
  ok = ok && s1 == 0 && s2 == 0 && differing == 0 && files > 0 && hashes;
  return {ok, detail + "; 7 commands run twice: " + std::to_string(files) + " output files compared, " +
                  std::to_string(differing) + " differ, model hashes " + (hashes ? "identical" : "DIFFER") +
                  (s1 == 0 && s2 == 0 ? "" : ", a command FAILED")};
}

// --- 11 -------------------------------------------------------------------

Outcome round_trips(const BenchmarkRuns& runs) {
  const auto& model = runs.base.at(kSeeds[0]).trained.model;
  std::stringstream buf;
  save_model(buf, model);
  const std::string bytes = buf.str();
  const auto back = load_model(buf);
  std::stringstream again;
  save_model(again, back);
  const bool model_ok = back.params == model.params && back.scheme == model.scheme && again.str() == bytes;

  const auto& rules = runs.base.at(kSeeds[0]).trained.rules;
  const auto reimported = rule_list_from_json(nlohmann::json::parse(export_rules(rules, ExportFormat::Structured)));
  const bool rules_ok = reimported == rules && export_text(reimported) == export_text(rules);

  // Rendered conditions parse back to the same comparison and agree with the encoding.
  const auto& scheme = model.scheme;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> col(0, scheme.width() - 1);
  std::bernoulli_distribution neg(0.5), exact(0.2);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < kRenderSamples; ++i) {
    const std::size_t k = col(rng);
    const Polarity pol = neg(rng) ? Polarity::Negative : Polarity::Positive;
    const Column& column = scheme.column(k);
    std::vector<double> values(scheme.num_features());
    for (std::size_t f = 0; f < values.size(); ++f) {
      const auto& t = scheme.thresholds(f);
      values[f] = t[static_cast<std::size_t>(rng() % t.size())] + (exact(rng) ? 0.0 : jitter(rng) * 0.05);
    }
    const double v = values[column.feature];
    const auto encoded = scheme.encode(values);
    const Condition cond = column_condition(scheme, k, pol);
    const auto parsed = parse_condition(scheme, render_condition(scheme, k, pol));
    const bool bit = encoded[k] == 1;
    const bool literal = pol == Polarity::Positive ? bit : !bit;
    if (!parsed || !(*parsed == cond) || parsed->holds(v) != literal) ++failures;
  }
  return {model_ok && rules_ok && failures == 0,
          std::string("model save/load ") + (model_ok ? "bit-exact" : "MISMATCH") + "; rule export/import " +
              (rules_ok ? "lossless" : "LOSSY") + "; render/evaluate failures " + std::to_string(failures) + " / " +
              std::to_string(kRenderSamples)};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  fs::path work = fs::temp_directory_path() / "rlnet_acceptance";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") {
      cli = argv[i + 1];
    } else if (flag == "--work") {
      work = argv[i + 1];
    } else {
      std::cerr << "usage: rlnet_acceptance [--cli PATH] [--work DIR]\n";
      return 2;
    }
  }
  fs::create_directories(work);

  Report report;
  auto guarded = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    try {
      report.add(id, name, f());
    } catch (const std::exception& e) {
      report.add(id, name, {false, std::string("threw: ") + e.what()});
    }
  };

  guarded(1, "Gradient correctness", gradient_correctness);
  guarded(2, "Logical-semantics oracle", logical_semantics);
  guarded(3, "Hierarchy exclusivity", hierarchy_exclusivity);

  const Benchmark bench = make_benchmark();
  std::cout << "      benchmark: " << bench.table.size() << " samples (6 users), held-out user " << bench.held_out.size()
            << " samples, generated in " << fmt(bench.generation_seconds, 3) << " s" << std::endl;
  BenchmarkRuns runs;
  for (std::uint64_t seed : kSeeds) {
    TrainConfig config;
    config.seed = seed;
    runs.base[seed] = train_run(bench.table, config);
    TrainConfig flat = config;
    flat.lambda1_val = 0.0;
    runs.no_val_penalty[seed] = train_run(bench.table, flat);
    TrainConfig plain = config;
    plain.batch_norm = false;
    runs.no_bn[seed] = train_run(bench.table, plain);
  }

  guarded(4, "Extraction fidelity", [&] { return extraction_fidelity(runs); });
  guarded(5, "Synthetic benchmark learning", [&] { return benchmark_learning(bench, runs); });
  guarded(6, "Batch-norm ablation trend", [&] { return batch_norm_ablation(runs); });
  guarded(7, "Transfer-learning trend", [&] { return transfer_learning(bench, runs); });
  guarded(8, "Diagnostics shape", [&] { return diagnostics_shape(runs, work); });
  guarded(9, "DSP oracles", dsp_oracles);
  guarded(10, "Determinism", [&] { return determinism(cli, work); });
  guarded(11, "Round-trips", [&] { return round_trips(runs); });

  std::cout << (report.failed() == 0 ? "all criteria passed" : std::to_string(report.failed()) + " criterion(s) failed")
            << std::endl;
  return report.failed() == 0 ? 0 : 1;
}
