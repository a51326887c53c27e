#include "rlnet/config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace rlnet {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + label() + "' must be an object");
  }

  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) type_error(key, "a number");
      out = v->get<double>();
    }
  }

  void get(const char* key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) type_error(key, "a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void get(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) type_error(key, "a boolean");
      out = v->get<bool>();
    }
  }

  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) type_error(key, "a string");
      out = v->get<std::string>();
    }
  }

  void get_seed(const char* key, std::uint64_t& out) {
    std::size_t v = out;
    get(key, v);
    out = v;
  }

  template <typename Enum>
  void get_enum(const char* key, Enum& out, std::initializer_list<std::pair<const char*, Enum>> names) {
    std::string s;
    if (!find(key)) return;
    get(key, s);
    for (const auto& [name, value] : names) {
      if (s == name) {
        out = value;
        return;
      }
    }
    throw ConfigError("config: '" + qualified(key) + "' has unknown value '" + s + "'");
  }

  const json* child(const char* key) { return find(key); }

  std::string qualified(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("config: unknown key '" + qualified(key.c_str()) + "'");
    }
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  [[noreturn]] void type_error(const char* key, const char* expected) const {
    throw ConfigError("config: '" + qualified(key) + "' must be " + expected);
  }

  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* activation_name(ActivationSource a) {
  switch (a) {
    case ActivationSource::Conjunction: return "conjunction";
    case ActivationSource::Normalized: return "normalized";
  }
  return "";
}
const char* penalty_name(SparsityPenalty p) {
  return p == SparsityPenalty::Stretched ? "stretched" : "expected_l0";
}
const char* average_name(F1Average a) { return a == F1Average::Macro ? "macro" : "weighted"; }
const char* validation_name(ValidationNetwork v) { return v == ValidationNetwork::Discrete ? "discrete" : "relaxed"; }

void read_train(Section& s, TrainConfig& c) {
  s.get("lr", c.lr);
  s.get("batch_size", c.batch_size);
  s.get("max_epochs", c.max_epochs);
  s.get("lambda1_train", c.lambda1_train);
  s.get("lambda1_val", c.lambda1_val);
  s.get("lambda2", c.lambda2);
  s.get("gamma", c.gamma);
  s.get("zeta", c.zeta);
  s.get("beta", c.beta);
  s.get("rules", c.rules);
  s.get("patience", c.patience);
  s.get_seed("seed", c.seed);
  s.get("adam_beta1", c.adam_beta1);
  s.get("adam_beta2", c.adam_beta2);
  s.get("adam_eps", c.adam_eps);
  s.get("ste_slope", c.ste_slope);
  s.get("thresholds_per_feature", c.thresholds_per_feature);
  s.get("batch_norm", c.batch_norm);
  s.get("hard_gates", c.hard_gates);
  s.get("bn_momentum", c.bn_momentum);
  s.get("bn_eps", c.bn_eps);
  s.get_enum("activation", c.activation,
             {{"conjunction", ActivationSource::Conjunction}, {"normalized", ActivationSource::Normalized}});
  s.get_enum("sparsity_penalty", c.sparsity_penalty,
             {{"stretched", SparsityPenalty::Stretched}, {"expected_l0", SparsityPenalty::ExpectedL0}});
  s.get_enum("f1_average", c.f1_average, {{"macro", F1Average::Macro}, {"weighted", F1Average::Weighted}});
  s.get_enum("validation_network", c.validation_network,
             {{"discrete", ValidationNetwork::Discrete}, {"relaxed", ValidationNetwork::Relaxed}});
}

void read_radar(Section& s, RadarConfig& c) {
  s.get("carrier_hz", c.carrier_hz);
  s.get("bandwidth_hz", c.bandwidth_hz);
  s.get("chirp_time_s", c.chirp_time_s);
  s.get("chirps", c.chirps);
  s.get("samples", c.samples);
  s.get("frames", c.frames);
  s.get("frame_rate_hz", c.frame_rate_hz);
  s.get("noise_power", c.noise_power);
  s.get("reference_amplitude", c.reference_amplitude);
  s.get("detection_kappa", c.detection_kappa);
  s.get("detection_peak_fraction", c.detection_peak_fraction);
}

void read_freeze(Section& s, FreezeSpec& f) {
  s.get("ws", f.ws);
  s.get("loc", f.loc);
  s.get("w_out", f.w_out);
  s.get("bn_affine", f.bn_affine);
  s.get("bn_stats", f.bn_stats);
}

json read_file_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  radar.validate();
  freeze.validate();
  if (simulate.users == 0 || simulate.samples_per_class == 0) {
    throw ConfigError("simulate: users and samples_per_class must be positive");
  }
  const auto f = split.fractions();
  for (double v : f) {
    if (!(v >= 0.0)) throw ConfigError("split: fractions must be non-negative");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");
  if (!(f[0] > 0.0) || !(f[1] > 0.0)) throw ConfigError("split: train and val fractions must be positive");
}

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"lambda1_train", c.lambda1_train},
          {"lambda1_val", c.lambda1_val},
          {"lambda2", c.lambda2},
          {"gamma", c.gamma},
          {"zeta", c.zeta},
          {"beta", c.beta},
          {"rules", c.rules},
          {"patience", c.patience},
          {"seed", c.seed},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"ste_slope", c.ste_slope},
          {"thresholds_per_feature", c.thresholds_per_feature},
          {"batch_norm", c.batch_norm},
          {"hard_gates", c.hard_gates},
          {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps},
          {"activation", activation_name(c.activation)},
          {"sparsity_penalty", penalty_name(c.sparsity_penalty)},
          {"f1_average", average_name(c.f1_average)},
          {"validation_network", validation_name(c.validation_network)}};
}

json to_json(const RadarConfig& c) {
  return {{"carrier_hz", c.carrier_hz},
          {"bandwidth_hz", c.bandwidth_hz},
          {"chirp_time_s", c.chirp_time_s},
          {"chirps", c.chirps},
          {"samples", c.samples},
          {"frames", c.frames},
          {"frame_rate_hz", c.frame_rate_hz},
          {"noise_power", c.noise_power},
          {"reference_amplitude", c.reference_amplitude},
          {"detection_kappa", c.detection_kappa},
          {"detection_peak_fraction", c.detection_peak_fraction}};
}

json to_json(const FreezeSpec& f) {
  return {{"ws", f.ws}, {"loc", f.loc}, {"w_out", f.w_out}, {"bn_affine", f.bn_affine}, {"bn_stats", f.bn_stats}};
}

json to_json(const RunConfig& c) {
  return {{"train", to_json(c.train)},
          {"radar", to_json(c.radar)},
          {"simulate",
           {{"users", c.simulate.users},
            {"samples_per_class", c.simulate.samples_per_class},
            {"first_user", c.simulate.first_user},
            {"seed", c.simulate.seed},
            {"shifted", c.simulate.shifted}}},
          {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}, {"seed", c.split.seed}}},
          {"freeze", to_json(c.freeze)},
          {"paths",
           {{"data", c.paths.data},
            {"model", c.paths.model},
            {"base_model", c.paths.base_model},
            {"rules", c.paths.rules},
            {"out_dir", c.paths.out_dir}}}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  Section s(j, "train");
  read_train(s, c);
  s.finish();
  return c;
}

RadarConfig radar_config_from_json(const json& j) {
  RadarConfig c;
  Section s(j, "radar");
  read_radar(s, c);
  s.finish();
  return c;
}

FreezeSpec freeze_from_json(const json& j) {
  FreezeSpec f{};
  Section s(j, "freeze");
  read_freeze(s, f);
  s.finish();
  return f;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  if (const json* v = root.child("train")) c.train = train_config_from_json(*v);
  if (const json* v = root.child("radar")) c.radar = radar_config_from_json(*v);
  if (const json* v = root.child("freeze")) c.freeze = freeze_from_json(*v);
  if (const json* v = root.child("simulate")) {
    Section s(*v, "simulate");
    s.get("users", c.simulate.users);
    s.get("samples_per_class", c.simulate.samples_per_class);
    s.get("first_user", c.simulate.first_user);
    s.get_seed("seed", c.simulate.seed);
    s.get("shifted", c.simulate.shifted);
    s.finish();
  }
  if (const json* v = root.child("split")) {
    Section s(*v, "split");
    s.get("train", c.split.train);
    s.get("val", c.split.val);
    s.get("test", c.split.test);
    s.get_seed("seed", c.split.seed);
    s.finish();
  }
  if (const json* v = root.child("paths")) {
    Section s(*v, "paths");
    s.get("data", c.paths.data);
    s.get("model", c.paths.model);
    s.get("base_model", c.paths.base_model);
    s.get("rules", c.paths.rules);
    s.get("out_dir", c.paths.out_dir);
    s.finish();
  }
  root.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from_json(read_file_json(path)); }

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string config_hash(const json& j) { return sha256_hex(j.dump()); }

}  // namespace rlnet
