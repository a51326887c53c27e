#pragma once

#include "rlnet/radar.hpp"
#include "rlnet/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace rlnet {

struct SimulateConfig {
  std::size_t users = 6;
  std::size_t samples_per_class = 100;
  std::size_t first_user = 0;
  std::uint64_t seed = 0;
  bool shifted = false;
};

struct SplitConfig {
  double train = 0.64;
  double val = 0.16;
  double test = 0.20;
  std::uint64_t seed = 0;

  std::array<double, 3> fractions() const { return {train, val, test}; }
};

struct PathsConfig {
  std::string data;
  std::string model;
  std::string base_model;
  std::string rules;
  std::string out_dir = ".";
};

/// Everything a command needs. Sections: train, radar, simulate, split, freeze, paths.
struct RunConfig {
  TrainConfig train;
  RadarConfig radar;
  SimulateConfig simulate;
  SplitConfig split;
  FreezeSpec freeze = FreezeSpec::transfer_default();
  PathsConfig paths;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const RadarConfig& c);
nlohmann::json to_json(const FreezeSpec& f);
nlohmann::json to_json(const RunConfig& c);

/// Strict readers: unknown keys and wrong types throw ConfigError naming the key.
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);
RadarConfig radar_config_from_json(const nlohmann::json& j);
FreezeSpec freeze_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Reads and parses a config file; malformed JSON is a ConfigError, a missing file an IoError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Hash of the canonical (sorted-key, compact) serialization.
std::string config_hash(const nlohmann::json& j);

}  // namespace rlnet
