#pragma once

#include "rlnet/binarizer.hpp"
#include "rlnet/model.hpp"
#include "rlnet/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rlnet {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kCodeVersion[] = "0.1.0";

struct ModelProvenance {
  std::uint64_t seed = 0;
  std::string data_hash;
  std::string config_hash;
  std::string code_version = kCodeVersion;
};

/// Everything needed to reload a trained model and reproduce its predictions.
struct ModelFile {
  TrainConfig config;
  BinarizationScheme scheme;
  std::vector<std::string> class_names;
  RuleNetParams params;
  std::optional<AdamState> optimizer;
  ModelProvenance provenance;
};

/// Layout: "RLNETMDL", u32 version, u64 metadata length, metadata JSON, float64
/// tensors (little-endian, row-major, order listed in the metadata), SHA-256 of all
/// preceding bytes.
void save_model(std::ostream& out, const ModelFile& model);
void save_model(const std::filesystem::path& path, const ModelFile& model);

/// Throws DataError on a bad magic, version mismatch or checksum failure; IoError on read failure.
ModelFile load_model(std::istream& in);
ModelFile load_model(const std::filesystem::path& path);

/// SHA-256 over the parameter tensors; identical parameters give identical hashes.
std::string model_hash(const RuleNetParams& params);

}  // namespace rlnet
