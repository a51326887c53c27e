#pragma once

#include "rlnet/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rlnet {

/// Gesture classes in label-index order.
const std::vector<std::string>& gesture_class_names();
/// The five per-gesture features in CSV column order, with their display units.
const std::vector<std::string>& gesture_feature_names();
const std::vector<std::string>& gesture_feature_units();

/// Continuous per-sample features with labels, as stored in the feature CSV
/// (`sample_id,label,range,doppler,azimuth,elevation,magnitude`).
struct FeatureTable {
  std::vector<std::string> ids;
  Labels labels;
  Matrix features;  // [M x 5]

  std::size_t size() const { return ids.size(); }
  FeatureTable subset(const std::vector<std::size_t>& rows) const;
  void append(const FeatureTable& other);
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct CsvReadResult {
  FeatureTable table;
  std::vector<RowError> errors;
};

/// Parses the feature CSV. Malformed rows are reported and skipped; a bad header or an
/// unreadable file throws. Labels may be class names or integer indices.
CsvReadResult parse_feature_csv(std::istream& in);
CsvReadResult read_feature_csv(const std::filesystem::path& path);

void write_feature_csv(std::ostream& out, const FeatureTable& table);
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);

/// User index encoded in a sample id of the form "u<user>-...", or -1.
int user_of(const std::string& sample_id);

}  // namespace rlnet
