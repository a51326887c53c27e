#include "rlnet/dataset.hpp"

#include "rlnet/binarizer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rlnet {

namespace {

constexpr const char* kHeader = "sample_id,label,range,doppler,azimuth,elevation,magnitude";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

int parse_label(std::string_view s) {
  const auto& names = gesture_class_names();
  const auto it = std::find(names.begin(), names.end(), s);
  if (it != names.end()) return static_cast<int>(it - names.begin());
  int value = -1;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return -1;
  if (value < 0 || value >= static_cast<int>(names.size())) return -1;
  return value;
}

}  // namespace

const std::vector<std::string>& gesture_class_names() {
  static const std::vector<std::string> names{"SwipeLeft", "SwipeRight", "SwipeUp", "SwipeDown", "Push"};
  return names;
}

const std::vector<std::string>& gesture_feature_names() {
  static const std::vector<std::string> names{"range", "doppler", "azimuth", "elevation", "magnitude"};
  return names;
}

const std::vector<std::string>& gesture_feature_units() {
  static const std::vector<std::string> units{"m", "m/s", "deg", "deg", ""};
  return units;
}

FeatureTable FeatureTable::subset(const std::vector<std::size_t>& rows) const {
  FeatureTable out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.ids.push_back(ids.at(rows[i]));
    out.labels.push_back(labels.at(rows[i]));
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void FeatureTable::append(const FeatureTable& other) {
  if (size() == 0) {
    *this = other;
    return;
  }
  if (other.features.cols() != features.cols()) throw ShapeError("FeatureTable::append: width mismatch");
  const Eigen::Index old_rows = features.rows();
  features.conservativeResize(old_rows + other.features.rows(), Eigen::NoChange);
  features.bottomRows(other.features.rows()) = other.features;
  ids.insert(ids.end(), other.ids.begin(), other.ids.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

CsvReadResult parse_feature_csv(std::istream& in) {
  CsvReadResult result;
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw DataError("feature CSV header mismatch: expected '" + std::string(kHeader) + "'");

  const std::size_t F = gesture_feature_names().size();
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != F + 2) {
      result.errors.push_back({line_no, "expected " + std::to_string(F + 2) + " fields, got " +
                                            std::to_string(fields.size())});
      continue;
    }
    const int label = parse_label(fields[1]);
    if (label < 0) {
      result.errors.push_back({line_no, "unknown label '" + std::string(fields[1]) + "'"});
      continue;
    }
    std::vector<double> values(F);
    bool ok = true;
    for (std::size_t f = 0; f < F && ok; ++f) {
      if (!parse_double(fields[f + 2], values[f])) {
        result.errors.push_back({line_no, "bad value in column '" + gesture_feature_names()[f] + "'"});
        ok = false;
      }
    }
    if (!ok) continue;
    result.table.ids.emplace_back(fields[0]);
    result.table.labels.push_back(label);
    rows.push_back(std::move(values));
  }
  result.table.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(F));
  for (std::size_t m = 0; m < rows.size(); ++m) {
    for (std::size_t f = 0; f < F; ++f) {
      result.table.features(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f)) = rows[m][f];
    }
  }
  return result;
}

CsvReadResult read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature CSV: " + path.string());
  return parse_feature_csv(in);
}

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
  out << kHeader << '\n';
  const auto& names = gesture_class_names();
  for (std::size_t m = 0; m < table.size(); ++m) {
    out << table.ids[m] << ',' << names.at(static_cast<std::size_t>(table.labels[m]));
    for (Eigen::Index f = 0; f < table.features.cols(); ++f) {
      out << ',' << format_number(table.features(static_cast<Eigen::Index>(m), f));
    }
    out << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature CSV: " + path.string());
  write_feature_csv(out, table);
  if (!out) throw IoError("write failed: " + path.string());
}

int user_of(const std::string& sample_id) {
  if (sample_id.size() < 2 || sample_id[0] != 'u') return -1;
  int user = -1;
  const char* begin = sample_id.data() + 1;
  auto [ptr, ec] = std::from_chars(begin, sample_id.data() + sample_id.size(), user);
  if (ec != std::errc{} || ptr == begin) return -1;
  return user;
}

}  // namespace rlnet
