#include "rlnet/model_io.hpp"

#include "rlnet/config.hpp"
#include "rlnet/rules.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rlnet {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "model files are written on little-endian hosts");

constexpr char kMagic[8] = {'R', 'L', 'N', 'E', 'T', 'M', 'D', 'L'};

struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows, cols;
};

template <typename Derived>
TensorRef ref(const std::string& name, Eigen::PlainObjectBase<Derived>& m) {
  return {name, m.data(), m.rows(), m.cols()};
}

std::vector<TensorRef> param_tensors(RuleNetParams& p, const std::string& prefix = "") {
  return {ref(prefix + "ws", p.ws),           ref(prefix + "loc", p.loc),         ref(prefix + "bn_scale", p.bn_scale),
          ref(prefix + "bn_shift", p.bn_shift), ref(prefix + "bn_mean", p.bn_mean), ref(prefix + "bn_var", p.bn_var),
          ref(prefix + "w_out", p.w_out)};
}

std::vector<TensorRef> grad_tensors(Gradients& g, const std::string& prefix) {
  return {ref(prefix + "ws", g.ws), ref(prefix + "loc", g.loc), ref(prefix + "bn_scale", g.bn_scale),
          ref(prefix + "bn_shift", g.bn_shift), ref(prefix + "w_out", g.w_out)};
}

void append_tensor(std::string& out, const TensorRef& t) {
  const auto bytes = static_cast<std::size_t>(t.rows * t.cols) * sizeof(double);
  out.append(reinterpret_cast<const char*>(t.data), bytes);
}

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }
void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }

class Cursor {
 public:
  explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw DataError("model file truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  template <typename T>
  T read() {
    T v;
    std::memcpy(&v, take(sizeof v).data(), sizeof v);
    return v;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json provenance_json(const ModelProvenance& p) {
  return {{"seed", p.seed}, {"data_hash", p.data_hash}, {"config_hash", p.config_hash}, {"code_version", p.code_version}};
}

}  // namespace

std::string model_hash(const RuleNetParams& params) {
  RuleNetParams copy = params;
  std::string bytes;
  for (const auto& t : param_tensors(copy)) {
    put_u64(bytes, static_cast<std::uint64_t>(t.rows));
    put_u64(bytes, static_cast<std::uint64_t>(t.cols));
    append_tensor(bytes, t);
  }
  return sha256_hex(bytes);
}

void save_model(std::ostream& out, const ModelFile& model) {
  model.params.validate();
  ModelFile m = model;
  std::vector<TensorRef> tensors = param_tensors(m.params);
  if (m.optimizer) {
    for (auto& t : grad_tensors(m.optimizer->m, "adam_m.")) tensors.push_back(t);
    for (auto& t : grad_tensors(m.optimizer->v, "adam_v.")) tensors.push_back(t);
  }
  json manifest = json::array();
  for (const auto& t : tensors) manifest.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  json meta = {{"config", to_json(m.config)},
               {"scheme", scheme_to_json(m.scheme)},
               {"class_names", m.class_names},
               {"provenance", provenance_json(m.provenance)},
               {"tensors", manifest},
               {"byte_order", "little"}};
  if (m.optimizer) meta["adam_step"] = m.optimizer->step;
  const std::string meta_text = meta.dump();

  std::string bytes(kMagic, sizeof kMagic);
  put_u32(bytes, kModelFormatVersion);
  put_u64(bytes, meta_text.size());
  bytes += meta_text;
  for (const auto& t : tensors) append_tensor(bytes, t);
  const std::string digest = sha256_hex(bytes);
  bytes += digest;
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("model write failed");
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_model(out, model);
}

ModelFile load_model(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("model read failed");
  const std::string bytes = buf.str();
  constexpr std::size_t kDigestChars = 64;
  if (bytes.size() < sizeof kMagic + 12 + kDigestChars) throw DataError("model file truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw DataError("not an rlnet model file (bad magic)");

  Cursor cur(bytes);
  cur.take(sizeof kMagic);
  const auto version = cur.read<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw DataError("model file format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  const std::string_view body(bytes.data(), bytes.size() - kDigestChars);
  if (sha256_hex(body) != std::string_view(bytes).substr(body.size())) {
    throw DataError("model file checksum mismatch");
  }

  const auto meta_len = cur.read<std::uint64_t>();
  json meta;
  try {
    meta = json::parse(cur.take(meta_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("model metadata: ") + e.what());
  }

  ModelFile m;
  try {
    m.config = train_config_from_json(meta.at("config"));
    m.scheme = scheme_from_json(meta.at("scheme"));
    m.class_names = meta.at("class_names").get<std::vector<std::string>>();
    const auto& p = meta.at("provenance");
    m.provenance.seed = p.at("seed").get<std::uint64_t>();
    m.provenance.data_hash = p.at("data_hash").get<std::string>();
    m.provenance.config_hash = p.at("config_hash").get<std::string>();
    m.provenance.code_version = p.at("code_version").get<std::string>();

    auto read_into = [&](Eigen::Index rows, Eigen::Index cols, double* dst) {
      const auto n = static_cast<std::size_t>(rows * cols) * sizeof(double);
      std::memcpy(dst, cur.take(n).data(), n);
    };

    std::size_t idx = 0;
    const auto& manifest = meta.at("tensors");
    auto next = [&](const std::string& name) -> std::pair<Eigen::Index, Eigen::Index> {
      if (idx >= manifest.size()) throw DataError("model file: missing tensor " + name);
      const auto& t = manifest.at(idx++);
      if (t.at("name").get<std::string>() != name) throw DataError("model file: expected tensor " + name);
      return {t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>()};
    };
    auto load_matrix = [&](const std::string& name, Matrix& dst) {
      const auto [r, c] = next(name);
      dst.resize(r, c);
      read_into(r, c, dst.data());
    };
    auto load_vector = [&](const std::string& name, Vector& dst) {
      const auto [r, c] = next(name);
      if (c != 1) throw DataError("model file: tensor " + name + " must be a column");
      dst.resize(r);
      read_into(r, c, dst.data());
    };
    auto load_params = [&](RuleNetParams& p) {
      load_matrix("ws", p.ws);
      load_matrix("loc", p.loc);
      load_vector("bn_scale", p.bn_scale);
      load_vector("bn_shift", p.bn_shift);
      load_vector("bn_mean", p.bn_mean);
      load_vector("bn_var", p.bn_var);
      load_matrix("w_out", p.w_out);
    };
    auto load_grads = [&](Gradients& g, const std::string& prefix) {
      load_matrix(prefix + "ws", g.ws);
      load_matrix(prefix + "loc", g.loc);
      load_vector(prefix + "bn_scale", g.bn_scale);
      load_vector(prefix + "bn_shift", g.bn_shift);
      load_matrix(prefix + "w_out", g.w_out);
    };
    load_params(m.params);
    if (meta.contains("adam_step")) {
      AdamState state;
      state.step = meta.at("adam_step").get<long>();
      load_grads(state.m, "adam_m.");
      load_grads(state.v, "adam_v.");
      m.optimizer = std::move(state);
    }
    if (idx != manifest.size()) throw DataError("model file: unexpected extra tensors");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model metadata: ") + e.what());
  }
  m.params.validate();
  if (m.params.inputs() != m.scheme.width()) throw DataError("model file: scheme width does not match parameters");
  if (m.class_names.size() != m.params.classes()) throw DataError("model file: class names do not match parameters");
  return m;
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace rlnet
