#include "grn/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>

#include "grn/error.hpp"

namespace grn {

namespace {

constexpr char kMagic[8] = {'G', 'R', 'N', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw CheckpointError("cannot open '" + path + "' for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void finish() {
    out_.flush();
    if (!out_) throw CheckpointError("write to '" + path_ + "' failed");
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw CheckpointError("cannot open '" + path + "'");
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw CheckpointError("'" + path_ + "' is truncated");
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    auto n = u64();
    if (n > (1u << 20)) throw CheckpointError("'" + path_ + "' has a corrupt string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
};

CheckpointInfo read_header(Reader& r) {
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (!std::equal(magic, magic + 8, kMagic)) {
    throw CheckpointError("'" + r.path() + "' is not a checkpoint file");
  }
  std::uint8_t width = 0;
  r.bytes(&width, 1);
  if (width != 4 && width != 8) throw CheckpointError("unsupported scalar width " + std::to_string(width));
  CheckpointInfo info;
  info.precision_bits = 8u * width;
  for (auto n = r.u64(); n > 0; --n) {
    auto key = r.str();
    info.metadata[key] = r.str();
  }
  auto nv = r.u64();
  info.vocab.reserve(nv);
  for (; nv > 0; --nv) info.vocab.push_back(r.str());
  return info;
}

const std::string& need(const Metadata& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw CheckpointError("checkpoint metadata lacks '" + key + "'");
  return it->second;
}

std::size_t to_size(const Metadata& m, const std::string& key) {
  const auto& v = need(m, key);
  try {
    std::size_t pos = 0;
    auto out = std::stoull(v, &pos);
    if (pos == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw CheckpointError("checkpoint metadata '" + key + "' is not an integer: " + v);
}

bool to_bool(const Metadata& m, const std::string& key) {
  const auto& v = need(m, key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw CheckpointError("checkpoint metadata '" + key + "' is not a boolean: " + v);
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CheckpointInfo read_checkpoint_info(const std::string& path) {
  Reader r(path);
  return read_header(r);
}

Metadata model_metadata(const ModelConfig& c) {
  return {
      {"variant", variant_name(c.variant)},
      {"embedding-dim", std::to_string(c.word_dim)},
      {"grn.sentence-dim", std::to_string(c.sentence_dim)},
      {"grn.entity-dim", std::to_string(c.entity_dim)},
      {"grn.edge-embed-dim", std::to_string(c.edge_embed_dim)},
      {"grn.steps", std::to_string(c.steps)},
      {"grn.share-params", c.share_params ? "true" : "false"},
      {"freeze-embeddings", c.freeze_embeddings ? "true" : "false"},
      {"ablation", ablation_kind_name(c.ablation.kind)},
      {"ablation.fraction", real(c.ablation.fraction)},
      {"ablation.seed", std::to_string(c.ablation.seed)},
      {"seed", std::to_string(c.seed)},
  };
}

ModelConfig apply_metadata(const Metadata& meta, ModelConfig c) {
  auto variant = parse_variant(need(meta, "variant"));
  if (!variant) throw CheckpointError("checkpoint has unknown variant '" + need(meta, "variant") + "'");
  c.variant = *variant;
  c.word_dim = to_size(meta, "embedding-dim");
  c.sentence_dim = to_size(meta, "grn.sentence-dim");
  c.entity_dim = to_size(meta, "grn.entity-dim");
  c.edge_embed_dim = to_size(meta, "grn.edge-embed-dim");
  c.steps = to_size(meta, "grn.steps");
  c.share_params = to_bool(meta, "grn.share-params");
  c.freeze_embeddings = to_bool(meta, "freeze-embeddings");
  auto kind = parse_ablation_kind(need(meta, "ablation"));
  if (!kind) throw CheckpointError("checkpoint has unknown ablation '" + need(meta, "ablation") + "'");
  c.ablation.kind = *kind;
  c.ablation.fraction = std::stod(need(meta, "ablation.fraction"));
  c.ablation.seed = to_size(meta, "ablation.seed");
  c.seed = to_size(meta, "seed");
  return c;
}

template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& model, const Metadata& extra) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  const std::uint8_t width = sizeof(T);
  w.bytes(&width, 1);
  Metadata meta = extra;
  for (auto& [k, v] : model_metadata(model.config())) meta[k] = v;
  w.u64(meta.size());
  for (const auto& [k, v] : meta) {
    w.str(k);
    w.str(v);
  }
  const auto& words = model.vocab().words();
  w.u64(words.size());
  for (const auto& word : words) w.str(word);
  const auto& store = model.params();
  w.u64(store.size());
  for (const auto& [name, t] : store) {
    w.str(name);
    w.u64(t.rank());
    for (auto d : t.shape()) w.u64(d);
    w.bytes(t.values().data(), t.size() * sizeof(T));
  }
  w.finish();
}

template <typename T>
void load_parameters(const std::string& path, ParamStore<T>& store) {
  Reader r(path);
  auto info = read_header(r);
  if (info.precision_bits != 8 * sizeof(T)) {
    throw CheckpointError("'" + path + "' stores " + std::to_string(info.precision_bits) +
                          "-bit parameters, expected " + std::to_string(8 * sizeof(T)));
  }
  std::map<std::string, std::pair<ad::Shape, std::vector<T>>> stored;
  for (auto n = r.u64(); n > 0; --n) {
    auto name = r.str();
    ad::Shape shape(r.u64());
    for (auto& d : shape) d = r.u64();
    std::vector<T> values(ad::num_elements(shape));
    r.bytes(values.data(), values.size() * sizeof(T));
    stored.emplace(std::move(name), std::make_pair(std::move(shape), std::move(values)));
  }

  std::vector<std::string> bad;
  for (const auto& [name, t] : store) {
    auto it = stored.find(name);
    if (it == stored.end()) {
      bad.push_back(name + " (missing)");
    } else if (it->second.first != t.shape()) {
      bad.push_back(name + " (stored " + ad::shape_string(it->second.first) + ", expected " +
                    ad::shape_string(t.shape()) + ")");
    }
  }
  for (const auto& [name, entry] : stored) {
    if (!store.contains(name)) bad.push_back(name + " (unexpected)");
  }
  if (!bad.empty()) {
    std::string msg = "'" + path + "' does not match the model:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw CheckpointError(msg);
  }
  for (auto& [name, t] : store) {
    const auto& values = stored.at(name).second;
    std::copy(values.begin(), values.end(), t.mutable_values().begin());
  }
}

template <typename T>
Model<T> load_model(const std::string& path) {
  auto info = read_checkpoint_info(path);
  auto config = apply_metadata(info.metadata, ModelConfig{});
  Model<T> model(config, Vocabulary::from_words(info.vocab));
  load_parameters(path, model.params());
  return model;
}

template void save_checkpoint(const std::string&, const Model<float>&, const Metadata&);
template void save_checkpoint(const std::string&, const Model<double>&, const Metadata&);
template void load_parameters(const std::string&, ParamStore<float>&);
template void load_parameters(const std::string&, ParamStore<double>&);
template Model<float> load_model(const std::string&);
template Model<double> load_model(const std::string&);

}  // namespace grn
