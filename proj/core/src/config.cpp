#include "grn/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "grn/error.hpp"

namespace grn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] != '-') {
      auto out = std::stoull(v, &pos);
      if (pos == v.size()) return out;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    auto out = std::stod(v, &pos);
    if (pos == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

bool to_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_key_values(in, path);
}

const std::vector<std::pair<std::string, std::string>>& config_defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"seed", "1"},
      {"precision", "64"},
      {"data", ""},
      {"embeddings", ""},
      {"embedding-dim", "100"},
      {"min-count", "1"},
      {"freeze-embeddings", "false"},
      {"variant", "SE"},
      {"grn.steps", "3"},
      {"grn.sentence-dim", "512"},
      {"grn.entity-dim", "150"},
      {"grn.edge-embed-dim", "50"},
      {"grn.share-params", "false"},
      {"ablation", "none"},
      {"ablation.fraction", "0"},
      {"batch-size", "16"},
      {"adadelta.rho", "0.95"},
      {"adadelta.epsilon", "1e-6"},
      {"learning-rate", "1.0"},
      {"l2", "1e-5"},
      {"dropout", "0.5"},
      {"max-epochs", "50"},
      {"patience", "10"},
      {"beam-size", "64"},
      {"valid-beam-size", "64"},
      {"bootstrap", "0"},
      {"checkpoint", ""},
      {"synthetic.paragraphs", "200"},
      {"synthetic.min-sentences", "3"},
      {"synthetic.max-sentences", "5"},
      {"synthetic.min-entities", "4"},
      {"synthetic.max-entities", "8"},
      {"synthetic.valid-fraction", "0.1"},
      {"synthetic.test-fraction", "0.1"},
      {"synthetic.noun-pool", "80"},
      {"synthetic.positional-cues", "true"},
  };
  return defaults;
}

RunConfig resolve_config(const KeyValues& values) {
  KeyValues v;
  for (const auto& [k, d] : config_defaults()) v[k] = d;
  for (const auto& [k, x] : values) {
    if (!v.count(k)) throw ConfigError("unknown configuration key '" + k + "'");
    v[k] = x;
  }

  RunConfig c;
  c.seed = to_u64("seed", v["seed"]);
  c.precision = static_cast<unsigned>(to_u64("precision", v["precision"]));
  require(c.precision == 32 || c.precision == 64, "precision must be 32 or 64");
  c.data = v["data"];
  c.embeddings = v["embeddings"];
  c.min_count = to_u64("min-count", v["min-count"]);
  require(c.min_count >= 1, "min-count must be at least 1");
  c.beam_size = to_u64("beam-size", v["beam-size"]);
  require(c.beam_size >= 1, "beam-size must be at least 1");
  c.bootstrap = to_u64("bootstrap", v["bootstrap"]);

  auto& m = c.model;
  auto variant = parse_variant(v["variant"]);
  require(variant.has_value(), "variant must be SE, S or F, got '" + v["variant"] + "'");
  m.variant = *variant;
  m.word_dim = to_u64("embedding-dim", v["embedding-dim"]);
  require(m.word_dim > 0, "embedding-dim must be positive");
  m.sentence_dim = to_u64("grn.sentence-dim", v["grn.sentence-dim"]);
  require(m.sentence_dim > 0 && m.sentence_dim % 2 == 0,
          "grn.sentence-dim must be a positive even number");
  m.entity_dim = to_u64("grn.entity-dim", v["grn.entity-dim"]);
  m.edge_embed_dim = to_u64("grn.edge-embed-dim", v["grn.edge-embed-dim"]);
  require(m.entity_dim > 0 && m.edge_embed_dim > 0,
          "grn.entity-dim and grn.edge-embed-dim must be positive");
  m.steps = to_u64("grn.steps", v["grn.steps"]);
  m.share_params = to_flag("grn.share-params", v["grn.share-params"]);
  m.freeze_embeddings = to_flag("freeze-embeddings", v["freeze-embeddings"]);
  auto kind = parse_ablation_kind(v["ablation"]);
  require(kind.has_value(), "unknown ablation '" + v["ablation"] + "'");
  m.ablation.kind = *kind;
  m.ablation.fraction = to_real("ablation.fraction", v["ablation.fraction"]);
  require(m.ablation.fraction >= 0.0 && m.ablation.fraction <= 1.0,
          "ablation.fraction must lie in [0, 1]");
  m.ablation.seed = c.seed;
  m.seed = c.seed;
  require(m.variant != GraphVariant::F || m.ablation.kind == Ablation::Kind::None,
          "graph ablations are defined for SE and S graphs, not F");
  require(m.ablation.kind != Ablation::Kind::RemoveEdgeLabels || m.variant == GraphVariant::SE,
          "remove-edge-labels applies to SE graphs only");
  require(!m.share_params || m.variant == GraphVariant::SE,
          "grn.share-params applies to SE graphs only");

  auto& t = c.train;
  t.batch_size = to_u64("batch-size", v["batch-size"]);
  require(t.batch_size >= 1, "batch-size must be at least 1");
  t.rho = to_real("adadelta.rho", v["adadelta.rho"]);
  require(t.rho >= 0.0 && t.rho < 1.0, "adadelta.rho must lie in [0, 1)");
  t.epsilon = to_real("adadelta.epsilon", v["adadelta.epsilon"]);
  require(t.epsilon > 0.0, "adadelta.epsilon must be positive");
  t.learning_rate = to_real("learning-rate", v["learning-rate"]);
  require(t.learning_rate > 0.0, "learning-rate must be positive");
  t.l2 = to_real("l2", v["l2"]);
  require(t.l2 >= 0.0, "l2 must be non-negative");
  t.dropout = to_real("dropout", v["dropout"]);
  require(t.dropout >= 0.0 && t.dropout < 1.0, "dropout must lie in [0, 1)");
  t.max_epochs = to_u64("max-epochs", v["max-epochs"]);
  t.patience = to_u64("patience", v["patience"]);
  t.valid_beam_size = to_u64("valid-beam-size", v["valid-beam-size"]);
  require(t.valid_beam_size >= 1, "valid-beam-size must be at least 1");
  t.seed = c.seed;
  t.checkpoint = v["checkpoint"];

  auto& s = c.synthetic;
  s.seed = c.seed;
  s.paragraphs = to_u64("synthetic.paragraphs", v["synthetic.paragraphs"]);
  s.sentences = {to_u64("synthetic.min-sentences", v["synthetic.min-sentences"]),
                 to_u64("synthetic.max-sentences", v["synthetic.max-sentences"])};
  s.entities = {to_u64("synthetic.min-entities", v["synthetic.min-entities"]),
                to_u64("synthetic.max-entities", v["synthetic.max-entities"])};
  s.valid_fraction = to_real("synthetic.valid-fraction", v["synthetic.valid-fraction"]);
  s.test_fraction = to_real("synthetic.test-fraction", v["synthetic.test-fraction"]);
  s.noun_pool = to_u64("synthetic.noun-pool", v["synthetic.noun-pool"]);
  s.positional_cues = to_flag("synthetic.positional-cues", v["synthetic.positional-cues"]);
  return c;
}

RunConfig resolve_config(const std::vector<KeyValues>& layers) {
  KeyValues merged;
  for (const auto& layer : layers)
    for (const auto& [k, x] : layer) merged[k] = x;
  return resolve_config(merged);
}

KeyValues to_key_values(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  const auto& s = c.synthetic;
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  return {
      {"seed", std::to_string(c.seed)},
      {"precision", std::to_string(c.precision)},
      {"data", c.data},
      {"embeddings", c.embeddings},
      {"embedding-dim", std::to_string(m.word_dim)},
      {"min-count", std::to_string(c.min_count)},
      {"freeze-embeddings", flag(m.freeze_embeddings)},
      {"variant", variant_name(m.variant)},
      {"grn.steps", std::to_string(m.steps)},
      {"grn.sentence-dim", std::to_string(m.sentence_dim)},
      {"grn.entity-dim", std::to_string(m.entity_dim)},
      {"grn.edge-embed-dim", std::to_string(m.edge_embed_dim)},
      {"grn.share-params", flag(m.share_params)},
      {"ablation", ablation_kind_name(m.ablation.kind)},
      {"ablation.fraction", real(m.ablation.fraction)},
      {"batch-size", std::to_string(t.batch_size)},
      {"adadelta.rho", real(t.rho)},
      {"adadelta.epsilon", real(t.epsilon)},
      {"learning-rate", real(t.learning_rate)},
      {"l2", real(t.l2)},
      {"dropout", real(t.dropout)},
      {"max-epochs", std::to_string(t.max_epochs)},
      {"patience", std::to_string(t.patience)},
      {"beam-size", std::to_string(c.beam_size)},
      {"valid-beam-size", std::to_string(t.valid_beam_size)},
      {"bootstrap", std::to_string(c.bootstrap)},
      {"checkpoint", t.checkpoint},
      {"synthetic.paragraphs", std::to_string(s.paragraphs)},
      {"synthetic.min-sentences", std::to_string(s.sentences.first)},
      {"synthetic.max-sentences", std::to_string(s.sentences.second)},
      {"synthetic.min-entities", std::to_string(s.entities.first)},
      {"synthetic.max-entities", std::to_string(s.entities.second)},
      {"synthetic.valid-fraction", real(s.valid_fraction)},
      {"synthetic.test-fraction", real(s.test_fraction)},
      {"synthetic.noun-pool", std::to_string(s.noun_pool)},
      {"synthetic.positional-cues", flag(s.positional_cues)},
  };
}

std::string config_digest(const RunConfig& c) {
  std::string canon;
  for (const auto& [k, v] : to_key_values(c)) canon += k + "=" + v + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

}  // namespace grn
