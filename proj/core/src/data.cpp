#include "grn/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "grn/autodiff.hpp"
#include "grn/error.hpp"

namespace grn {

using ordered_json = nlohmann::ordered_json;

char role_char(Role r) {
  switch (r) {
    case Role::S: return 'S';
    case Role::O: return 'O';
    case Role::X: return 'X';
  }
  return '?';
}

std::optional<Role> parse_role(const std::string& s) {
  if (s == "S") return Role::S;
  if (s == "O") return Role::O;
  if (s == "X") return Role::X;
  return std::nullopt;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

std::vector<Paragraph> filter_split(const std::vector<Paragraph>& ps, Split split) {
  std::vector<Paragraph> out;
  for (const auto& p : ps)
    if (p.split == split) out.push_back(p);
  return out;
}

namespace {

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Parses one record; throws DataError with a message on rejection.
Paragraph parse_record(const std::string& line, std::size_t lineno,
                       std::vector<std::string>& warnings) {
  const std::string where = "line " + std::to_string(lineno) + ": ";
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + "malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(where + "record is not an object");
  Paragraph p;
  if (!j.contains("id") || !j["id"].is_string()) throw DataError(where + "missing string 'id'");
  p.id = j["id"].get<std::string>();
  if (j.contains("split")) {
    if (!j["split"].is_string()) throw DataError(where + "'split' must be a string");
    auto split = parse_split(j["split"].get<std::string>());
    if (!split) throw DataError(where + "unknown split '" + j["split"].get<std::string>() + "'");
    p.split = *split;
  } else {
    warnings.push_back(where + "missing 'split', defaulting to train");
  }
  if (!j.contains("sentences") || !j["sentences"].is_array() || j["sentences"].empty()) {
    throw DataError(where + "'sentences' must be a non-empty array");
  }
  for (const auto& js : j["sentences"]) {
    if (!js.is_array()) throw DataError(where + "sentence is not an array");
    if (js.empty()) throw DataError(where + "empty sentence");
    Sentence s;
    for (const auto& jt : js) {
      if (!jt.is_object() || !jt.contains("w") || !jt["w"].is_string()) {
        throw DataError(where + "token without string 'w'");
      }
      Token t;
      t.surface = lowercase(jt["w"].get<std::string>());
      if (jt.contains("n")) {
        if (!jt["n"].is_boolean()) throw DataError(where + "'n' must be a boolean");
        t.is_noun = jt["n"].get<bool>();
      }
      if (jt.contains("r")) {
        auto role = jt["r"].is_string() ? parse_role(jt["r"].get<std::string>()) : std::nullopt;
        if (!role) throw DataError(where + "role must be one of S, O, X");
        t.role = role;
        if (!t.is_noun) {
          warnings.push_back(where + "role on non-noun '" + t.surface + "', marking it a noun");
          t.is_noun = true;
        }
      } else if (t.is_noun) {
        warnings.push_back(where + "noun '" + t.surface + "' has no role, defaulting to X");
        t.role = Role::X;
      }
      s.tokens.push_back(std::move(t));
    }
    p.sentences.push_back(std::move(s));
  }
  return p;
}

}  // namespace

std::vector<Paragraph> parse_dataset(std::istream& in, LoadReport* report) {
  std::vector<Paragraph> out;
  LoadReport local;
  LoadReport& r = report ? *report : local;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      out.push_back(parse_record(line, lineno, r.warnings));
    } catch (const DataError& e) {
      r.rejected.push_back(e.what());
    }
  }
  return out;
}

std::vector<Paragraph> load_dataset(const std::string& path, DatasetFormat, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return parse_dataset(in, report);
}

std::string serialize_paragraph(const Paragraph& p) {
  ordered_json j;
  j["id"] = p.id;
  j["split"] = split_name(p.split);
  auto sentences = ordered_json::array();
  for (const auto& s : p.sentences) {
    auto js = ordered_json::array();
    for (const auto& t : s.tokens) {
      ordered_json jt;
      jt["w"] = t.surface;
      if (t.is_noun) jt["n"] = true;
      if (t.role) jt["r"] = std::string(1, role_char(*t.role));
      js.push_back(std::move(jt));
    }
    sentences.push_back(std::move(js));
  }
  j["sentences"] = std::move(sentences);
  return j.dump();
}

void write_dataset(std::ostream& out, const std::vector<Paragraph>& ps) {
  for (const auto& p : ps) out << serialize_paragraph(p) << '\n';
}

void write_dataset(const std::string& path, const std::vector<Paragraph>& ps) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset '" + path + "'");
  write_dataset(out, ps);
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : words_{"<pad>", "<unk>"} {
  ids_[words_[0]] = kPad;
  ids_[words_[1]] = kUnk;
}

Vocabulary Vocabulary::build(const std::vector<Paragraph>& train, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : train)
    for (const auto& s : p.sentences)
      for (const auto& t : s.tokens) ++counts[t.surface];
  Vocabulary v;
  for (const auto& [w, c] : counts) {
    if (c < min_count || v.ids_.count(w)) continue;
    v.ids_[w] = v.words_.size();
    v.words_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  if (words.size() < 2 || words[0] != "<pad>" || words[1] != "<unk>") {
    throw CheckpointError("vocabulary must start with <pad>, <unk>");
  }
  Vocabulary v;
  for (std::size_t i = 2; i < words.size(); ++i) {
    if (v.ids_.count(words[i])) throw CheckpointError("duplicate vocabulary word '" + words[i] + "'");
    v.ids_[words[i]] = v.words_.size();
    v.words_.push_back(words[i]);
  }
  return v;
}

std::size_t Vocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

EmbeddingTable::EmbeddingTable(std::size_t dimension)
    : dim_(dimension), unknown_(dimension, 0.0), padding_(dimension, 0.0) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw DimensionError("embedding for '" + word + "' has " + std::to_string(vec.size()) +
                         " values, expected " + std::to_string(dim_));
  }
  table_[word] = std::move(vec);
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& word) const {
  auto it = table_.find(word);
  return it == table_.end() ? unknown_ : it->second;
}

void EmbeddingTable::finalize_unknown() {
  std::fill(unknown_.begin(), unknown_.end(), 0.0);
  if (table_.empty()) return;
  // Sum in sorted-key order so the result does not depend on hash layout.
  std::vector<const std::string*> keys;
  for (const auto& [w, _] : table_) keys.push_back(&w);
  std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
  for (const auto* k : keys) {
    const auto& v = table_.at(*k);
    for (std::size_t i = 0; i < dim_; ++i) unknown_[i] += v[i];
  }
  for (auto& x : unknown_) x /= static_cast<double>(table_.size());
}

EmbeddingTable parse_embeddings(std::istream& in, std::size_t dimension,
                                std::vector<std::string>* warnings) {
  EmbeddingTable table(dimension);
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> vec;
    double x;
    while (ls >> x) vec.push_back(x);
    if (first) {
      first = false;
      if (vec.size() != dimension) {
        throw ConfigError("embedding file has dimension " + std::to_string(vec.size()) +
                          " but --embedding-dim is " + std::to_string(dimension));
      }
    }
    if (vec.size() != dimension || !ls.eof()) {
      if (warnings) {
        warnings->push_back("embeddings line " + std::to_string(lineno) + ": expected " +
                            std::to_string(dimension) + " values, skipped");
      }
      continue;
    }
    table.insert(lowercase(word), std::move(vec));
  }
  table.finalize_unknown();
  return table;
}

EmbeddingTable load_embeddings(const std::string& path, std::size_t dimension,
                               std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings '" + path + "'");
  return parse_embeddings(in, dimension, warnings);
}

Sentence annotate_heuristic(const std::vector<std::string>& raw,
                            const std::unordered_set<std::string>& noun_lexicon) {
  Sentence s;
  for (const auto& w : raw) {
    Token t;
    t.surface = lowercase(w);
    if (noun_lexicon.count(t.surface)) {
      t.is_noun = true;
      t.role = Role::X;
    }
    s.tokens.push_back(std::move(t));
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string>& noun_list() {
  static const std::vector<std::string> nouns = {
      "dad",     "game",    "crowd",   "ball",    "team",    "coach",   "field",   "ticket",
      "mother",  "sister",  "brother", "friend",  "teacher", "doctor",  "garden",  "house",
      "river",   "bridge",  "forest",  "mountain", "village", "market", "letter",  "story",
      "song",    "window",  "door",    "kitchen", "table",   "chair",   "book",    "lamp",
      "car",     "train",   "bus",     "ship",    "plane",   "road",    "city",    "school",
      "office",  "report",  "paper",   "model",   "method",  "result",  "dataset", "theory",
      "engine",  "signal",  "network", "graph",   "node",    "edge",    "sensor",  "camera",
      "picture", "painter", "artist",  "museum",  "concert", "guitar",  "piano",   "singer",
      "farmer",  "horse",   "cow",     "dog",     "cat",     "bird",    "fish",    "apple",
      "bread",   "cake",    "coffee",  "tea",     "party",   "wedding", "holiday", "beach",
      "island",  "storm",   "rain",    "snow",    "winter",  "summer",  "morning", "evening",
      "king",    "queen",   "castle",  "knight",  "dragon",  "sword",   "shield",  "army",
      "robot",   "rocket",  "planet",  "star",    "moon",    "sun",     "ocean",   "wave",
      "baker",   "pilot",   "nurse",   "judge",   "lawyer",  "police",  "thief",   "jewel",
      "clock",   "key",     "box",     "bag",     "coat",    "hat",     "shoe",    "ring"};
  return nouns;
}

const std::vector<std::string>& verb_list() {
  static const std::vector<std::string> verbs = {
      "saw",    "found",  "liked",   "moved",   "took",    "built",   "visited", "called",
      "watched", "helped", "carried", "painted", "opened", "closed",  "bought",  "sold",
      "cleaned", "fixed", "followed", "met",    "chose",   "showed",  "kept",    "lost"};
  return verbs;
}

std::size_t draw(ad::Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(ad::uniform01(rng) * static_cast<double>(hi - lo + 1));
}

Token noun(const std::string& w, Role r) { return Token{w, true, r}; }
Token word(const std::string& w) { return Token{w, false, std::nullopt}; }

void validate(const SyntheticConfig& c) {
  auto [mlo, mhi] = c.sentences;
  auto [elo, ehi] = c.entities;
  if (c.paragraphs == 0) throw ConfigError("synthetic corpus needs at least one paragraph");
  if (mlo == 0 || mlo > mhi) throw ConfigError("sentence range must satisfy 1 <= lo <= hi");
  if (elo > ehi) throw ConfigError("entity range must satisfy lo <= hi");
  if (mlo < 2) {
    throw ConfigError("synthetic paragraphs need at least 2 sentences to share an entity");
  }
  if (mhi - 1 > ehi) {
    throw ConfigError("a " + std::to_string(mhi) + "-sentence chain needs " +
                      std::to_string(mhi - 1) + " shared entities but the entity range tops out at " +
                      std::to_string(ehi));
  }
  if (c.noun_pool > noun_list().size()) {
    throw ConfigError("noun pool larger than the built-in lexicon (" +
                      std::to_string(noun_list().size()) + ")");
  }
  if (c.noun_pool < ehi + 2) {
    throw ConfigError("noun pool of " + std::to_string(c.noun_pool) + " cannot supply " +
                      std::to_string(ehi) + " entities plus two single-mention nouns");
  }
  if (c.valid_fraction < 0 || c.test_fraction < 0 || c.valid_fraction + c.test_fraction >= 1.0) {
    throw ConfigError("valid and test fractions must be non-negative and sum below 1");
  }
}

}  // namespace

std::vector<Paragraph> generate_synthetic(const SyntheticConfig& config) {
  validate(config);
  ad::Rng rng(config.seed);
  const auto& nouns = noun_list();
  const auto& verbs = verb_list();
  const std::size_t n = config.paragraphs;
  const auto n_test = static_cast<std::size_t>(config.test_fraction * static_cast<double>(n));
  const auto n_valid = static_cast<std::size_t>(config.valid_fraction * static_cast<double>(n));
  const std::size_t n_train = n - n_test - n_valid;

  std::vector<Paragraph> out;
  out.reserve(n);
  for (std::size_t pi = 0; pi < n; ++pi) {
    const std::size_t m = draw(rng, config.sentences.first, config.sentences.second);
    const std::size_t chain = m - 1;
    const std::size_t e = draw(rng, std::max(config.entities.first, chain), config.entities.second);

    // Distinct nouns: e entities, then a single-mention opener and closer.
    std::vector<std::size_t> pool(config.noun_pool);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < e + 2; ++i) {
      std::swap(pool[i], pool[draw(rng, i, pool.size() - 1)]);
    }
    auto pick = [&](std::size_t i) -> const std::string& { return nouns[pool[i]]; };

    std::vector<std::vector<std::size_t>> extras(m);  // extra entity mentions per sentence
    for (std::size_t x = chain; x < e; ++x) {
      extras[draw(rng, 0, m - 1)].push_back(x);
      extras[draw(rng, 0, m - 1)].push_back(x);
    }

    Paragraph p;
    p.id = "syn-" + std::to_string(config.seed) + "-" + std::to_string(pi);
    p.split = pi < n_train ? Split::Train : (pi < n_train + n_valid ? Split::Valid : Split::Test);
    for (std::size_t k = 0; k < m; ++k) {
      Sentence s;
      if (config.positional_cues && k == 0) s.tokens.push_back(word("initially"));
      if (config.positional_cues && k + 1 == m) s.tokens.push_back(word("finally"));
      s.tokens.push_back(word("the"));
      s.tokens.push_back(noun(k == 0 ? pick(e) : pick(k - 1), Role::S));
      s.tokens.push_back(word(verbs[draw(rng, 0, verbs.size() - 1)]));
      s.tokens.push_back(word("the"));
      s.tokens.push_back(noun(k + 1 == m ? pick(e + 1) : pick(k), Role::O));
      for (auto x : extras[k]) {
        s.tokens.push_back(word("near"));
        s.tokens.push_back(word("the"));
        s.tokens.push_back(noun(pick(x), Role::X));
      }
      s.tokens.push_back(word("."));
      p.sentences.push_back(std::move(s));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace grn
