#include "grn/model.hpp"

#include <array>
#include <cmath>
#include <map>

#include "grn/error.hpp"

namespace grn {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Paragraph present(const Paragraph& p, std::span<const std::size_t> perm) {
  if (perm.size() != p.sentences.size()) {
    throw ContractError("presentation of " + std::to_string(perm.size()) + " slots for " +
                        std::to_string(p.sentences.size()) + " sentences");
  }
  Paragraph out{p.id, {}, p.split};
  out.sentences.reserve(perm.size());
  for (auto g : perm) out.sentences.push_back(p.sentences.at(g));
  return out;
}

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size(), perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= perm.size() || inv[perm[i]] != perm.size()) {
      throw ContractError("not a permutation");
    }
    inv[perm[i]] = i;
  }
  return inv;
}

std::vector<std::size_t> identity_permutation(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<std::size_t> random_permutation(std::size_t n, ad::Rng& rng) {
  auto v = identity_permutation(n);
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(ad::uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
  return v;
}

namespace {

constexpr std::array<const char*, 6> kGroups = {"embeddings", "sentence-encoder", "grn-sentence",
                                                "grn-entity", "grn-global",       "pointer"};

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

std::string parameter_group(const std::string& name) {
  if (starts_with(name, "embed.")) return "embeddings";
  if (starts_with(name, "encoder.")) return "sentence-encoder";
  if (starts_with(name, "decoder.")) return "pointer";
  if (starts_with(name, "grn.glob.") || starts_with(name, "grn.init.global.")) return "grn-global";
  if (starts_with(name, "grn.sent.") || starts_with(name, "grn.gate.ss.") ||
      starts_with(name, "grn.gate.se.") || starts_with(name, "grn.proj.se")) {
    return "grn-sentence";
  }
  if (starts_with(name, "grn.")) return "grn-entity";
  return "other";
}

template <typename T>
ParameterCount count_parameters(const ParamStore<T>& store) {
  std::map<std::string, std::size_t> by_group;
  ParameterCount out;
  for (const auto& [name, t] : store) {
    if (!t.requires_grad()) continue;
    by_group[parameter_group(name)] += t.size();
    out.total += t.size();
  }
  for (const char* g : kGroups) {
    if (auto it = by_group.find(g); it != by_group.end()) out.groups.emplace_back(g, it->second);
  }
  if (auto it = by_group.find("other"); it != by_group.end()) out.groups.emplace_back("other", it->second);
  return out;
}

template <typename T>
Model<T>::Model(ModelConfig config, Vocabulary vocab, const EmbeddingTable* pretrained)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      store_(std::make_unique<ParamStore<T>>()) {
  if (config_.word_dim == 0) throw ConfigError("embedding-dim must be positive");
  if (pretrained && pretrained->dimension() != config_.word_dim) {
    throw ConfigError("embedding table has dimension " + std::to_string(pretrained->dimension()) +
                      " but embedding-dim is " + std::to_string(config_.word_dim));
  }
  if (config_.variant == GraphVariant::F && config_.ablation.kind != Ablation::Kind::None) {
    throw ContractError("graph ablations are defined for SE and S graphs, not F");
  }
  ad::Rng rng(config_.seed);

  const std::size_t v = vocab_.size();
  const std::size_t dim = config_.word_dim;
  std::vector<T> table(v * dim, T(0));
  const double limit = std::sqrt(3.0 / static_cast<double>(dim));
  for (std::size_t w = 0; w < v; ++w) {
    if (w == Vocabulary::kPad) continue;
    for (std::size_t k = 0; k < dim; ++k) {
      const double r = (2.0 * ad::uniform01(rng) - 1.0) * limit;
      double value = r;
      if (pretrained) {
        value = w == Vocabulary::kUnk ? pretrained->unknown()[k] : pretrained->lookup(vocab_.word(w))[k];
      }
      table[w * dim + k] = static_cast<T>(value);
    }
  }
  embeddings_ = store_->add("embed.words", {v, dim}, std::move(table));
  if (config_.freeze_embeddings) embeddings_.set_requires_grad(false);

  sentence_encoder_ = std::make_unique<SentenceEncoder<T>>(*store_, dim, config_.sentence_dim, rng);

  GrnConfig g;
  g.sentence_dim = config_.sentence_dim;
  g.entity_dim = config_.entity_dim;
  g.edge_embed_dim = config_.edge_embed_dim;
  g.word_dim = dim;
  g.steps = config_.steps;
  g.entity_nodes = config_.variant == GraphVariant::SE;
  g.share_params = config_.share_params;
  grn_ = std::make_unique<GrnEncoder<T>>(*store_, g, rng);

  decoder_ = std::make_unique<PointerDecoder<T>>(*store_, config_.sentence_dim,
                                                 config_.sentence_dim, rng);
}

template <typename T>
std::vector<std::vector<std::size_t>> Model<T>::word_ids(const Paragraph& p) const {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(p.sentences.size());
  for (const auto& s : p.sentences) {
    auto& ids = out.emplace_back();
    ids.reserve(s.tokens.size());
    for (const auto& tok : s.tokens) ids.push_back(vocab_.id(tok.surface));
  }
  return out;
}

template <typename T>
SentenceEntityGraph Model<T>::graph_for(const Paragraph& p,
                                        std::span<const std::size_t> perm) const {
  auto graph = build_graph(present(p, perm), config_.variant);
  if (config_.ablation.kind == Ablation::Kind::None) return graph;
  Ablation a = config_.ablation;
  a.seed = config_.ablation.seed ^ fnv1a(p.id);
  return ablate(graph, a);
}

template <typename T>
typename Model<T>::Encoded Model<T>::encode(ad::Tape<T>& tape, const Paragraph& p,
                                            std::span<const std::size_t> perm, Mode mode,
                                            double dropout, ad::Rng& rng) const {
  if (p.sentences.empty()) throw DegenerateInputError("paragraph '" + p.id + "' has no sentences");
  Encoded out;
  out.k0 = sentence_encoder_->encode_paragraph(tape, embeddings_, word_ids(p), perm, mode, dropout,
                                               rng);
  out.graph = graph_for(p, perm);
  std::vector<Tensor> entity_words;
  for (const auto& e : out.graph.entities) {
    entity_words.push_back(ad::lookup(tape, embeddings_, vocab_.id(e.surface)));
  }
  out.state = grn_->encode(tape, out.graph, out.k0, entity_words, config_.steps);
  return out;
}

template <typename T>
typename Model<T>::Tensor Model<T>::nll(ad::Tape<T>& tape, const Paragraph& p,
                                        std::span<const std::size_t> perm, Mode mode,
                                        double dropout, ad::Rng& rng) const {
  auto enc = encode(tape, p, perm, mode, dropout, rng);
  auto gold_slots = invert_permutation(perm);
  return decoder_->score_gold(tape, enc.k0, enc.state.global, gold_slots, mode, dropout, rng);
}

template <typename T>
OrderPrediction Model<T>::predict(const Paragraph& p, std::span<const std::size_t> perm,
                                  std::size_t beam) const {
  ad::Tape<T> tape;
  ad::Rng unused;
  auto enc = encode(tape, p, perm, Mode::Eval, 0.0, unused);
  return decoder_->beam_decode(tape, enc.k0, enc.state.global, beam);
}

template ParameterCount count_parameters(const ParamStore<float>&);
template ParameterCount count_parameters(const ParamStore<double>&);
template class Model<float>;
template class Model<double>;

}  // namespace grn
