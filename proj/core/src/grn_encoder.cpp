#include "grn/grn_encoder.hpp"

#include <numeric>

#include "grn/error.hpp"

namespace grn {

template <typename T>
GrnEncoder<T>::GrnEncoder(ParamStore<T>& store, const GrnConfig& config, ad::Rng& rng)
    : config_(config) {
  const std::size_t d = config.sentence_dim;
  const std::size_t de = config.entity_dim;
  const std::size_t le = config.edge_embed_dim;
  if (d == 0) throw ConfigError("grn.sentence-dim must be positive");
  if (config.share_params && !config.entity_nodes) {
    throw ConfigError("grn.share-params requires entity nodes (SE graph)");
  }
  if (config.share_params && de != d) {
    throw ConfigError("grn.share-params requires grn.entity-dim == grn.sentence-dim (" +
                      std::to_string(de) + " vs " + std::to_string(d) + ")");
  }

  init_global_W_ = store.add_uniform("grn.init.global.W", {d, d}, rng);
  init_global_b_ = store.add_zeros("grn.init.global.b", {d});
  gate_ss_W_ = store.add_uniform("grn.gate.ss.W", {d, 2 * d}, rng);
  gate_ss_b_ = store.add_zeros("grn.gate.ss.b", {d});

  const std::size_t sentence_input = config.entity_nodes ? 4 * d : 3 * d;
  sentence_bank_ = GatedBank<T>::create(store, "grn.sent", sentence_input, d, rng);

  auto& gb = global_bank_;
  gb.Wsr = store.add_uniform("grn.glob.Wsr", {d, d}, rng);
  gb.Wsz = store.add_uniform("grn.glob.Wsz", {d, d}, rng);
  gb.Wsu = store.add_uniform("grn.glob.Wsu", {d, d}, rng);
  gb.Ugr = store.add_uniform("grn.glob.Ugr", {d, d}, rng);
  gb.Ugz = store.add_uniform("grn.glob.Ugz", {d, d}, rng);
  gb.Ugu = store.add_uniform("grn.glob.Ugu", {d, d}, rng);
  gb.br = store.add_zeros("grn.glob.br", {d});
  gb.bz = store.add_zeros("grn.glob.bz", {d});
  gb.bu = store.add_zeros("grn.glob.bu", {d});

  if (!config.entity_nodes) return;
  if (de == 0 || le == 0) throw ConfigError("grn.entity-dim and grn.edge-embed-dim must be positive");

  init_entity_W_ = store.add_uniform("grn.init.entity.W", {de, config.word_dim}, rng);
  init_entity_b_ = store.add_zeros("grn.init.entity.b", {de});
  gate_se_W_ = store.add_uniform("grn.gate.se.W", {de, d + de + le}, rng);
  gate_se_b_ = store.add_zeros("grn.gate.se.b", {de});
  gate_es_W_ = store.add_uniform("grn.gate.es.W", {d, de + d + le}, rng);
  gate_es_b_ = store.add_zeros("grn.gate.es.b", {d});
  proj_se_ = store.add_uniform("grn.proj.se", {d, de}, rng);
  proj_es_ = store.add_uniform("grn.proj.es", {de, d}, rng);
  labels_ = store.add_uniform("grn.label", {kEdgeLabelCount, le}, rng);
  gb.Wer = store.add_uniform("grn.glob.Wer", {d, de}, rng);
  gb.Wez = store.add_uniform("grn.glob.Wez", {d, de}, rng);
  gb.Weu = store.add_uniform("grn.glob.Weu", {d, de}, rng);

  entity_bank_ = config.share_params
                     ? sentence_bank_
                     : GatedBank<T>::create(store, "grn.ent", config.word_dim + de + d, de, rng);
}

template <typename T>
typename GrnEncoder<T>::Tensor GrnEncoder<T>::zeros_like_sentence(const GrnState<T>& state) const {
  return state.global.tape()->zeros({config_.sentence_dim});
}

template <typename T>
typename GrnEncoder<T>::Tensor GrnEncoder<T>::label_vector(const Tensor& anchor,
                                                           EdgeLabel label) const {
  return ad::lookup(*anchor.tape(), labels_, static_cast<std::size_t>(label));
}

template <typename T>
GrnState<T> GrnEncoder<T>::init_state(ad::Tape<T>& tape, std::span<const Tensor> k0,
                                      const SentenceEntityGraph& graph,
                                      std::span<const Tensor> entity_words) const {
  if (k0.size() != graph.num_sentences) {
    throw ContractError("K0 has " + std::to_string(k0.size()) + " rows for a graph of " +
                        std::to_string(graph.num_sentences) + " sentences");
  }
  if (k0.empty()) throw DegenerateInputError("paragraph without sentences");
  const std::size_t n_entities = config_.entity_nodes ? graph.num_entities() : 0;
  if (config_.entity_nodes && entity_words.size() != n_entities) {
    throw ContractError("expected " + std::to_string(n_entities) + " entity embeddings, got " +
                        std::to_string(entity_words.size()));
  }
  for (const auto& row : k0) {
    if (row.tape() != &tape) throw ContractError("K0 rows must be recorded on the encoding tape");
  }
  GrnState<T> s;
  s.initial_sentences.assign(k0.begin(), k0.end());
  s.sentences = s.initial_sentences;
  for (std::size_t j = 0; j < n_entities; ++j) {
    s.entity_words.push_back(entity_words[j]);
    s.initial_entities.push_back(
        ad::tanh(ad::matmul(init_entity_W_, entity_words[j]) + init_entity_b_));
  }
  s.entities = s.initial_entities;
  s.global = ad::tanh(ad::matmul(init_global_W_, ad::mean<T>(k0)) + init_global_b_);
  return s;
}

template <typename T>
SentenceMessages<T> GrnEncoder<T>::message_to_sentence(std::size_t i, const GrnState<T>& state,
                                                       const SentenceEntityGraph& graph) const {
  if (i >= state.sentences.size()) throw ContractError("sentence index out of range");
  auto& tape = *state.global.tape();
  const auto& self = state.sentences[i];
  SentenceMessages<T> out;

  std::vector<Tensor> terms;
  for (auto other : graph.sentence_neighbors[i]) {
    const Tensor pair[] = {self, state.sentences[other]};
    auto gate = ad::sigmoid(ad::matmul(gate_ss_W_, ad::concat<T>(pair)) + gate_ss_b_);
    terms.push_back(gate * state.sentences[other]);
  }
  out.from_sentences = terms.empty() ? tape.zeros({config_.sentence_dim}) : ad::add_n<T>(terms);

  if (config_.entity_nodes) {
    terms.clear();
    for (const auto& nb : graph.entity_neighbors[i]) {
      const auto& eps = state.entities[nb.index];
      const Tensor parts[] = {self, eps, label_vector(self, nb.label)};
      auto gate = ad::sigmoid(ad::matmul(gate_se_W_, ad::concat<T>(parts)) + gate_se_b_);
      terms.push_back(gate * eps);
    }
    out.from_entities = terms.empty() ? tape.zeros({config_.entity_dim}) : ad::add_n<T>(terms);
  }
  return out;
}

template <typename T>
typename GrnEncoder<T>::Tensor GrnEncoder<T>::update_sentence(
    std::size_t i, const GrnState<T>& state, const SentenceMessages<T>& messages) const {
  if (i >= state.sentences.size()) throw ContractError("sentence index out of range");
  std::vector<Tensor> xi{state.initial_sentences[i], messages.from_sentences};
  if (config_.entity_nodes) xi.push_back(ad::matmul(proj_se_, messages.from_entities));
  xi.push_back(state.global);
  return gated_update(sentence_bank_, ad::concat<T>(xi), state.sentences[i]);
}

template <typename T>
typename GrnEncoder<T>::Tensor GrnEncoder<T>::update_entity(std::size_t j, const GrnState<T>& state,
                                                            const SentenceEntityGraph& graph) const {
  if (!config_.entity_nodes || j >= state.entities.size()) {
    throw ContractError("entity index out of range");
  }
  const auto& self = state.entities[j];
  std::vector<Tensor> terms;
  for (const auto& nb : graph.sentences_of_entity[j]) {
    const auto& kappa = state.sentences[nb.index];
    const Tensor parts[] = {self, kappa, label_vector(self, nb.label)};
    auto gate = ad::sigmoid(ad::matmul(gate_es_W_, ad::concat<T>(parts)) + gate_es_b_);
    terms.push_back(gate * kappa);
  }
  auto message = terms.empty() ? zeros_like_sentence(state) : ad::add_n<T>(terms);
  auto projected = ad::matmul(proj_es_, message);
  if (config_.share_params) {
    const Tensor xi[] = {state.initial_entities[j], projected, zeros_like_sentence(state),
                         state.global};
    return gated_update(sentence_bank_, ad::concat<T>(xi), self);
  }
  const Tensor xi[] = {state.entity_words[j], projected, state.global};
  return gated_update(entity_bank_, ad::concat<T>(xi), self);
}

template <typename T>
typename GrnEncoder<T>::Tensor GrnEncoder<T>::update_global(const GrnState<T>& state) const {
  using ad::matmul;
  const auto& gb = global_bank_;
  const auto& g = state.global;
  auto kbar = ad::mean<T>(state.sentences);
  auto r_pre = matmul(gb.Wsr, kbar) + matmul(gb.Ugr, g) + gb.br;
  auto z_pre = matmul(gb.Wsz, kbar) + matmul(gb.Ugz, g) + gb.bz;
  auto u_in = matmul(gb.Wsu, kbar);
  if (config_.entity_nodes && !state.entities.empty()) {
    auto ebar = ad::mean<T>(state.entities);
    r_pre = r_pre + matmul(gb.Wer, ebar);
    z_pre = z_pre + matmul(gb.Wez, ebar);
    u_in = u_in + matmul(gb.Weu, ebar);
  }
  auto r = ad::sigmoid(r_pre);
  auto z = ad::sigmoid(z_pre);
  auto u = ad::tanh(u_in + matmul(gb.Ugu, r * g) + gb.bu);
  return ad::one_minus(z) * u + z * g;
}

template <typename T>
GrnState<T> GrnEncoder<T>::step(const GrnState<T>& state, const SentenceEntityGraph& graph,
                                std::span<const std::size_t> sentence_visit,
                                std::span<const std::size_t> entity_visit) const {
  const std::size_t m = state.sentences.size();
  const std::size_t me = state.entities.size();
  std::vector<std::size_t> default_s(m), default_e(me);
  std::iota(default_s.begin(), default_s.end(), 0);
  std::iota(default_e.begin(), default_e.end(), 0);
  if (sentence_visit.empty()) sentence_visit = default_s;
  if (entity_visit.empty()) entity_visit = default_e;
  if (sentence_visit.size() != m || entity_visit.size() != me) {
    throw ContractError("visit order does not cover every node");
  }

  GrnState<T> next = state;
  for (auto i : sentence_visit) {
    next.sentences.at(i) = update_sentence(i, state, message_to_sentence(i, state, graph));
  }
  for (auto j : entity_visit) next.entities.at(j) = update_entity(j, state, graph);
  next.global = update_global(state);
  next.step = state.step + 1;
  return next;
}

template <typename T>
GrnState<T> GrnEncoder<T>::encode(ad::Tape<T>& tape, const SentenceEntityGraph& graph,
                                  std::span<const Tensor> k0, std::span<const Tensor> entity_words,
                                  std::size_t steps) const {
  auto state = init_state(tape, k0, graph, entity_words);
  for (std::size_t t = 0; t < steps; ++t) state = step(state, graph);
  return state;
}

template class GrnEncoder<float>;
template class GrnEncoder<double>;

}  // namespace grn
