#pragma once

// Graph recurrent encoder over a sentence-entity graph.
//
// Every step computes all messages from the previous step's states and only
// then replaces sentence, entity and global states together (Jacobi update).
//
// Sentence node i:
//   m_i   = sum over sentence neighbours i'  of w(i,i')   * kappa_i'
//   m~_i  = sum over entity neighbours j     of w~(i,j,l) * eps_j       (size d_e)
//   xi_i  = [kappa0_i; m_i; P m~_i; g]        ([kappa0_i; m_i; g] without entities)
//   kappa_i <- gated_update(sentence bank, xi_i, kappa_i)
// Entity node j:
//   m^_j  = sum over sentence neighbours i   of w^(j,i,l) * kappa_i     (size d)
//   xi^_j = [e_j; P^ m^_j; g]
//   eps_j <- gated_update(entity bank, xi^_j, eps_j)
// Global node: GRU-style update from the mean sentence and mean entity state.
//
// Gates are elementwise sigmoid vectors from one affine layer over
// [receiver; sender] (plus the edge-label embedding for SE edges).
//
// The static sentence input is the initial state kappa0_i. With shared
// parameters the entity update reuses the sentence bank on
// [eps0_j; P^ m^_j; 0; g], which has the sentence input layout.

#include <cstddef>
#include <span>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/graph.hpp"
#include "grn/nn.hpp"
#include "grn/params.hpp"

namespace grn {

struct GrnConfig {
  std::size_t sentence_dim = 512;
  std::size_t entity_dim = 150;
  std::size_t edge_embed_dim = 50;
  std::size_t word_dim = 100;
  std::size_t steps = 3;
  bool entity_nodes = true;  // false for S and F graphs
  bool share_params = false;
};

template <typename T>
struct GrnState {
  std::vector<ad::Tensor<T>> sentences;          // kappa^t
  std::vector<ad::Tensor<T>> entities;           // eps^t
  ad::Tensor<T> global;                          // g^t
  std::size_t step = 0;

  std::vector<ad::Tensor<T>> initial_sentences;  // kappa^0
  std::vector<ad::Tensor<T>> initial_entities;   // eps^0
  std::vector<ad::Tensor<T>> entity_words;       // e_j
};

template <typename T>
struct SentenceMessages {
  ad::Tensor<T> from_sentences;  // m_i, size d
  ad::Tensor<T> from_entities;   // m~_i, size d_e; undefined without entity nodes
};

template <typename T>
struct GlobalBank {
  ad::Tensor<T> Wsr, Wsz, Wsu;  // [d, d]
  ad::Tensor<T> Wer, Wez, Weu;  // [d, d_e], entity graphs only
  ad::Tensor<T> Ugr, Ugz, Ugu;  // [d, d]
  ad::Tensor<T> br, bz, bu;
};

template <typename T>
class GrnEncoder {
 public:
  using Tensor = ad::Tensor<T>;

  GrnEncoder(ParamStore<T>& store, const GrnConfig& config, ad::Rng& rng);

  const GrnConfig& config() const { return config_; }
  const GatedBank<T>& sentence_bank() const { return sentence_bank_; }
  const GatedBank<T>& entity_bank() const { return entity_bank_; }

  /// kappa^0 = K0 rows; eps^0_j = tanh(P e_j + b); g^0 = tanh(P mean(kappa^0) + b).
  GrnState<T> init_state(ad::Tape<T>& tape, std::span<const Tensor> k0,
                         const SentenceEntityGraph& graph,
                         std::span<const Tensor> entity_words) const;

  SentenceMessages<T> message_to_sentence(std::size_t i, const GrnState<T>& state,
                                          const SentenceEntityGraph& graph) const;
  Tensor update_sentence(std::size_t i, const GrnState<T>& state,
                         const SentenceMessages<T>& messages) const;
  Tensor update_entity(std::size_t j, const GrnState<T>& state,
                       const SentenceEntityGraph& graph) const;
  Tensor update_global(const GrnState<T>& state) const;

  /// One synchronous round. The visit orders only choose the order in which
  /// node updates are computed; results are placed by node index.
  GrnState<T> step(const GrnState<T>& state, const SentenceEntityGraph& graph,
                   std::span<const std::size_t> sentence_visit = {},
                   std::span<const std::size_t> entity_visit = {}) const;

  /// init_state followed by `steps` rounds.
  GrnState<T> encode(ad::Tape<T>& tape, const SentenceEntityGraph& graph,
                     std::span<const Tensor> k0, std::span<const Tensor> entity_words,
                     std::size_t steps) const;

 private:
  Tensor zeros_like_sentence(const GrnState<T>& state) const;
  Tensor label_vector(const Tensor& anchor, EdgeLabel label) const;

  GrnConfig config_;
  GatedBank<T> sentence_bank_;
  GatedBank<T> entity_bank_;  // aliases sentence_bank_ when sharing
  GlobalBank<T> global_bank_;
  Tensor init_entity_W_, init_entity_b_;
  Tensor init_global_W_, init_global_b_;
  Tensor gate_ss_W_, gate_ss_b_;
  Tensor gate_se_W_, gate_se_b_;  // sentence <- entity, gates eps (size d_e)
  Tensor gate_es_W_, gate_es_b_;  // entity <- sentence, gates kappa (size d)
  Tensor proj_se_;                // [d, d_e]
  Tensor proj_es_;                // [d_e, d]
  Tensor labels_;                 // [4, edge_embed_dim]
};

}  // namespace grn
