#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/data.hpp"
#include "grn/graph.hpp"
#include "grn/grn_encoder.hpp"
#include "grn/params.hpp"
#include "grn/pointer_decoder.hpp"
#include "grn/sentence_encoder.hpp"

namespace grn {

struct ModelConfig {
  GraphVariant variant = GraphVariant::SE;
  std::size_t word_dim = 100;
  std::size_t sentence_dim = 512;
  std::size_t entity_dim = 150;
  std::size_t edge_embed_dim = 50;
  std::size_t steps = 3;
  bool share_params = false;
  bool freeze_embeddings = false;
  /// Applied to every graph the model builds. The seed is mixed with the
  /// paragraph id so each paragraph gets its own corruption.
  Ablation ablation;
  std::uint64_t seed = 1;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);

/// Presentation helpers. perm[slot] is the gold index shown at that slot.
Paragraph present(const Paragraph& p, std::span<const std::size_t> perm);
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm);
std::vector<std::size_t> identity_permutation(std::size_t n);
std::vector<std::size_t> random_permutation(std::size_t n, ad::Rng& rng);

struct ParameterCount {
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::size_t>> groups;  // fixed group order, empty groups omitted
};

/// Sub-model a parameter name belongs to.
std::string parameter_group(const std::string& name);

template <typename T>
ParameterCount count_parameters(const ParamStore<T>& store);

/// Full ordering model: embeddings, Bi-LSTM sentence encoder, graph encoder
/// and pointer decoder over one parameter store.
template <typename T>
class Model {
 public:
  using Tensor = ad::Tensor<T>;

  struct Encoded {
    std::vector<Tensor> k0;  // by presentation slot
    SentenceEntityGraph graph;
    GrnState<T> state;
  };

  Model(ModelConfig config, Vocabulary vocab, const EmbeddingTable* pretrained = nullptr);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore<T>& params() { return *store_; }
  const ParamStore<T>& params() const { return *store_; }
  const Tensor& embeddings() const { return embeddings_; }
  const SentenceEncoder<T>& sentence_encoder() const { return *sentence_encoder_; }
  const GrnEncoder<T>& grn_encoder() const { return *grn_; }
  const PointerDecoder<T>& decoder() const { return *decoder_; }

  /// The recurrent step count is not a parameter and may change after loading.
  void set_steps(std::size_t steps) { config_.steps = steps; }

  std::vector<std::vector<std::size_t>> word_ids(const Paragraph& p) const;
  SentenceEntityGraph graph_for(const Paragraph& p, std::span<const std::size_t> perm) const;

  Encoded encode(ad::Tape<T>& tape, const Paragraph& p, std::span<const std::size_t> perm,
                 Mode mode, double dropout, ad::Rng& rng) const;

  /// Teacher-forced NLL of the gold order under presentation `perm`.
  Tensor nll(ad::Tape<T>& tape, const Paragraph& p, std::span<const std::size_t> perm, Mode mode,
             double dropout, ad::Rng& rng) const;

  /// Beam decoding; the returned order is in presentation slots.
  OrderPrediction predict(const Paragraph& p, std::span<const std::size_t> perm,
                          std::size_t beam) const;

  ParameterCount count_parameters() const { return grn::count_parameters(*store_); }

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  std::unique_ptr<ParamStore<T>> store_;
  Tensor embeddings_;
  std::unique_ptr<SentenceEncoder<T>> sentence_encoder_;
  std::unique_ptr<GrnEncoder<T>> grn_;
  std::unique_ptr<PointerDecoder<T>> decoder_;
};

}  // namespace grn
