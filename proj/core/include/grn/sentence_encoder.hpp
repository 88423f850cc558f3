#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/nn.hpp"
#include "grn/params.hpp"

namespace grn {

/// Bi-LSTM sentence encoder. Each direction has hidden size d/2 so the
/// concatenated summary [forward last; backward first] has size d.
template <typename T>
class SentenceEncoder {
 public:
  using Tensor = ad::Tensor<T>;

  SentenceEncoder(ParamStore<T>& store, std::size_t input_dim, std::size_t sentence_dim,
                  ad::Rng& rng);

  std::size_t sentence_dim() const { return 2 * forward_.hidden(); }
  const LstmCell<T>& forward_cell() const { return forward_; }
  const LstmCell<T>& backward_cell() const { return backward_; }

  /// Encodes one sentence of word ids. Dropout is applied to the looked-up
  /// embeddings in Train mode.
  Tensor encode_sentence(ad::Tape<T>& tape, const Tensor& embeddings,
                         std::span<const std::size_t> ids, Mode mode, double dropout,
                         ad::Rng& rng) const;

  /// Encodes pre-embedded word vectors, no dropout.
  Tensor encode_vectors(ad::Tape<T>& tape, std::span<const Tensor> words) const;

  /// Row i of the result encodes sentence `presentation[i]` of `sentences`.
  std::vector<Tensor> encode_paragraph(ad::Tape<T>& tape, const Tensor& embeddings,
                                       const std::vector<std::vector<std::size_t>>& sentences,
                                       std::span<const std::size_t> presentation, Mode mode,
                                       double dropout, ad::Rng& rng) const;

 private:
  LstmCell<T> forward_;
  LstmCell<T> backward_;
};

}  // namespace grn
