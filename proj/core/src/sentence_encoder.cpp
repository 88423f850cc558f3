#include "grn/sentence_encoder.hpp"

#include "grn/error.hpp"

namespace grn {

template <typename T>
SentenceEncoder<T>::SentenceEncoder(ParamStore<T>& store, std::size_t input_dim,
                                    std::size_t sentence_dim, ad::Rng& rng) {
  if (sentence_dim == 0 || sentence_dim % 2 != 0) {
    throw ConfigError("sentence dimension must be a positive even number, got " +
                      std::to_string(sentence_dim));
  }
  forward_ = LstmCell<T>::create(store, "encoder.fwd", input_dim, sentence_dim / 2, rng);
  backward_ = LstmCell<T>::create(store, "encoder.bwd", input_dim, sentence_dim / 2, rng);
}

template <typename T>
typename SentenceEncoder<T>::Tensor SentenceEncoder<T>::encode_vectors(
    ad::Tape<T>& tape, std::span<const Tensor> words) const {
  if (words.empty()) throw ContractError("cannot encode an empty sentence");
  const std::size_t h = forward_.hidden();
  LstmState<T> fwd{tape.zeros({h}), tape.zeros({h})};
  for (const auto& x : words) fwd = lstm_step(forward_, fwd, x);
  LstmState<T> bwd{tape.zeros({h}), tape.zeros({h})};
  for (auto it = words.rbegin(); it != words.rend(); ++it) bwd = lstm_step(backward_, bwd, *it);
  const Tensor parts[] = {fwd.h, bwd.h};
  return ad::concat<T>(parts);
}

template <typename T>
typename SentenceEncoder<T>::Tensor SentenceEncoder<T>::encode_sentence(
    ad::Tape<T>& tape, const Tensor& embeddings, std::span<const std::size_t> ids, Mode mode,
    double dropout, ad::Rng& rng) const {
  std::vector<Tensor> words;
  words.reserve(ids.size());
  for (auto id : ids) {
    words.push_back(ad::dropout(ad::lookup(tape, embeddings, id), dropout, mode == Mode::Train, rng));
  }
  return encode_vectors(tape, words);
}

template <typename T>
std::vector<typename SentenceEncoder<T>::Tensor> SentenceEncoder<T>::encode_paragraph(
    ad::Tape<T>& tape, const Tensor& embeddings,
    const std::vector<std::vector<std::size_t>>& sentences,
    std::span<const std::size_t> presentation, Mode mode, double dropout, ad::Rng& rng) const {
  if (presentation.size() != sentences.size()) {
    throw ContractError("presentation order has " + std::to_string(presentation.size()) +
                        " slots for " + std::to_string(sentences.size()) + " sentences");
  }
  std::vector<bool> seen(sentences.size(), false);
  std::vector<Tensor> rows;
  rows.reserve(sentences.size());
  for (auto s : presentation) {
    if (s >= sentences.size() || seen[s]) {
      throw ContractError("presentation order is not a permutation");
    }
    seen[s] = true;
    rows.push_back(encode_sentence(tape, embeddings, sentences[s], mode, dropout, rng));
  }
  return rows;
}

template class SentenceEncoder<float>;
template class SentenceEncoder<double>;

}  // namespace grn
