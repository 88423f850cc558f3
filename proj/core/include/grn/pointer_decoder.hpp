#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/nn.hpp"
#include "grn/params.hpp"

namespace grn {

/// A predicted order over presentation slots with its chain-rule scores.
struct OrderPrediction {
  std::vector<std::size_t> order;
  std::vector<double> step_log_probs;
  double log_prob = 0.0;
};

/// LSTM pointer network. The decoder starts from h = g, c = 0 and a zero
/// first input; at step i it consumes the previously chosen sentence's
/// K0 row and scores every not-yet-chosen slot k with
///   v . tanh(W h_i + U kappa0_k)
/// followed by a softmax restricted to the remaining slots.
template <typename T>
class PointerDecoder {
 public:
  using Tensor = ad::Tensor<T>;

  /// Per-paragraph precomputation: attention keys U kappa0_k and decoder
  /// inputs (kappa0_k, dropped out in Train mode).
  struct Context {
    std::vector<Tensor> keys;
    std::vector<Tensor> inputs;
    Tensor first_input;
  };

  struct StepOutput {
    LstmState<T> state;
    Tensor log_probs;  // -inf on masked slots
  };

  PointerDecoder(ParamStore<T>& store, std::size_t state_dim, std::size_t attention_dim,
                 ad::Rng& rng);

  std::size_t state_dim() const { return cell_.hidden(); }

  Context prepare(ad::Tape<T>& tape, std::span<const Tensor> k0, Mode mode, double dropout,
                  ad::Rng& rng) const;
  LstmState<T> start(const Tensor& paragraph_state) const;
  /// Consumes `input`, then scores slots where `available` is true.
  StepOutput step(const Context& ctx, const LstmState<T>& state, const Tensor& input,
                  const ad::Mask& available) const;

  /// Teacher-forced negative log-likelihood of `gold` (slot indices).
  Tensor score_gold(ad::Tape<T>& tape, std::span<const Tensor> k0, const Tensor& paragraph_state,
                    std::span<const std::size_t> gold, Mode mode, double dropout,
                    ad::Rng& rng) const;

  /// Length-synchronous beam search. Candidates rank by total log-probability,
  /// ties by lexicographically smaller slot sequence. Width 1 is greedy.
  OrderPrediction beam_decode(ad::Tape<T>& tape, std::span<const Tensor> k0,
                              const Tensor& paragraph_state, std::size_t beam_size) const;

  /// Scores every complete order (M <= kMaxExhaustive) in lexicographic order.
  std::vector<OrderPrediction> enumerate_orders(ad::Tape<T>& tape, std::span<const Tensor> k0,
                                                const Tensor& paragraph_state) const;
  /// Best of enumerate_orders, same tie-breaking as beam_decode.
  OrderPrediction exhaustive_decode(ad::Tape<T>& tape, std::span<const Tensor> k0,
                                    const Tensor& paragraph_state) const;

  static constexpr std::size_t kMaxExhaustive = 8;

 private:
  LstmCell<T> cell_;
  Tensor attn_W_;  // [a, d]
  Tensor attn_U_;  // [a, d]
  Tensor attn_v_;  // [a]
};

}  // namespace grn
