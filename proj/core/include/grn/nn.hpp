#pragma once

#include <cstddef>
#include <string>

#include "grn/autodiff.hpp"
#include "grn/params.hpp"

namespace grn {

enum class Mode { Train, Eval };

/// LSTM cell with stacked gates in the order input, forget, output, candidate.
template <typename T>
struct LstmCell {
  ad::Tensor<T> W;  // [4H, in]
  ad::Tensor<T> U;  // [4H, H]
  ad::Tensor<T> b;  // [4H]

  static LstmCell create(ParamStore<T>& store, const std::string& prefix, std::size_t input,
                         std::size_t hidden, ad::Rng& rng);
  std::size_t hidden() const { return U.shape()[1]; }
};

template <typename T>
struct LstmState {
  ad::Tensor<T> h;
  ad::Tensor<T> c;
};

template <typename T>
LstmState<T> lstm_step(const LstmCell<T>& cell, const LstmState<T>& prev, const ad::Tensor<T>& x);

/// GRU-style update bank: r, z and candidate u, each W·input + U·state + b.
template <typename T>
struct GatedBank {
  ad::Tensor<T> Wr, Wz, Wu;  // [H, input]
  ad::Tensor<T> Ur, Uz, Uu;  // [H, H]
  ad::Tensor<T> br, bz, bu;  // [H]

  static GatedBank create(ParamStore<T>& store, const std::string& prefix, std::size_t input,
                          std::size_t hidden, ad::Rng& rng);
};

/// new = (1 - z) * u + z * prev, with
///   r = sigmoid(Wr x + Ur prev + br), z = sigmoid(Wz x + Uz prev + bz),
///   u = tanh(Wu x + Uu (r * prev) + bu).
template <typename T>
ad::Tensor<T> gated_update(const GatedBank<T>& bank, const ad::Tensor<T>& input,
                           const ad::Tensor<T>& prev);

}  // namespace grn
