#include "grn/nn.hpp"

namespace grn {

template <typename T>
LstmCell<T> LstmCell<T>::create(ParamStore<T>& store, const std::string& prefix, std::size_t input,
                                std::size_t hidden, ad::Rng& rng) {
  LstmCell cell;
  cell.W = store.add_uniform(prefix + ".W", {4 * hidden, input}, rng);
  cell.U = store.add_uniform(prefix + ".U", {4 * hidden, hidden}, rng);
  cell.b = store.add_zeros(prefix + ".b", {4 * hidden});
  return cell;
}

template <typename T>
LstmState<T> lstm_step(const LstmCell<T>& cell, const LstmState<T>& prev, const ad::Tensor<T>& x) {
  const std::size_t h = cell.hidden();
  auto pre = ad::matmul(cell.W, x) + ad::matmul(cell.U, prev.h) + cell.b;
  auto i = ad::sigmoid(ad::slice(pre, 0, h));
  auto f = ad::sigmoid(ad::slice(pre, h, h));
  auto o = ad::sigmoid(ad::slice(pre, 2 * h, h));
  auto g = ad::tanh(ad::slice(pre, 3 * h, h));
  auto c = f * prev.c + i * g;
  return {o * ad::tanh(c), c};
}

template <typename T>
GatedBank<T> GatedBank<T>::create(ParamStore<T>& store, const std::string& prefix,
                                  std::size_t input, std::size_t hidden, ad::Rng& rng) {
  GatedBank bank;
  bank.Wr = store.add_uniform(prefix + ".Wr", {hidden, input}, rng);
  bank.Wz = store.add_uniform(prefix + ".Wz", {hidden, input}, rng);
  bank.Wu = store.add_uniform(prefix + ".Wu", {hidden, input}, rng);
  bank.Ur = store.add_uniform(prefix + ".Ur", {hidden, hidden}, rng);
  bank.Uz = store.add_uniform(prefix + ".Uz", {hidden, hidden}, rng);
  bank.Uu = store.add_uniform(prefix + ".Uu", {hidden, hidden}, rng);
  bank.br = store.add_zeros(prefix + ".br", {hidden});
  bank.bz = store.add_zeros(prefix + ".bz", {hidden});
  bank.bu = store.add_zeros(prefix + ".bu", {hidden});
  return bank;
}

template <typename T>
ad::Tensor<T> gated_update(const GatedBank<T>& bank, const ad::Tensor<T>& input,
                           const ad::Tensor<T>& prev) {
  using ad::matmul;
  auto r = ad::sigmoid(matmul(bank.Wr, input) + matmul(bank.Ur, prev) + bank.br);
  auto z = ad::sigmoid(matmul(bank.Wz, input) + matmul(bank.Uz, prev) + bank.bz);
  auto u = ad::tanh(matmul(bank.Wu, input) + matmul(bank.Uu, r * prev) + bank.bu);
  return ad::one_minus(z) * u + z * prev;
}

template struct LstmCell<float>;
template struct LstmCell<double>;
template struct GatedBank<float>;
template struct GatedBank<double>;
template LstmState<float> lstm_step(const LstmCell<float>&, const LstmState<float>&,
                                    const ad::Tensor<float>&);
template LstmState<double> lstm_step(const LstmCell<double>&, const LstmState<double>&,
                                     const ad::Tensor<double>&);
template ad::Tensor<float> gated_update(const GatedBank<float>&, const ad::Tensor<float>&,
                                        const ad::Tensor<float>&);
template ad::Tensor<double> gated_update(const GatedBank<double>&, const ad::Tensor<double>&,
                                         const ad::Tensor<double>&);

}  // namespace grn
