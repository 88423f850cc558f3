#include "grn/pointer_decoder.hpp"

#include <algorithm>

#include "grn/error.hpp"

namespace grn {

template <typename T>
PointerDecoder<T>::PointerDecoder(ParamStore<T>& store, std::size_t state_dim,
                                  std::size_t attention_dim, ad::Rng& rng) {
  cell_ = LstmCell<T>::create(store, "decoder.lstm", state_dim, state_dim, rng);
  attn_W_ = store.add_uniform("decoder.attn.W", {attention_dim, state_dim}, rng);
  attn_U_ = store.add_uniform("decoder.attn.U", {attention_dim, state_dim}, rng);
  attn_v_ = store.add_uniform("decoder.attn.v", {attention_dim}, rng);
}

template <typename T>
typename PointerDecoder<T>::Context PointerDecoder<T>::prepare(ad::Tape<T>& tape,
                                                               std::span<const Tensor> k0, Mode mode,
                                                               double dropout, ad::Rng& rng) const {
  if (k0.empty()) throw DegenerateInputError("decoding a paragraph without sentences");
  Context ctx;
  for (const auto& row : k0) {
    ctx.keys.push_back(ad::matmul(attn_U_, row));
    ctx.inputs.push_back(ad::dropout(row, dropout, mode == Mode::Train, rng));
  }
  ctx.first_input = tape.zeros({state_dim()});
  return ctx;
}

template <typename T>
LstmState<T> PointerDecoder<T>::start(const Tensor& paragraph_state) const {
  if (paragraph_state.size() != state_dim()) {
    throw DimensionError("paragraph state of size " + std::to_string(paragraph_state.size()) +
                         " for a decoder of size " + std::to_string(state_dim()));
  }
  return {paragraph_state, paragraph_state.tape()->zeros({state_dim()})};
}

template <typename T>
typename PointerDecoder<T>::StepOutput PointerDecoder<T>::step(const Context& ctx,
                                                               const LstmState<T>& state,
                                                               const Tensor& input,
                                                               const ad::Mask& available) const {
  auto next = lstm_step(cell_, state, input);
  auto query = ad::matmul(attn_W_, next.h);
  std::vector<Tensor> rows;
  rows.reserve(ctx.keys.size());
  for (const auto& key : ctx.keys) rows.push_back(ad::tanh(query + key));
  auto scores = ad::matmul(ad::stack_rows<T>(rows), attn_v_);
  return {next, ad::log_softmax(scores, available)};
}

namespace {

void require_permutation(std::span<const std::size_t> order, std::size_t m) {
  if (order.size() != m) {
    throw ContractError("gold order has " + std::to_string(order.size()) + " entries for " +
                        std::to_string(m) + " sentences");
  }
  std::vector<bool> seen(m, false);
  for (auto s : order) {
    if (s >= m) throw ContractError("gold order index " + std::to_string(s) + " out of range");
    if (seen[s]) throw ContractError("gold order repeats index " + std::to_string(s));
    seen[s] = true;
  }
}

}  // namespace

template <typename T>
typename PointerDecoder<T>::Tensor PointerDecoder<T>::score_gold(
    ad::Tape<T>& tape, std::span<const Tensor> k0, const Tensor& paragraph_state,
    std::span<const std::size_t> gold, Mode mode, double dropout, ad::Rng& rng) const {
  const std::size_t m = k0.size();
  require_permutation(gold, m);
  auto ctx = prepare(tape, k0, mode, dropout, rng);
  auto state = start(paragraph_state);
  ad::Mask available(m, true);
  Tensor input = ctx.first_input;
  std::vector<Tensor> picked;
  for (auto slot : gold) {
    auto out = step(ctx, state, input, available);
    picked.push_back(ad::select(out.log_probs, slot));
    available[slot] = false;
    state = out.state;
    input = ctx.inputs[slot];
  }
  return ad::scale(ad::add_n<T>(picked), T(-1));
}

template <typename T>
OrderPrediction PointerDecoder<T>::beam_decode(ad::Tape<T>& tape, std::span<const Tensor> k0,
                                               const Tensor& paragraph_state,
                                               std::size_t beam_size) const {
  if (beam_size == 0) throw ContractError("beam size must be at least 1");
  const std::size_t m = k0.size();
  ad::Rng unused;
  auto ctx = prepare(tape, k0, Mode::Eval, 0.0, unused);

  struct Hyp {
    std::vector<std::size_t> order;
    std::vector<double> steps;
    T total = T(0);
    LstmState<T> state;
    ad::Mask available;
  };
  std::vector<Hyp> beam{Hyp{{}, {}, T(0), start(paragraph_state), ad::Mask(m, true)}};

  for (std::size_t t = 0; t < m; ++t) {
    struct Candidate {
      std::size_t parent;
      std::size_t slot;
      T total;
      T step;
    };
    std::vector<Candidate> cands;
    std::vector<LstmState<T>> advanced;
    for (std::size_t h = 0; h < beam.size(); ++h) {
      const auto& hyp = beam[h];
      const auto& input = hyp.order.empty() ? ctx.first_input : ctx.inputs[hyp.order.back()];
      auto out = step(ctx, hyp.state, input, hyp.available);
      advanced.push_back(out.state);
      for (std::size_t k = 0; k < m; ++k) {
        if (!hyp.available[k]) continue;
        cands.push_back({h, k, hyp.total + out.log_probs[k], out.log_probs[k]});
      }
    }
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.total != b.total) return a.total > b.total;
      const auto& pa = beam[a.parent].order;
      const auto& pb = beam[b.parent].order;
      if (pa != pb) return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
      return a.slot < b.slot;
    };
    std::sort(cands.begin(), cands.end(), better);
    if (cands.size() > beam_size) cands.resize(beam_size);

    std::vector<Hyp> next;
    next.reserve(cands.size());
    for (const auto& c : cands) {
      Hyp h = beam[c.parent];
      h.order.push_back(c.slot);
      h.steps.push_back(static_cast<double>(c.step));
      h.total = c.total;
      h.state = advanced[c.parent];
      h.available[c.slot] = false;
      next.push_back(std::move(h));
    }
    beam = std::move(next);
  }
  const auto& best = beam.front();
  return {best.order, best.steps, static_cast<double>(best.total)};
}

template <typename T>
std::vector<OrderPrediction> PointerDecoder<T>::enumerate_orders(
    ad::Tape<T>& tape, std::span<const Tensor> k0, const Tensor& paragraph_state) const {
  const std::size_t m = k0.size();
  if (m > kMaxExhaustive) {
    throw ContractError("exhaustive decoding is limited to " + std::to_string(kMaxExhaustive) +
                        " sentences, got " + std::to_string(m));
  }
  ad::Rng unused;
  auto ctx = prepare(tape, k0, Mode::Eval, 0.0, unused);
  std::vector<OrderPrediction> out;
  std::vector<std::size_t> order;
  std::vector<double> steps;
  ad::Mask available(m, true);

  auto recurse = [&](auto& self, const LstmState<T>& state, T total) -> void {
    if (order.size() == m) {
      out.push_back({order, steps, static_cast<double>(total)});
      return;
    }
    const auto& input = order.empty() ? ctx.first_input : ctx.inputs[order.back()];
    auto res = step(ctx, state, input, available);
    for (std::size_t k = 0; k < m; ++k) {
      if (!available[k]) continue;
      available[k] = false;
      order.push_back(k);
      steps.push_back(static_cast<double>(res.log_probs[k]));
      self(self, res.state, total + res.log_probs[k]);
      steps.pop_back();
      order.pop_back();
      available[k] = true;
    }
  };
  recurse(recurse, start(paragraph_state), T(0));
  return out;
}

template <typename T>
OrderPrediction PointerDecoder<T>::exhaustive_decode(ad::Tape<T>& tape, std::span<const Tensor> k0,
                                                     const Tensor& paragraph_state) const {
  auto all = enumerate_orders(tape, k0, paragraph_state);
  std::size_t best = 0;
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].log_prob > all[best].log_prob) best = i;
  return all[best];
}

template class PointerDecoder<float>;
template class PointerDecoder<double>;

}  // namespace grn
