#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "grn/error.hpp"
#include "grn/pointer_decoder.hpp"
#include "support.hpp"

namespace grn {
namespace {

using ad::Tape;
using ad::Tensor;

struct Fixture {
  static constexpr std::size_t kDim = 6;
  ParamStore<double> store;
  ad::Rng rng;
  PointerDecoder<double> decoder;
  std::vector<Tensor<double>> k0;
  Tensor<double> g;

  Fixture(std::size_t m, std::uint64_t seed, double scale = 1.0)
      : rng(seed), decoder(store, kDim, kDim, rng) {
    testing::jitter(store, rng, scale);
    for (std::size_t i = 0; i < m; ++i) {
      k0.push_back(store.add("k0." + std::to_string(i), {kDim}, testing::random_values(kDim, rng)));
    }
    g = store.add("g", {kDim}, testing::random_values(kDim, rng));
  }

  std::vector<Tensor<double>> rows(Tape<double>& t) const {
    std::vector<Tensor<double>> out;
    for (const auto& r : k0) out.push_back(r + t.zeros(r.shape()));
    return out;
  }
  Tensor<double> state(Tape<double>& t) const { return g + t.zeros(g.shape()); }

  OrderPrediction beam(std::size_t width) {
    Tape<double> t;
    return decoder.beam_decode(t, rows(t), state(t), width);
  }
  OrderPrediction exhaustive() {
    Tape<double> t;
    return decoder.exhaustive_decode(t, rows(t), state(t));
  }
  double nll(const std::vector<std::size_t>& gold) {
    Tape<double> t;
    ad::Rng unused;
    return decoder.score_gold(t, rows(t), state(t), gold, Mode::Eval, 0.0, unused).item();
  }
};

TEST(PointerDecoder, SingleSentenceIsForced) {
  Fixture f(1, 1);
  EXPECT_EQ(f.nll({0}), 0.0);
  auto p = f.beam(4);
  EXPECT_EQ(p.order, (std::vector<std::size_t>{0}));
  EXPECT_EQ(p.log_prob, 0.0);
}

TEST(PointerDecoder, MaskedSlotsHaveZeroProbability) {
  Fixture f(4, 2);
  Tape<double> t;
  ad::Rng unused;
  auto ctx = f.decoder.prepare(t, f.rows(t), Mode::Eval, 0.0, unused);
  auto st = f.decoder.start(f.state(t));
  ad::Mask available(4, true);
  Tensor<double> input = ctx.first_input;
  for (std::size_t slot : {2u, 0u, 3u, 1u}) {
    auto out = f.decoder.step(ctx, st, input, available);
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      if (!available[k]) {
        EXPECT_EQ(out.log_probs[k], -std::numeric_limits<double>::infinity());
      } else {
        total += std::exp(out.log_probs[k]);
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    available[slot] = false;
    st = out.state;
    input = ctx.inputs[slot];
  }
}

TEST(PointerDecoder, OrderDistributionSumsToOne) {
  for (std::size_t m = 1; m <= 4; ++m) {
    for (std::uint64_t draw = 0; draw < 20; ++draw) {
      Fixture f(m, 100 + draw);
      Tape<double> t;
      auto all = f.decoder.enumerate_orders(t, f.rows(t), f.state(t));
      std::size_t factorial = 1;
      for (std::size_t k = 2; k <= m; ++k) factorial *= k;
      ASSERT_EQ(all.size(), factorial);
      double total = 0.0;
      for (const auto& o : all) total += std::exp(o.log_prob);
      EXPECT_NEAR(total, 1.0, 1e-8) << "M=" << m;
    }
  }
}

TEST(PointerDecoder, ChainRuleTotals) {
  Fixture f(4, 3);
  auto p = f.beam(5);
  double sum = 0.0;
  for (double s : p.step_log_probs) sum += s;
  EXPECT_NEAR(p.log_prob, sum, 1e-12);
  EXPECT_NEAR(-p.log_prob, f.nll(p.order), 1e-12);
  auto sorted = p.order;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(PointerDecoder, WideBeamIsExact) {
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    Fixture f(4, 1000 + draw, 1.5);
    auto best = f.exhaustive();
    auto beam = f.beam(24);
    EXPECT_EQ(beam.order, best.order) << "draw " << draw;
    EXPECT_EQ(beam.log_prob, best.log_prob);
  }
}

TEST(PointerDecoder, GreedyMatchesExhaustiveWhenFirstStepDecides) {
  // M = 2: the second step is forced, so greedy and exhaustive agree always
  for (std::uint64_t draw = 0; draw < 20; ++draw) {
    Fixture f(2, 300 + draw);
    EXPECT_EQ(f.beam(1).order, f.exhaustive().order);
  }
}

TEST(PointerDecoder, BeamScoreIsMonotoneInWidth) {
  for (std::uint64_t draw = 0; draw < 20; ++draw) {
    Fixture f(5, 500 + draw, 1.5);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t width : {1u, 2u, 4u, 8u, 16u, 64u}) {
      const double score = f.beam(width).log_prob;
      EXPECT_GE(score, prev) << "width " << width;
      prev = score;
    }
  }
}

TEST(PointerDecoder, SymmetricInputsTieToIdentity) {
  Fixture f(4, 9);
  for (std::size_t i = 1; i < 4; ++i) {
    auto src = f.k0[0].values();
    std::copy(src.begin(), src.end(), f.k0[i].mutable_values().begin());
  }
  Tape<double> t;
  auto all = f.decoder.enumerate_orders(t, f.rows(t), f.state(t));
  for (const auto& o : all) EXPECT_EQ(o.log_prob, all[0].log_prob);
  const std::vector<std::size_t> identity{0, 1, 2, 3};
  EXPECT_EQ(f.exhaustive().order, identity);
  EXPECT_EQ(f.beam(1).order, identity);
  EXPECT_EQ(f.beam(64).order, identity);
}

TEST(PointerDecoder, GradientMatchesFiniteDifferences) {
  Fixture f(3, 11);
  auto report = testing::check_gradients(f.store, [&](Tape<double>& t) {
    ad::Rng unused;
    const std::size_t gold[] = {2, 0, 1};
    return f.decoder.score_gold(t, f.rows(t), f.state(t), gold, Mode::Eval, 0.0, unused);
  });
  EXPECT_LT(report.worst, 1e-4) << report.where;
}

TEST(PointerDecoder, Contracts) {
  Fixture f(3, 12);
  EXPECT_THROW(f.nll({0, 0, 1}), ContractError);
  EXPECT_THROW(f.nll({0, 1}), ContractError);
  EXPECT_THROW(f.nll({0, 1, 3}), ContractError);
  EXPECT_THROW(f.beam(0), ContractError);
  Fixture big(9, 13);
  EXPECT_THROW(big.exhaustive(), ContractError);
  Tape<double> t;
  EXPECT_THROW(f.decoder.start(t.zeros({3})), DimensionError);
  ad::Rng unused;
  EXPECT_THROW(f.decoder.prepare(t, {}, Mode::Eval, 0.0, unused), DegenerateInputError);
}

}  // namespace
}  // namespace grn
