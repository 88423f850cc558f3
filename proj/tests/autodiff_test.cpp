#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/error.hpp"
#include "support.hpp"

namespace grn {
namespace {

using ad::Tape;
using ad::Tensor;
using testing::check_gradients;
using testing::random_values;

constexpr double kGradTol = 1e-4;

Tensor<double> param(ad::Shape shape, ad::Rng& rng, double scale = 1.0) {
  const auto n = ad::num_elements(shape);
  return Tensor<double>::parameter(std::move(shape), random_values(n, rng, scale));
}

// Parameters live off-tape; adding a recorded zero puts them on `tape`.
Tensor<double> on(Tape<double>& tape, const Tensor<double>& p) { return p + tape.zeros(p.shape()); }

// Contracts an arbitrary-shape output with fixed weights so every output
// element contributes a distinct gradient.
Tensor<double> contract(Tape<double>& tape, const Tensor<double>& y, std::uint64_t seed = 99) {
  ad::Rng rng(seed);
  auto w = tape.constant(y.shape(), random_values(y.size(), rng));
  return ad::sum(y * w);
}

TEST(Autodiff, MatmulValues) {
  Tape<double> t;
  auto a = t.constant({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = t.constant({3, 2}, {7, 8, 9, 10, 11, 12});
  auto c = ad::matmul(a, b);
  ASSERT_EQ(c.shape(), (ad::Shape{2, 2}));
  EXPECT_EQ(c.at(0, 0), 58);
  EXPECT_EQ(c.at(0, 1), 64);
  EXPECT_EQ(c.at(1, 0), 139);
  EXPECT_EQ(c.at(1, 1), 154);
  auto v = ad::matmul(a, t.constant({3}, {1, 0, -1}));
  EXPECT_EQ(v[0], -2);
  EXPECT_EQ(v[1], -2);
}

TEST(Autodiff, ShapeMismatchIsDimensionError) {
  Tape<double> t;
  auto a = t.zeros({2, 3});
  auto b = t.zeros({2, 3});
  EXPECT_THROW(ad::matmul(a, b), DimensionError);
  EXPECT_THROW(ad::add(t.zeros({3}), t.zeros({4})), DimensionError);
  EXPECT_THROW(ad::dot(t.zeros({3}), t.zeros({2})), DimensionError);
  std::vector<Tensor<double>> xs{t.zeros({2}), t.zeros({3})};
  EXPECT_THROW(ad::add_n<double>(xs), DimensionError);
  EXPECT_THROW(ad::stack_rows<double>(xs), DimensionError);
}

TEST(Autodiff, DetachedOperandsNeedATape) {
  auto p = Tensor<double>::parameter({2}, {1, 2});
  EXPECT_THROW(ad::add(p, p), ContractError);
}

TEST(Autodiff, BroadcastScalar) {
  Tape<double> t;
  auto x = t.constant({3}, {1, 2, 3});
  auto y = ad::mul(x, t.scalar(2.0));
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()), (std::vector<double>{2, 4, 6}));
  auto z = ad::sub(t.scalar(1.0), x);
  EXPECT_EQ(z[2], -2);
}

struct OpCase {
  const char* name;
  std::vector<ad::Shape> inputs;
  std::function<Tensor<double>(Tape<double>&, const std::vector<Tensor<double>>&)> op;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto& c = GetParam();
  ad::Rng rng(17);
  std::vector<std::pair<std::string, Tensor<double>>> params;
  std::vector<Tensor<double>> leaves;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    leaves.push_back(param(c.inputs[i], rng));
    params.emplace_back(std::string(c.name) + "#" + std::to_string(i), leaves.back());
  }
  auto report = check_gradients(params, [&](Tape<double>& t) {
    std::vector<Tensor<double>> xs;
    for (auto& l : leaves) xs.push_back(on(t, l));
    return contract(t, c.op(t, xs));
  });
  EXPECT_LT(report.worst, kGradTol) << report.where;
  EXPECT_GT(report.checked, 0u);
}

using Xs = std::vector<Tensor<double>>;

INSTANTIATE_TEST_SUITE_P(
    Ops, OpGradient,
    ::testing::Values(
        OpCase{"matmul", {{3, 4}, {4, 2}}, [](Tape<double>&, const Xs& x) { return ad::matmul(x[0], x[1]); }},
        OpCase{"matvec", {{3, 4}, {4}}, [](Tape<double>&, const Xs& x) { return ad::matmul(x[0], x[1]); }},
        OpCase{"dot", {{5}, {5}}, [](Tape<double>&, const Xs& x) { return ad::dot(x[0], x[1]); }},
        OpCase{"add", {{4}, {4}}, [](Tape<double>&, const Xs& x) { return x[0] + x[1]; }},
        OpCase{"sub_scalar", {{4}, {}}, [](Tape<double>&, const Xs& x) { return x[0] - x[1]; }},
        OpCase{"mul", {{2, 3}, {2, 3}}, [](Tape<double>&, const Xs& x) { return x[0] * x[1]; }},
        OpCase{"mul_scalar", {{}, {3}}, [](Tape<double>&, const Xs& x) { return x[0] * x[1]; }},
        OpCase{"scale", {{4}}, [](Tape<double>&, const Xs& x) { return ad::scale(x[0], -1.7); }},
        OpCase{"sigmoid", {{6}}, [](Tape<double>&, const Xs& x) { return ad::sigmoid(x[0]); }},
        OpCase{"tanh", {{6}}, [](Tape<double>&, const Xs& x) { return ad::tanh(x[0]); }},
        OpCase{"one_minus", {{3}}, [](Tape<double>&, const Xs& x) { return ad::one_minus(x[0]); }},
        OpCase{"add_n", {{3}, {3}, {3}, {3}},
               [](Tape<double>&, const Xs& x) { return ad::add_n<double>(x); }},
        OpCase{"sum", {{2, 3}}, [](Tape<double>&, const Xs& x) { return ad::sum(x[0]); }},
        OpCase{"mean", {{4}, {4}, {4}}, [](Tape<double>&, const Xs& x) { return ad::mean<double>(x); }},
        OpCase{"mean_rows", {{3, 4}}, [](Tape<double>&, const Xs& x) { return ad::mean_rows(x[0]); }},
        OpCase{"concat", {{2}, {3}, {1}}, [](Tape<double>&, const Xs& x) { return ad::concat<double>(x); }},
        OpCase{"stack_rows", {{3}, {3}}, [](Tape<double>&, const Xs& x) { return ad::stack_rows<double>(x); }},
        OpCase{"row", {{3, 2}}, [](Tape<double>&, const Xs& x) { return ad::row(x[0], 1); }},
        OpCase{"slice", {{6}}, [](Tape<double>&, const Xs& x) { return ad::slice(x[0], 2, 3); }},
        OpCase{"select", {{4}}, [](Tape<double>&, const Xs& x) { return ad::select(x[0], 2); }},
        OpCase{"softmax", {{5}}, [](Tape<double>&, const Xs& x) { return ad::softmax(x[0]); }},
        OpCase{"softmax_masked", {{5}},
               [](Tape<double>&, const Xs& x) { return ad::softmax(x[0], {true, false, true, true, false}); }},
        OpCase{"log_softmax", {{5}}, [](Tape<double>&, const Xs& x) { return ad::log_softmax(x[0]); }},
        OpCase{"log_softmax_masked", {{4}},
               [](Tape<double>&, const Xs& x) {
                 // masked entries are -inf, so read the live ones only
                 auto y = ad::log_softmax(x[0], {true, true, false, true});
                 return ad::select(y, 0) + ad::scale(ad::select(y, 1), -0.5) +
                        ad::scale(ad::select(y, 3), 2.0);
               }},
        OpCase{"lookup", {{4, 3}}, [](Tape<double>& t, const Xs& x) { return ad::lookup(t, x[0], 2) * ad::lookup(t, x[0], 2); }},
        OpCase{"composite", {{3, 3}, {3}},
               [](Tape<double>&, const Xs& x) {
                 auto h = ad::tanh(ad::matmul(x[0], x[1]));
                 return ad::sigmoid(h * x[1]) + ad::softmax(h);
               }}),
    [](const ::testing::TestParamInfo<OpCase>& info) { return std::string(info.param.name); });

TEST(Autodiff, SelectReadsOneElement) {
  Tape<double> t;
  auto s = ad::select(t.constant({3}, {1, 2, 3}), 1);
  EXPECT_EQ(s.item(), 2);
}

TEST(Autodiff, ParameterGradientsAccumulateAcrossPasses) {
  auto p = Tensor<double>::parameter({2}, {1.0, -2.0});
  for (int pass = 0; pass < 2; ++pass) {
    Tape<double> t;
    t.backward(ad::sum(on(t, p) * on(t, p)));
  }
  EXPECT_DOUBLE_EQ(p.grad()[0], 4.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], -8.0);
  p.zero_grad();
  EXPECT_FALSE(p.has_grad());
}

TEST(Autodiff, FrozenParameterGetsNoGradient) {
  auto p = Tensor<double>::parameter({2}, {1.0, 2.0});
  p.set_requires_grad(false);
  auto q = Tensor<double>::parameter({2}, {3.0, 4.0});
  Tape<double> t;
  t.backward(ad::dot(on(t, p), on(t, q)));
  EXPECT_FALSE(p.has_grad());
  EXPECT_DOUBLE_EQ(q.grad()[1], 2.0);
}

TEST(Autodiff, BackwardNeedsScalarOnOwnTape) {
  Tape<double> t, other;
  auto x = t.constant({2}, {1, 2});
  EXPECT_THROW(t.backward(x), ContractError);
  EXPECT_THROW(other.backward(ad::sum(x)), ContractError);
}

TEST(Autodiff, AddNIsOrderFree) {
  ad::Rng rng(5);
  Tape<double> t;
  std::vector<Tensor<double>> xs;
  for (int i = 0; i < 7; ++i) xs.push_back(t.constant({4}, random_values(4, rng, 1e3)));
  auto ref = ad::add_n<double>(xs);
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Tensor<double>> ys;
    for (auto i : idx) ys.push_back(xs[i]);
    auto y = ad::add_n<double>(ys);
    for (std::size_t k = 0; k < 4; ++k) ASSERT_EQ(y[k], ref[k]);
  }
}

TEST(Autodiff, SoftmaxMasking) {
  Tape<double> t;
  auto x = t.constant({4}, {0.3, -1.0, 2.0, 0.5});
  ad::Mask mask{true, false, true, false};
  auto p = ad::softmax(x, mask);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_EQ(p[3], 0.0);
  EXPECT_NEAR(p[0] + p[2], 1.0, 1e-15);
  auto lp = ad::log_softmax(x, mask);
  EXPECT_EQ(lp[1], -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(std::exp(lp[0]), p[0], 1e-15);
  EXPECT_THROW(ad::softmax(x, ad::Mask{false, false, false, false}), InvalidMaskError);
  EXPECT_THROW(ad::log_softmax(x, ad::Mask{true, false}), DimensionError);
}

TEST(Autodiff, SaturatedInputsStayFinite) {
  auto p = Tensor<double>::parameter({4}, {1e3, -1e3, 1e3, -1e3});
  Tape<double> t;
  auto x = on(t, p);
  auto s = ad::sigmoid(x);
  auto h = ad::tanh(x);
  auto sm = ad::softmax(x);
  auto lsm = ad::log_softmax(x);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(h[1], -1.0);
  EXPECT_NEAR(sm[0] + sm[2], 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(lsm[1]));
  t.backward(ad::sum(s) + ad::sum(h) + ad::sum(sm) + ad::select(lsm, 1));
  for (auto g : p.grad()) EXPECT_TRUE(std::isfinite(g));
}

TEST(Autodiff, DropoutScalesSurvivors) {
  Tape<double> t;
  ad::Rng rng(1);
  auto x = t.constant({1000}, std::vector<double>(1000, 1.0));
  EXPECT_EQ(ad::dropout(x, 0.5, false, rng).node(), x.node());
  EXPECT_EQ(ad::dropout(x, 0.0, true, rng).node(), x.node());
  auto y = ad::dropout(x, 0.5, true, rng);
  std::size_t kept = 0;
  for (auto v : y.values()) {
    ASSERT_TRUE(v == 0.0 || v == 2.0);
    kept += v != 0.0;
  }
  EXPECT_GT(kept, 400u);
  EXPECT_LT(kept, 600u);
  EXPECT_THROW(ad::dropout(x, 1.0, true, rng), ContractError);
}

TEST(Autodiff, UniformDrawsAreReproducible) {
  ad::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const double u = ad::uniform01(a);
    ASSERT_EQ(u, ad::uniform01(b));
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Autodiff, SinglePrecisionMatchesDouble) {
  Tape<float> tf;
  Tape<double> td;
  auto f = ad::softmax(ad::tanh(tf.constant({3}, {0.1f, 0.7f, -0.4f})));
  auto d = ad::softmax(ad::tanh(td.constant({3}, {0.1, 0.7, -0.4})));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(f[i], d[i], 1e-6);
}

}  // namespace
}  // namespace grn
