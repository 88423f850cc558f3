#include <gtest/gtest.h>

#include <cmath>

#include "grn/error.hpp"
#include "grn/grn_encoder.hpp"
#include "grn/model.hpp"
#include "support.hpp"

namespace grn {
namespace {

using ad::Tape;
using ad::Tensor;

constexpr double kSaturate = 1e3;

GrnConfig small_config(bool entities, bool share = false) {
  GrnConfig c;
  c.sentence_dim = 6;
  c.entity_dim = share ? 6 : 4;
  c.edge_embed_dim = 3;
  c.word_dim = 5;
  c.steps = 2;
  c.entity_nodes = entities;
  c.share_params = share;
  return c;
}

// Encoder plus off-tape K0 rows and entity embeddings for one graph.
struct Fixture {
  GrnConfig config;
  SentenceEntityGraph graph;
  ParamStore<double> store;
  ad::Rng rng{8};
  GrnEncoder<double> encoder;
  std::vector<Tensor<double>> k0, words;

  Fixture(GrnConfig c, SentenceEntityGraph g) : config(c), graph(std::move(g)), encoder(store, c, rng) {
    testing::jitter(store, rng);
    for (std::size_t i = 0; i < graph.num_sentences; ++i) {
      k0.push_back(store.add("k0." + std::to_string(i), {c.sentence_dim},
                             testing::random_values(c.sentence_dim, rng)));
    }
    const std::size_t n = c.entity_nodes ? graph.num_entities() : 0;
    for (std::size_t j = 0; j < n; ++j) {
      words.push_back(store.add("word." + std::to_string(j), {c.word_dim},
                                testing::random_values(c.word_dim, rng)));
    }
  }

  static std::vector<Tensor<double>> attach(Tape<double>& t, const std::vector<Tensor<double>>& xs) {
    std::vector<Tensor<double>> out;
    for (const auto& x : xs) out.push_back(x + t.zeros(x.shape()));
    return out;
  }

  GrnState<double> init(Tape<double>& t) {
    return encoder.init_state(t, attach(t, k0), graph, attach(t, words));
  }
  GrnState<double> encode(Tape<double>& t, std::size_t steps) {
    return encoder.encode(t, graph, attach(t, k0), attach(t, words), steps);
  }
  void set(const std::string& name, double v) {
    for (auto& x : store.get(name).mutable_values()) x = v;
  }
};

std::vector<double> values(const Tensor<double>& x) { return {x.values().begin(), x.values().end()}; }

void expect_same(const Tensor<double>& a, const Tensor<double>& b) { EXPECT_EQ(values(a), values(b)); }

TEST(GrnEncoder, ZeroStepsReturnsInitialState) {
  Fixture f(small_config(true), build_graph(testing::dad_game_crowd(), GraphVariant::SE));
  Tape<double> t;
  auto s = f.encode(t, 0);
  EXPECT_EQ(s.step, 0u);
  ASSERT_EQ(s.sentences.size(), 4u);
  ASSERT_EQ(s.entities.size(), 3u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(values(s.sentences[i]), values(f.k0[i]));

  // g0 = tanh(W mean(K0) + b), by hand
  const auto& W = f.store.get("grn.init.global.W");
  const auto& b = f.store.get("grn.init.global.b");
  const std::size_t d = f.config.sentence_dim;
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0.0;
      for (const auto& row : f.k0) mean += row[c];
      acc += W.at(r, c) * (mean / 4.0);
    }
    EXPECT_NEAR(s.global[r], std::tanh(acc + b[r]), 1e-14);
  }
}

TEST(GrnEncoder, NoEntitiesMeansEmptyEntityBlock) {
  auto p = testing::paragraph("x", {{testing::word("a")}});
  Fixture f(small_config(true), build_graph(p, GraphVariant::SE));
  Tape<double> t;
  auto s = f.init(t);
  EXPECT_TRUE(s.entities.empty());
  auto m = f.encoder.message_to_sentence(0, s, f.graph);
  for (double v : m.from_sentences.values()) EXPECT_EQ(v, 0.0);
  for (double v : m.from_entities.values()) EXPECT_EQ(v, 0.0);
}

TEST(GrnEncoder, SaturatedSSGateCopiesTheNeighbour) {
  auto p = testing::paragraph("x", {{testing::noun("cat", Role::S)}, {testing::noun("cat", Role::O)}});
  Fixture f(small_config(false), build_graph(p, GraphVariant::S));
  f.set("grn.gate.ss.b", kSaturate);
  Tape<double> t;
  auto s = f.init(t);
  expect_same(f.encoder.message_to_sentence(0, s, f.graph).from_sentences, s.sentences[1]);
  expect_same(f.encoder.message_to_sentence(1, s, f.graph).from_sentences, s.sentences[0]);
}

TEST(GrnEncoder, SaturatedSEGatesCopyTheSender) {
  auto p = testing::paragraph("x", {{testing::noun("cat", Role::S)}, {testing::noun("cat", Role::O)}});
  Fixture f(small_config(true), build_graph(p, GraphVariant::SE));
  f.set("grn.gate.se.b", kSaturate);
  Tape<double> t;
  auto s = f.init(t);
  expect_same(f.encoder.message_to_sentence(0, s, f.graph).from_entities, s.entities[0]);
}

TEST(GrnEncoder, SymmetricSentencesReceiveIdenticalMessages) {
  auto p = testing::paragraph("x", {{testing::noun("cat", Role::S)}, {testing::noun("cat", Role::S)}});
  Fixture f(small_config(true), build_graph(p, GraphVariant::SE));
  auto src = f.k0[0].values();
  std::copy(src.begin(), src.end(), f.k0[1].mutable_values().begin());
  Tape<double> t;
  auto s = f.init(t);
  auto a = f.encoder.message_to_sentence(0, s, f.graph);
  auto b = f.encoder.message_to_sentence(1, s, f.graph);
  expect_same(a.from_sentences, b.from_sentences);
  expect_same(a.from_entities, b.from_entities);
}

TEST(GrnEncoder, UpdateGateSaturation) {
  Fixture f(small_config(true), build_graph(testing::dad_game_crowd(), GraphVariant::SE));
  Tape<double> t;
  f.set("grn.sent.bz", kSaturate);
  f.set("grn.ent.bz", kSaturate);
  f.set("grn.glob.bz", kSaturate);
  auto s0 = f.init(t);
  auto s2 = f.encode(t, 2);
  for (std::size_t i = 0; i < 4; ++i) expect_same(s2.sentences[i], s0.sentences[i]);
  for (std::size_t j = 0; j < 3; ++j) expect_same(s2.entities[j], s0.entities[j]);
  expect_same(s2.global, s0.global);

  // z -> 0 leaves exactly the candidate u
  f.set("grn.sent.bz", -kSaturate);
  auto s = f.init(t);
  auto msg = f.encoder.message_to_sentence(2, s, f.graph);
  auto got = f.encoder.update_sentence(2, s, msg);
  const auto& bank = f.encoder.sentence_bank();
  const Tensor<double> parts[] = {s.initial_sentences[2], msg.from_sentences,
                                  ad::matmul(f.store.get("grn.proj.se"), msg.from_entities), s.global};
  auto xi = ad::concat<double>(parts);
  auto r = ad::sigmoid(ad::matmul(bank.Wr, xi) + ad::matmul(bank.Ur, s.sentences[2]) + bank.br);
  auto u = ad::tanh(ad::matmul(bank.Wu, xi) + ad::matmul(bank.Uu, r * s.sentences[2]) + bank.bu);
  expect_same(got, u);
}

TEST(GrnEncoder, GlobalUpdateHandOracle) {
  // M = 1, no entities, d = 2, every matrix and bias set by hand.
  GrnConfig c = small_config(false);
  c.sentence_dim = 2;
  auto p = testing::paragraph("x", {{testing::word("a")}});
  Fixture f(c, build_graph(p, GraphVariant::S));
  auto fill = [&](const std::string& name, std::vector<double> v) {
    auto dst = f.store.get(name).mutable_values();
    ASSERT_EQ(dst.size(), v.size()) << name;
    std::copy(v.begin(), v.end(), dst.begin());
  };
  fill("k0.0", {0.5, -0.25});
  fill("grn.init.global.W", {1.0, 0.0, 0.5, -1.0});
  fill("grn.init.global.b", {0.1, 0.0});
  fill("grn.glob.Wsr", {0.2, 0.0, 0.0, 0.2});
  fill("grn.glob.Wsz", {-0.3, 0.1, 0.0, 0.4});
  fill("grn.glob.Wsu", {1.0, 1.0, -1.0, 0.5});
  fill("grn.glob.Ugr", {0.0, 0.3, 0.3, 0.0});
  fill("grn.glob.Ugz", {0.5, 0.0, 0.0, 0.5});
  fill("grn.glob.Ugu", {0.7, -0.2, 0.1, 0.9});
  fill("grn.glob.br", {0.0, 0.1});
  fill("grn.glob.bz", {-0.2, 0.0});
  fill("grn.glob.bu", {0.05, -0.05});

  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double k[] = {0.5, -0.25};
  const double g[] = {std::tanh(1.0 * k[0] + 0.0 * k[1] + 0.1), std::tanh(0.5 * k[0] - 1.0 * k[1])};
  const double r[] = {sig(0.2 * k[0] + 0.3 * g[1] + 0.0), sig(0.2 * k[1] + 0.3 * g[0] + 0.1)};
  const double z[] = {sig(-0.3 * k[0] + 0.1 * k[1] + 0.5 * g[0] - 0.2),
                      sig(0.4 * k[1] + 0.5 * g[1])};
  const double rg[] = {r[0] * g[0], r[1] * g[1]};
  const double u[] = {std::tanh(k[0] + k[1] + 0.7 * rg[0] - 0.2 * rg[1] + 0.05),
                      std::tanh(-k[0] + 0.5 * k[1] + 0.1 * rg[0] + 0.9 * rg[1] - 0.05)};

  Tape<double> t;
  auto s = f.init(t);
  EXPECT_NEAR(s.global[0], g[0], 1e-14);
  EXPECT_NEAR(s.global[1], g[1], 1e-14);
  auto next = f.encoder.update_global(s);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(next[i], (1 - z[i]) * u[i] + z[i] * g[i], 1e-14);
}

TEST(GrnEncoder, VisitOrderDoesNotMatter) {
  Fixture f(small_config(true), build_graph(testing::dad_game_crowd(), GraphVariant::SE));
  Tape<double> t;
  auto s = f.init(t);
  auto a = f.encoder.step(s, f.graph);
  const std::size_t sv[] = {3, 1, 0, 2};
  const std::size_t ev[] = {2, 0, 1};
  auto b = f.encoder.step(s, f.graph, sv, ev);
  for (std::size_t i = 0; i < 4; ++i) expect_same(a.sentences[i], b.sentences[i]);
  for (std::size_t j = 0; j < 3; ++j) expect_same(a.entities[j], b.entities[j]);
  expect_same(a.global, b.global);
  const std::size_t partial[] = {0, 1};
  EXPECT_THROW(f.encoder.step(s, f.graph, partial, ev), ContractError);
}

TEST(GrnEncoder, PermutationEquivariance) {
  const auto p = testing::dad_game_crowd();
  for (auto variant : {GraphVariant::SE, GraphVariant::S, GraphVariant::F}) {
    Fixture f(small_config(variant == GraphVariant::SE), build_graph(p, variant));
    Tape<double> t;
    auto base = f.encode(t, 3);
    ad::Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      auto perm = random_permutation(p.size(), rng);
      auto graph = build_graph(present(p, perm), variant);
      std::vector<Tensor<double>> k0;
      for (auto gold : perm) k0.push_back(f.k0[gold] + t.zeros(f.k0[gold].shape()));
      auto s = f.encoder.encode(t, graph, k0, Fixture::attach(t, f.words), 3);
      for (std::size_t slot = 0; slot < perm.size(); ++slot) {
        ASSERT_EQ(values(s.sentences[slot]), values(base.sentences[perm[slot]]));
      }
      for (std::size_t j = 0; j < s.entities.size(); ++j) expect_same(s.entities[j], base.entities[j]);
      ASSERT_EQ(values(s.global), values(base.global));
    }
  }
}

TEST(GrnEncoder, EntityFreeSEMatchesS) {
  // no noun repeats, so the SE graph has no entity nodes
  auto p = testing::paragraph("x", {{testing::noun("a", Role::S), testing::word("b")},
                                    {testing::word("c")},
                                    {testing::noun("d", Role::O)}});
  Fixture se(small_config(true), build_graph(p, GraphVariant::SE));
  Fixture s(small_config(false), build_graph(p, GraphVariant::S));
  const std::size_t d = se.config.sentence_dim;
  for (auto& [name, param] : s.store) {
    const auto& src = se.store.get(name);
    auto dst = param.mutable_values();
    if (src.size() == dst.size()) {
      std::copy(src.values().begin(), src.values().end(), dst.begin());
      continue;
    }
    // sentence bank input weights: drop the entity-message column block
    ASSERT_EQ(src.cols(), 4 * d) << name;
    for (std::size_t r = 0; r < src.rows(); ++r) {
      std::size_t out = 0;
      for (std::size_t c = 0; c < 4 * d; ++c) {
        if (c >= 2 * d && c < 3 * d) continue;
        dst[r * 3 * d + out++] = src.at(r, c);
      }
    }
  }
  Tape<double> t;
  auto a = se.encode(t, 3);
  auto b = s.encode(t, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(values(a.sentences[i]), values(b.sentences[i]));
  EXPECT_EQ(values(a.global), values(b.global));
}

TEST(GrnEncoder, SharedParametersAliasTheSentenceBank) {
  Fixture f(small_config(true, true), build_graph(testing::dad_game_crowd(), GraphVariant::SE));
  EXPECT_FALSE(f.store.contains("grn.ent.Wr"));
  EXPECT_EQ(f.encoder.entity_bank().Wr.node(), f.encoder.sentence_bank().Wr.node());

  Tape<double> t;
  auto s = f.init(t);
  std::vector<Tensor<double>> terms;
  for (const auto& nb : f.graph.sentences_of_entity[1]) {
    const Tensor<double> parts[] = {s.entities[1], s.sentences[nb.index],
                                    ad::lookup(t, f.store.get("grn.label"), static_cast<std::size_t>(nb.label))};
    auto gate = ad::sigmoid(ad::matmul(f.store.get("grn.gate.es.W"), ad::concat<double>(parts)) +
                            f.store.get("grn.gate.es.b"));
    terms.push_back(gate * s.sentences[nb.index]);
  }
  const Tensor<double> xi[] = {s.initial_entities[1],
                               ad::matmul(f.store.get("grn.proj.es"), ad::add_n<double>(terms)),
                               t.zeros({6}), s.global};
  auto expected = gated_update(f.encoder.sentence_bank(), ad::concat<double>(xi), s.entities[1]);
  expect_same(f.encoder.update_entity(1, s, f.graph), expected);

  ParamStore<double> store;
  ad::Rng rng;
  auto bad = small_config(true, true);
  bad.entity_dim = 4;
  EXPECT_THROW(GrnEncoder<double>(store, bad, rng), ConfigError);
}

TEST(GrnEncoder, GradientThroughTwoSteps) {
  // three sentences, two entities
  for (bool share : {false, true}) {
    Fixture f(small_config(true, share), build_graph(testing::three_sentences(), GraphVariant::SE));
    ASSERT_EQ(f.graph.num_entities(), 2u);
    auto report = testing::check_gradients(f.store, [&](Tape<double>& t) {
      auto s = f.encode(t, 2);
      ad::Rng w(6);
      std::vector<Tensor<double>> parts{s.global};
      parts.insert(parts.end(), s.sentences.begin(), s.sentences.end());
      parts.insert(parts.end(), s.entities.begin(), s.entities.end());
      auto all = ad::concat<double>(parts);
      return ad::sum(ad::tanh(all) * t.constant(all.shape(), testing::random_values(all.size(), w)));
    });
    EXPECT_LT(report.worst, 1e-4) << report.where;
  }
}

TEST(GrnEncoder, ShapeContracts) {
  Fixture f(small_config(true), build_graph(testing::dad_game_crowd(), GraphVariant::SE));
  Tape<double> t;
  auto k0 = Fixture::attach(t, f.k0);
  k0.pop_back();
  EXPECT_THROW(f.encoder.init_state(t, k0, f.graph, Fixture::attach(t, f.words)), ContractError);
  EXPECT_THROW(f.encoder.init_state(t, Fixture::attach(t, f.k0), f.graph, {}), ContractError);
}

}  // namespace
}  // namespace grn
