#include <benchmark/benchmark.h>

#include "grn/autodiff.hpp"
#include "grn/model.hpp"
#include "grn/trainer.hpp"

namespace {

using namespace grn;

std::vector<double> noise(std::size_t n, ad::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = ad::uniform01(rng) - 0.5;
  return v;
}

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ad::Rng rng(1);
  ParamStore<double> store;
  auto w = store.add("w", {n, n}, noise(n * n, rng));
  const auto x = noise(n, rng);
  for (auto _ : state) {
    ad::Tape<double> t;
    auto y = ad::matmul(w, t.constant({n}, x));
    t.backward(ad::sum(ad::tanh(y)));
    store.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(128)->Arg(512);

struct Setup {
  std::vector<Paragraph> corpus;
  Model<double> model;

  Setup(GraphVariant v, std::size_t d)
      : corpus([] {
          SyntheticConfig sc;
          sc.paragraphs = 32;
          return generate_synthetic(sc);
        }()),
        model(config(v, d), Vocabulary::build(corpus)) {}

  static ModelConfig config(GraphVariant v, std::size_t d) {
    ModelConfig c;
    c.variant = v;
    c.word_dim = d / 2;
    c.sentence_dim = d;
    c.entity_dim = d / 2;
    c.edge_embed_dim = d / 4;
    c.steps = 3;
    return c;
  }
};

void BM_ParagraphNllWithGradient(benchmark::State& state) {
  Setup s(static_cast<GraphVariant>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  ad::Rng rng(2);
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& p = s.corpus[k++ % s.corpus.size()];
    ad::Tape<double> t;
    auto loss = s.model.nll(t, p, identity_permutation(p.size()), Mode::Train, 0.5, rng);
    t.backward(loss);
    s.model.params().zero_grad();
    benchmark::DoNotOptimize(loss.item());
  }
  state.SetLabel(variant_name(s.model.config().variant));
}
BENCHMARK(BM_ParagraphNllWithGradient)
    ->Args({static_cast<int>(GraphVariant::SE), 32})
    ->Args({static_cast<int>(GraphVariant::S), 32})
    ->Args({static_cast<int>(GraphVariant::F), 32})
    ->Args({static_cast<int>(GraphVariant::SE), 128})
    ->Unit(benchmark::kMicrosecond);

void BM_BeamDecode(benchmark::State& state) {
  Setup s(GraphVariant::SE, 64);
  const auto beam = static_cast<std::size_t>(state.range(0));
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& p = s.corpus[k++ % s.corpus.size()];
    benchmark::DoNotOptimize(s.model.predict(p, identity_permutation(p.size()), beam).log_prob);
  }
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_AdadeltaStep(benchmark::State& state) {
  Setup s(GraphVariant::SE, 128);
  Adadelta<double> opt(0.95, 1e-6, 1.0);
  for (auto _ : state) opt.step(s.model.params());
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(s.model.count_parameters().total));
}
BENCHMARK(BM_AdadeltaStep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
