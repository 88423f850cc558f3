#pragma once

// Shared fixtures: paragraph builders, tiny model configs and a central
// finite-difference gradient checker.

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "grn/autodiff.hpp"
#include "grn/data.hpp"
#include "grn/model.hpp"
#include "grn/params.hpp"

namespace grn::testing {

inline Token word(const std::string& w) { return {w, false, std::nullopt}; }
inline Token noun(const std::string& w, Role r) { return {w, true, r}; }

inline Paragraph paragraph(std::string id, std::vector<std::vector<Token>> sentences) {
  Paragraph p;
  p.id = std::move(id);
  for (auto& toks : sentences) p.sentences.push_back({std::move(toks)});
  return p;
}

/// The four-sentence running example: S1 mentions dad, S2 dad and the game,
/// S3 the game and the crowd, S4 the crowd.
inline Paragraph dad_game_crowd() {
  return paragraph("example", {
      {noun("dad", Role::S), word("took"), noun("me", Role::O), word("out"), word("early")},
      {noun("dad", Role::S), word("bought"), noun("tickets", Role::O), word("for"),
       word("the"), noun("game", Role::X)},
      {word("the"), noun("game", Role::S), word("drew"), word("a"), word("huge"),
       noun("crowd", Role::O)},
      {word("the"), noun("crowd", Role::S), word("cheered"), word("all"), word("night")},
  });
}

/// Three sentences, two repeated nouns (cat in S1/S2, ball in S2/S3).
inline Paragraph three_sentences(const std::string& id = "tiny") {
  return paragraph(id, {
      {word("a"), noun("cat", Role::S), word("sat"), word("down")},
      {word("the"), noun("cat", Role::O), word("saw"), word("a"), noun("ball", Role::X)},
      {noun("ball", Role::S), word("rolled"), word("away")},
  });
}

inline ModelConfig tiny_config(GraphVariant v = GraphVariant::SE, std::uint64_t seed = 3) {
  ModelConfig c;
  c.variant = v;
  c.word_dim = 6;
  c.sentence_dim = 16;
  c.entity_dim = 8;
  c.edge_embed_dim = 4;
  c.steps = 2;
  c.seed = seed;
  return c;
}

template <typename T = double>
Model<T> tiny_model(const std::vector<Paragraph>& corpus, ModelConfig c = tiny_config()) {
  return Model<T>(c, Vocabulary::build(corpus));
}

/// Moves every parameter away from its initial value so tests do not rely on
/// the structure of a fresh initialisation (zero biases and the like).
template <typename T>
void jitter(ParamStore<T>& store, ad::Rng& rng, double amplitude = 0.3) {
  for (auto& [name, p] : store) {
    for (auto& v : p.mutable_values()) v += static_cast<T>((2.0 * ad::uniform01(rng) - 1.0) * amplitude);
  }
}

inline double relative_error(double analytic, double numeric) {
  // Below this magnitude the comparison is effectively absolute.
  constexpr double kFloor = 1e-6;
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
}

struct GradReport {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
};

using LossFn = std::function<ad::Tensor<double>(ad::Tape<double>&)>;

/// Compares the analytic gradient of `loss` with central differences for
/// every scalar of every listed tensor.
inline GradReport check_gradients(std::vector<std::pair<std::string, ad::Tensor<double>>> params,
                                  const LossFn& loss, double step = 1e-5) {
  for (auto& [name, p] : params) p.zero_grad();
  {
    ad::Tape<double> tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    ad::Tape<double> tape;
    return loss(tape).item();
  };
  GradReport report;
  for (auto& [name, p] : params) {
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = eval();
      values[i] = saved - step;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[i], numeric);
      ++report.checked;
      if (err > report.worst) {
        report.worst = err;
        report.where = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic[i]) +
                       " numeric " + std::to_string(numeric);
      }
    }
  }
  return report;
}

inline GradReport check_gradients(ParamStore<double>& store, const LossFn& loss,
                                  double step = 1e-5) {
  std::vector<std::pair<std::string, ad::Tensor<double>>> params;
  for (auto& [name, p] : store) {
    if (p.requires_grad()) params.emplace_back(name, p);
  }
  return check_gradients(std::move(params), loss, step);
}

inline std::vector<double> random_values(std::size_t n, ad::Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = (2.0 * ad::uniform01(rng) - 1.0) * scale;
  return v;
}

}  // namespace grn::testing
