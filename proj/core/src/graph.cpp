#include "grn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "grn/autodiff.hpp"
#include "grn/error.hpp"

namespace grn {

std::string variant_name(GraphVariant v) {
  switch (v) {
    case GraphVariant::SE: return "SE";
    case GraphVariant::S: return "S";
    case GraphVariant::F: return "F";
  }
  return "?";
}

std::optional<GraphVariant> parse_variant(const std::string& s) {
  if (s == "SE" || s == "se") return GraphVariant::SE;
  if (s == "S" || s == "s") return GraphVariant::S;
  if (s == "F" || s == "f") return GraphVariant::F;
  return std::nullopt;
}

char label_char(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::S: return 'S';
    case EdgeLabel::O: return 'O';
    case EdgeLabel::X: return 'X';
    case EdgeLabel::Neutral: return '-';
  }
  return '?';
}

EdgeLabel label_of(Role r) { return static_cast<EdgeLabel>(static_cast<std::uint8_t>(r)); }

Role resolve_edge_label(std::span<const Role> roles) {
  if (roles.empty()) throw ContractError("resolve_edge_label on an empty role set");
  return *std::min_element(roles.begin(), roles.end());
}

void SentenceEntityGraph::rebuild_adjacency() {
  sentence_neighbors.assign(num_sentences, {});
  entity_neighbors.assign(num_sentences, {});
  sentences_of_entity.assign(entities.size(), {});
  for (const auto& e : ss_edges) {
    sentence_neighbors[e.a].push_back(e.b);
    sentence_neighbors[e.b].push_back(e.a);
  }
  for (auto& n : sentence_neighbors) std::sort(n.begin(), n.end());
  for (const auto& e : se_edges) {
    entity_neighbors[e.sentence].push_back({e.entity, e.label});
    sentences_of_entity[e.entity].push_back({e.sentence, e.label});
  }
  auto by_index = [](const LabeledNeighbor& x, const LabeledNeighbor& y) { return x.index < y.index; };
  for (auto& n : entity_neighbors) std::sort(n.begin(), n.end(), by_index);
  for (auto& n : sentences_of_entity) std::sort(n.begin(), n.end(), by_index);
}

std::vector<SSEdge> shared_entity_edges(const std::vector<std::vector<std::size_t>>& entity_sets) {
  std::vector<SSEdge> out;
  for (std::size_t a = 0; a < entity_sets.size(); ++a) {
    for (std::size_t b = a + 1; b < entity_sets.size(); ++b) {
      const auto& x = entity_sets[a];
      const auto& y = entity_sets[b];
      std::size_t i = 0, j = 0;
      bool shared = false;
      while (i < x.size() && j < y.size() && !shared) {
        if (x[i] == y[j]) shared = true;
        else if (x[i] < y[j]) ++i;
        else ++j;
      }
      if (shared) out.push_back({a, b});
    }
  }
  return out;
}

SentenceEntityGraph build_graph(const Paragraph& p, GraphVariant variant) {
  if (p.sentences.empty()) throw ContractError("build_graph on an empty paragraph");
  SentenceEntityGraph g;
  g.variant = variant;
  g.num_sentences = p.sentences.size();

  if (variant == GraphVariant::F) {
    for (std::size_t a = 0; a < g.num_sentences; ++a)
      for (std::size_t b = a + 1; b < g.num_sentences; ++b) g.ss_edges.push_back({a, b});
    g.entity_sets.assign(g.num_sentences, {});
    g.rebuild_adjacency();
    return g;
  }

  std::map<std::string, std::size_t> counts;  // ordered: ids follow surface order
  for (const auto& s : p.sentences)
    for (const auto& t : s.tokens)
      if (t.is_noun) ++counts[t.surface];
  std::map<std::string, std::size_t> ids;
  for (const auto& [surface, c] : counts) {
    if (c < 2) continue;
    ids[surface] = g.entity_surfaces.size();
    g.entity_surfaces.push_back(surface);
    if (variant == GraphVariant::SE) g.entities.push_back({ids[surface], surface, c});
  }

  g.entity_sets.assign(g.num_sentences, {});
  for (std::size_t i = 0; i < g.num_sentences; ++i) {
    std::map<std::size_t, std::vector<Role>> roles;
    for (const auto& t : p.sentences[i].tokens) {
      if (!t.is_noun) continue;
      auto it = ids.find(t.surface);
      if (it == ids.end()) continue;
      roles[it->second].push_back(t.role.value_or(Role::X));
    }
    for (const auto& [entity, rs] : roles) {
      g.entity_sets[i].push_back(entity);
      if (variant == GraphVariant::SE) {
        g.se_edges.push_back({i, entity, label_of(resolve_edge_label(rs))});
      }
    }
  }
  g.ss_edges = shared_entity_edges(g.entity_sets);
  g.rebuild_adjacency();
  return g;
}

std::string ablation_name(const Ablation& a) {
  switch (a.kind) {
    case Ablation::Kind::None: return "original";
    case Ablation::Kind::ShuffleEdges: return "shuffle-edges";
    case Ablation::Kind::RemoveEdgeLabels: return "remove-edge-labels";
    case Ablation::Kind::RemoveEntities:
      return "remove-" + std::to_string(static_cast<int>(std::lround(a.fraction * 100))) +
             "%-entities";
  }
  return "?";
}

std::string ablation_kind_name(Ablation::Kind k) {
  switch (k) {
    case Ablation::Kind::None: return "none";
    case Ablation::Kind::ShuffleEdges: return "shuffle-edges";
    case Ablation::Kind::RemoveEdgeLabels: return "remove-edge-labels";
    case Ablation::Kind::RemoveEntities: return "remove-entities";
  }
  return "?";
}

std::optional<Ablation::Kind> parse_ablation_kind(const std::string& s) {
  for (auto k : {Ablation::Kind::None, Ablation::Kind::ShuffleEdges,
                 Ablation::Kind::RemoveEdgeLabels, Ablation::Kind::RemoveEntities}) {
    if (s == ablation_kind_name(k)) return k;
  }
  return std::nullopt;
}

namespace {

// Uniform partial shuffle: the first k entries become a uniform k-subset.
template <typename V>
void partial_shuffle(V& v, std::size_t k, ad::Rng& rng) {
  for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
    const auto span = static_cast<double>(v.size() - i);
    const auto j = i + static_cast<std::size_t>(ad::uniform01(rng) * span);
    std::swap(v[i], v[j]);
  }
}

SentenceEntityGraph shuffle_edges(const SentenceEntityGraph& g, std::uint64_t seed) {
  ad::Rng rng(seed);
  SentenceEntityGraph out = g;
  const std::size_t m = g.num_sentences;

  std::vector<SSEdge> pairs;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) pairs.push_back({a, b});
  partial_shuffle(pairs, g.ss_edges.size(), rng);
  out.ss_edges.assign(pairs.begin(), pairs.begin() + static_cast<long>(g.ss_edges.size()));
  std::sort(out.ss_edges.begin(), out.ss_edges.end());

  if (!g.se_edges.empty()) {
    std::vector<EdgeLabel> labels;
    for (const auto& e : g.se_edges) labels.push_back(e.label);
    partial_shuffle(labels, labels.size(), rng);

    // Every entity keeps at least one sentence; the rest are uniform.
    const std::size_t n_entities = g.entities.size();
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    for (std::size_t j = 0; j < n_entities; ++j) {
      const auto i = static_cast<std::size_t>(ad::uniform01(rng) * static_cast<double>(m));
      chosen.insert({i, j});
    }
    std::vector<std::pair<std::size_t, std::size_t>> rest;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n_entities; ++j)
        if (!chosen.count({i, j})) rest.push_back({i, j});
    const std::size_t need = g.se_edges.size() - chosen.size();
    partial_shuffle(rest, need, rng);
    chosen.insert(rest.begin(), rest.begin() + static_cast<long>(need));

    out.se_edges.clear();
    std::size_t k = 0;
    for (const auto& [i, j] : chosen) out.se_edges.push_back({i, j, labels[k++]});
    out.entity_sets.assign(m, {});
    for (const auto& e : out.se_edges) out.entity_sets[e.sentence].push_back(e.entity);
  }
  out.rebuild_adjacency();
  return out;
}

SentenceEntityGraph remove_entities(const SentenceEntityGraph& g, double fraction,
                                    std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ContractError("entity removal fraction must lie in [0, 1]");
  }
  const std::size_t total = g.entity_surfaces.size();
  const auto n_remove = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(total)));
  if (n_remove == 0) return g;

  ad::Rng rng(seed);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  partial_shuffle(order, n_remove, rng);
  std::vector<bool> removed(total, false);
  for (std::size_t k = 0; k < n_remove; ++k) removed[order[k]] = true;

  std::vector<std::size_t> remap(total, 0);
  SentenceEntityGraph out;
  out.variant = g.variant;
  out.num_sentences = g.num_sentences;
  for (std::size_t j = 0; j < total; ++j) {
    if (removed[j]) continue;
    remap[j] = out.entity_surfaces.size();
    out.entity_surfaces.push_back(g.entity_surfaces[j]);
  }
  for (const auto& e : g.entities) {
    if (removed[e.id]) continue;
    out.entities.push_back({remap[e.id], e.surface, e.occurrences});
  }
  for (const auto& e : g.se_edges) {
    if (!removed[e.entity]) out.se_edges.push_back({e.sentence, remap[e.entity], e.label});
  }
  out.entity_sets.assign(g.num_sentences, {});
  for (std::size_t i = 0; i < g.num_sentences; ++i)
    for (auto j : g.entity_sets[i])
      if (!removed[j]) out.entity_sets[i].push_back(remap[j]);
  out.ss_edges = shared_entity_edges(out.entity_sets);
  out.rebuild_adjacency();
  return out;
}

}  // namespace

SentenceEntityGraph ablate(const SentenceEntityGraph& g, const Ablation& transform) {
  if (transform.kind == Ablation::Kind::None) return g;
  if (g.variant == GraphVariant::F) {
    throw ContractError("ablation '" + ablation_name(transform) +
                        "' is defined only for entity-bearing graphs (SE, S), not F");
  }
  switch (transform.kind) {
    case Ablation::Kind::ShuffleEdges: return shuffle_edges(g, transform.seed);
    case Ablation::Kind::RemoveEdgeLabels: {
      SentenceEntityGraph out = g;
      for (auto& e : out.se_edges) e.label = EdgeLabel::Neutral;
      out.rebuild_adjacency();
      return out;
    }
    case Ablation::Kind::RemoveEntities:
      return remove_entities(g, transform.fraction, transform.seed);
    case Ablation::Kind::None: break;
  }
  return g;
}

std::string dump_graph(const SentenceEntityGraph& g, const std::string& id) {
  nlohmann::ordered_json j;
  if (!id.empty()) j["id"] = id;
  j["variant"] = variant_name(g.variant);
  j["sentences"] = g.num_sentences;
  auto ents = nlohmann::ordered_json::array();
  for (const auto& e : g.entities) {
    ents.push_back({{"id", e.id}, {"surface", e.surface}, {"count", e.occurrences}});
  }
  j["entities"] = std::move(ents);
  auto se = nlohmann::ordered_json::array();
  for (const auto& e : g.se_edges) {
    se.push_back({e.sentence, e.entity, std::string(1, label_char(e.label))});
  }
  j["se_edges"] = std::move(se);
  auto ss = nlohmann::ordered_json::array();
  for (const auto& e : g.ss_edges) ss.push_back({e.a, e.b});
  j["ss_edges"] = std::move(ss);
  return j.dump();
}

}  // namespace grn
