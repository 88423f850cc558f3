#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grn/data.hpp"

namespace grn {

/// SE: sentence and entity nodes. S: sentence nodes linked through shared
/// entities. F: complete sentence graph.
enum class GraphVariant : std::uint8_t { SE, S, F };

std::string variant_name(GraphVariant v);
std::optional<GraphVariant> parse_variant(const std::string& s);

/// SE-edge labels. Neutral replaces every role under the label ablation.
enum class EdgeLabel : std::uint8_t { S = 0, O = 1, X = 2, Neutral = 3 };
inline constexpr std::size_t kEdgeLabelCount = 4;

char label_char(EdgeLabel l);
EdgeLabel label_of(Role r);

/// Highest-ranked role under S > O > X. `roles` must be non-empty.
Role resolve_edge_label(std::span<const Role> roles);

struct EntityNode {
  std::size_t id = 0;
  std::string surface;
  std::size_t occurrences = 0;

  friend bool operator==(const EntityNode&, const EntityNode&) = default;
};

struct SEEdge {
  std::size_t sentence = 0;
  std::size_t entity = 0;
  EdgeLabel label = EdgeLabel::X;

  friend auto operator<=>(const SEEdge&, const SEEdge&) = default;
};

struct SSEdge {
  std::size_t a = 0;  // a < b
  std::size_t b = 0;

  friend auto operator<=>(const SSEdge&, const SSEdge&) = default;
};

struct LabeledNeighbor {
  std::size_t index = 0;
  EdgeLabel label = EdgeLabel::X;

  friend bool operator==(const LabeledNeighbor&, const LabeledNeighbor&) = default;
};

struct SentenceEntityGraph {
  GraphVariant variant = GraphVariant::SE;
  std::size_t num_sentences = 0;
  std::vector<EntityNode> entities;  // empty unless variant SE
  std::vector<SEEdge> se_edges;      // sorted
  std::vector<SSEdge> ss_edges;      // sorted

  // Entity membership per sentence, kept for SE and S so entity removal can
  // recompute SS edges. Indices refer to `entity_surfaces`.
  std::vector<std::string> entity_surfaces;
  std::vector<std::vector<std::size_t>> entity_sets;

  // Adjacency views, rebuilt from the edge lists.
  std::vector<std::vector<std::size_t>> sentence_neighbors;          // N_i
  std::vector<std::vector<LabeledNeighbor>> entity_neighbors;        // entities of sentence i
  std::vector<std::vector<LabeledNeighbor>> sentences_of_entity;     // sentences of entity j

  std::size_t num_entities() const { return entities.size(); }
  void rebuild_adjacency();
};

/// Builds the graph over the paragraph's storage order. Entities are noun
/// surfaces with at least two noun occurrences, numbered in lexicographic
/// order so that ids do not depend on sentence order.
SentenceEntityGraph build_graph(const Paragraph& p, GraphVariant variant);

/// SS edges induced by shared membership in `entity_sets`.
std::vector<SSEdge> shared_entity_edges(const std::vector<std::vector<std::size_t>>& entity_sets);

struct Ablation {
  enum class Kind : std::uint8_t { None, ShuffleEdges, RemoveEdgeLabels, RemoveEntities };
  Kind kind = Kind::None;
  double fraction = 0.0;  // RemoveEntities only
  std::uint64_t seed = 0;

  static Ablation none() { return {}; }
  static Ablation shuffle_edges(std::uint64_t seed) { return {Kind::ShuffleEdges, 0.0, seed}; }
  static Ablation remove_edge_labels() { return {Kind::RemoveEdgeLabels, 0.0, 0}; }
  static Ablation remove_entities(double f, std::uint64_t seed) {
    return {Kind::RemoveEntities, f, seed};
  }
};

std::string ablation_name(const Ablation& a);
/// "none", "shuffle-edges", "remove-edge-labels", "remove-entities".
std::string ablation_kind_name(Ablation::Kind k);
std::optional<Ablation::Kind> parse_ablation_kind(const std::string& s);

/// Applies a structural corruption to a freshly built SE or S graph.
SentenceEntityGraph ablate(const SentenceEntityGraph& g, const Ablation& transform);

/// Debug record: {"variant", "sentences", "entities", "se_edges", "ss_edges"}.
std::string dump_graph(const SentenceEntityGraph& g, const std::string& id = {});

}  // namespace grn
