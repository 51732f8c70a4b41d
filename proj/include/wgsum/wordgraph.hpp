#ifndef WGSUM_WORDGRAPH_HPP_
#define WGSUM_WORDGRAPH_HPP_

#include <compare>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wgsum/corpus.hpp"
#include "wgsum/numerics/tensor.hpp"

namespace wgsum {

enum class EdgeType { I = 1, II = 2, III = 3 };

std::string_view to_string(EdgeType type);

/// Which edge families a graph is built with.
class EdgeTypeSet {
 public:
  constexpr EdgeTypeSet() = default;
  constexpr EdgeTypeSet(bool type1, bool type2, bool type3)
      : bits_((type1 ? 1u : 0u) | (type2 ? 2u : 0u) | (type3 ? 4u : 0u)) {}

  static constexpr EdgeTypeSet all() { return {true, true, true}; }
  static constexpr EdgeTypeSet none() { return {}; }
  /// Accepts comma-separated "I,II,III" (any subset, any order); "" and
  /// "none" give the empty set.
  static EdgeTypeSet parse(std::string_view text);
  /// The 7 non-empty subsets in a fixed order.
  static std::vector<EdgeTypeSet> nonempty_subsets();

  bool contains(EdgeType t) const { return (bits_ & bit(t)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::string to_string() const;

  friend bool operator==(EdgeTypeSet, EdgeTypeSet) = default;

 private:
  static constexpr unsigned bit(EdgeType t) { return 1u << (static_cast<unsigned>(t) - 1u); }
  unsigned bits_ = 0;
};

/// Undirected labelled edge with u < v (node indices).
struct TypedEdge {
  int u = 0;
  int v = 0;
  EdgeType type = EdgeType::I;
  auto operator<=>(const TypedEdge&) const = default;
};

using EdgeSet = std::set<TypedEdge>;

struct NodeList {
  std::vector<std::string> words;
  std::vector<std::vector<int>> occurrences;
  /// Node index per findings token, -1 for tokens outside every entity.
  std::vector<int> token_node;

  int size() const { return static_cast<int>(words.size()); }
};

struct WordGraph {
  std::vector<std::string> nodes;
  std::vector<std::vector<int>> occurrences;
  EdgeSet typed_edges;
  /// |V| x |V| binary, symmetric, unit diagonal.
  Matrix adjacency;

  bool empty() const { return nodes.empty(); }
  int size() const { return static_cast<int>(nodes.size()); }
};

/// One node per distinct surface form covered by any entity span, in order of
/// first occurrence.
NodeList collect_nodes(std::span<const std::string> findings, std::span<const EntitySpan> entities);

/// Type I: consecutive tokens inside one entity.
EdgeSet type1_edges(std::span<const EntitySpan> entities, const NodeList& nodes);

/// Type II: every word pair between a modifier entity and the entity it
/// modifies (observation_modifier and uncertainty modify observations,
/// anatomy_modifier modifies anatomy). Without an explicit target the nearest
/// entity of the required category is used, ties broken to the left.
EdgeSet type2_edges(std::span<const EntitySpan> entities, const NodeList& nodes);

/// Index of the entity that entity `i` modifies, or -1.
int modified_entity(std::span<const EntitySpan> entities, std::size_t i);

/// Type III: dependency arcs whose two endpoints are both node words.
EdgeSet type3_edges(std::span<const DependencyArc> arcs, const NodeList& nodes);

WordGraph build_graph(const Report& report, EdgeTypeSet edge_types = EdgeTypeSet::all());

/// Symmetric normalization D^-1/2 A D^-1/2 of an adjacency with self-loops.
Matrix normalized_adjacency(const Matrix& adjacency);

struct SplitStats {
  std::size_t report_count = 0;
  double avg_findings_length = 0.0;      // Afl
  double avg_findings_sentences = 0.0;   // Afs
  double avg_findings_edges = 0.0;       // Afe
  double avg_impression_length = 0.0;    // Ail
  double avg_impression_sentences = 0.0; // Ais
};

/// Sentences are maximal token runs terminated by "." (or the end).
std::size_t count_sentences(std::span<const std::string> tokens);

/// Afe counts distinct typed edges per report (no self-loops).
SplitStats graph_stats(std::span<const Report> reports, EdgeTypeSet edge_types = EdgeTypeSet::all());

nlohmann::json graph_to_json(const std::string& id, const WordGraph& graph);

}  // namespace wgsum

#endif  // WGSUM_WORDGRAPH_HPP_
