#include "wgsum/wordgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

namespace wgsum {
namespace {

std::optional<EntityType> modified_type(EntityType t) {
  switch (t) {
    case EntityType::ObservationModifier:
    case EntityType::Uncertainty:
      return EntityType::Observation;
    case EntityType::AnatomyModifier:
      return EntityType::Anatomy;
    default:
      return std::nullopt;
  }
}

int span_distance(const EntitySpan& a, const EntitySpan& b) {
  if (a.end <= b.start) return b.start - (a.end - 1);
  if (b.end <= a.start) return a.start - (b.end - 1);
  return 0;
}

void insert_edge(EdgeSet& edges, int a, int b, EdgeType type) {
  if (a < 0 || b < 0 || a == b) return;
  edges.insert({std::min(a, b), std::max(a, b), type});
}

}  // namespace

std::string_view to_string(EdgeType type) {
  switch (type) {
    case EdgeType::I: return "I";
    case EdgeType::II: return "II";
    case EdgeType::III: return "III";
  }
  return "I";
}

EdgeTypeSet EdgeTypeSet::parse(std::string_view text) {
  bool t1 = false, t2 = false, t3 = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view part = text.substr(pos, comma - pos);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (part == "I" || part == "1") {
      t1 = true;
    } else if (part == "II" || part == "2") {
      t2 = true;
    } else if (part == "III" || part == "3") {
      t3 = true;
    } else if (!part.empty() && part != "none") {
      throw std::invalid_argument("unknown edge type '" + std::string(part) + "'");
    }
    pos = comma + 1;
  }
  return {t1, t2, t3};
}

std::vector<EdgeTypeSet> EdgeTypeSet::nonempty_subsets() {
  return {{true, false, false}, {false, true, false}, {false, false, true}, {true, true, false},
          {true, false, true},  {false, true, true},  {true, true, true}};
}

std::string EdgeTypeSet::to_string() const {
  std::string out;
  for (EdgeType t : {EdgeType::I, EdgeType::II, EdgeType::III}) {
    if (!contains(t)) continue;
    if (!out.empty()) out.push_back(',');
    out += wgsum::to_string(t);
  }
  return out.empty() ? "none" : out;
}

NodeList collect_nodes(std::span<const std::string> findings, std::span<const EntitySpan> entities) {
  NodeList nodes;
  nodes.token_node.assign(findings.size(), -1);
  std::vector<bool> covered(findings.size(), false);
  for (const EntitySpan& e : entities) {
    for (int i = e.start; i < e.end; ++i) covered[static_cast<std::size_t>(i)] = true;
  }
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    if (!covered[i]) continue;
    auto [it, inserted] = index.emplace(findings[i], nodes.size());
    if (inserted) {
      nodes.words.push_back(findings[i]);
      nodes.occurrences.emplace_back();
    }
    nodes.occurrences[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
    nodes.token_node[i] = it->second;
  }
  return nodes;
}

EdgeSet type1_edges(std::span<const EntitySpan> entities, const NodeList& nodes) {
  EdgeSet edges;
  for (const EntitySpan& e : entities) {
    for (int i = e.start; i + 1 < e.end; ++i) {
      insert_edge(edges, nodes.token_node[static_cast<std::size_t>(i)],
                  nodes.token_node[static_cast<std::size_t>(i + 1)], EdgeType::I);
    }
  }
  return edges;
}

int modified_entity(std::span<const EntitySpan> entities, std::size_t i) {
  const EntitySpan& mod = entities[i];
  const auto wanted = modified_type(mod.type);
  if (!wanted) return -1;
  if (mod.target) {
    const auto t = static_cast<std::size_t>(*mod.target);
    if (t < entities.size() && entities[t].type == *wanted) return *mod.target;
  }
  int best = -1;
  int best_distance = 0;
  for (std::size_t j = 0; j < entities.size(); ++j) {
    if (j == i || entities[j].type != *wanted) continue;
    const int d = span_distance(mod, entities[j]);
    const bool better =
        best < 0 || d < best_distance ||
        (d == best_distance && entities[j].start < entities[static_cast<std::size_t>(best)].start);
    if (better) {
      best = static_cast<int>(j);
      best_distance = d;
    }
  }
  return best;
}

EdgeSet type2_edges(std::span<const EntitySpan> entities, const NodeList& nodes) {
  EdgeSet edges;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const int target = modified_entity(entities, i);
    if (target < 0) continue;
    const EntitySpan& mod = entities[i];
    const EntitySpan& head = entities[static_cast<std::size_t>(target)];
    for (int a = mod.start; a < mod.end; ++a) {
      for (int b = head.start; b < head.end; ++b) {
        insert_edge(edges, nodes.token_node[static_cast<std::size_t>(a)],
                    nodes.token_node[static_cast<std::size_t>(b)], EdgeType::II);
      }
    }
  }
  return edges;
}

EdgeSet type3_edges(std::span<const DependencyArc> arcs, const NodeList& nodes) {
  EdgeSet edges;
  const auto n = static_cast<int>(nodes.token_node.size());
  for (const DependencyArc& arc : arcs) {
    if (arc.head < 0 || arc.head >= n || arc.dep < 0 || arc.dep >= n) continue;
    insert_edge(edges, nodes.token_node[static_cast<std::size_t>(arc.head)],
                nodes.token_node[static_cast<std::size_t>(arc.dep)], EdgeType::III);
  }
  return edges;
}

WordGraph build_graph(const Report& report, EdgeTypeSet edge_types) {
  NodeList nodes = collect_nodes(report.findings, report.entities);
  WordGraph g;
  if (edge_types.contains(EdgeType::I)) g.typed_edges.merge(type1_edges(report.entities, nodes));
  if (edge_types.contains(EdgeType::II)) g.typed_edges.merge(type2_edges(report.entities, nodes));
  if (edge_types.contains(EdgeType::III)) g.typed_edges.merge(type3_edges(report.deps, nodes));

  const auto n = static_cast<Eigen::Index>(nodes.size());
  g.adjacency = Matrix::Identity(n, n);
  for (const TypedEdge& e : g.typed_edges) {
    g.adjacency(e.u, e.v) = 1.0;
    g.adjacency(e.v, e.u) = 1.0;
  }
  g.nodes = std::move(nodes.words);
  g.occurrences = std::move(nodes.occurrences);
  return g;
}

Matrix normalized_adjacency(const Matrix& adjacency) {
  const Eigen::VectorXd deg = adjacency.rowwise().sum();
  const Eigen::VectorXd inv_sqrt = deg.array().rsqrt();
  return inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
}

std::size_t count_sentences(std::span<const std::string> tokens) {
  std::size_t count = 0;
  bool open = false;
  for (const auto& t : tokens) {
    if (t == ".") {
      if (open) ++count;
      open = false;
    } else {
      open = true;
    }
  }
  return count + (open ? 1 : 0);
}

SplitStats graph_stats(std::span<const Report> reports, EdgeTypeSet edge_types) {
  if (reports.empty()) throw DataError("graph_stats: empty split");
  SplitStats s;
  s.report_count = reports.size();
  for (const Report& r : reports) {
    s.avg_findings_length += static_cast<double>(r.findings.size());
    s.avg_findings_sentences += static_cast<double>(count_sentences(r.findings));
    s.avg_impression_length += static_cast<double>(r.impression.size());
    s.avg_impression_sentences += static_cast<double>(count_sentences(r.impression));
    s.avg_findings_edges += static_cast<double>(build_graph(r, edge_types).typed_edges.size());
  }
  const double n = static_cast<double>(reports.size());
  s.avg_findings_length /= n;
  s.avg_findings_sentences /= n;
  s.avg_impression_length /= n;
  s.avg_impression_sentences /= n;
  s.avg_findings_edges /= n;
  return s;
}

nlohmann::json graph_to_json(const std::string& id, const WordGraph& graph) {
  nlohmann::json j;
  j["id"] = id;
  j["nodes"] = graph.nodes;
  j["typed_edges"] = nlohmann::json::array();
  for (const TypedEdge& e : graph.typed_edges) {
    j["typed_edges"].push_back({graph.nodes[static_cast<std::size_t>(e.u)],
                                graph.nodes[static_cast<std::size_t>(e.v)],
                                std::string(to_string(e.type))});
  }
  return j;
}

}  // namespace wgsum
