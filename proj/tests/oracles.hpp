// Independent reference implementations used only by the tests.
#ifndef WGSUM_TESTS_ORACLES_HPP_
#define WGSUM_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "wgsum/corpus.hpp"
#include "wgsum/wordgraph.hpp"

namespace oracle {

using WordEdge = std::tuple<std::string, std::string, int>;  // (a < b, type)

inline WordEdge word_edge(const std::string& a, const std::string& b, int type) {
  return a < b ? WordEdge{a, b, type} : WordEdge{b, a, type};
}

inline std::set<WordEdge> graph_word_edges(const wgsum::WordGraph& g) {
  std::set<WordEdge> out;
  for (const auto& e : g.typed_edges) {
    out.insert(word_edge(g.nodes[static_cast<std::size_t>(e.u)],
                         g.nodes[static_cast<std::size_t>(e.v)], static_cast<int>(e.type)));
  }
  return out;
}

inline int base_of(wgsum::EntityType t) {
  using wgsum::EntityType;
  if (t == EntityType::ObservationModifier || t == EntityType::Uncertainty) return 1;
  if (t == EntityType::AnatomyModifier) return 0;
  return -1;
}

inline bool is_base(wgsum::EntityType t, int base) {
  return (base == 1 && t == wgsum::EntityType::Observation) ||
         (base == 0 && t == wgsum::EntityType::Anatomy);
}

/// Edge enumeration by exhaustive scans over token pairs.
inline std::set<WordEdge> brute_force_edges(const wgsum::Report& r, bool t1, bool t2, bool t3) {
  const auto& w = r.findings;
  const int n = static_cast<int>(w.size());
  std::vector<bool> covered(w.size(), false);
  for (const auto& e : r.entities)
    for (int p = 0; p < n; ++p)
      if (p >= e.start && p < e.end) covered[static_cast<std::size_t>(p)] = true;

  std::set<WordEdge> out;
  auto add = [&](int p, int q, int type) {
    if (w[p] != w[q]) out.insert(word_edge(w[p], w[q], type));
  };
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (t1 && q == p + 1) {
        for (const auto& e : r.entities)
          if (p >= e.start && q < e.end) add(p, q, 1);
      }
      if (t3) {
        for (const auto& a : r.deps)
          if (a.head == p && a.dep == q && covered[p] && covered[q]) add(p, q, 3);
      }
    }
  }
  if (t2) {
    const int m = static_cast<int>(r.entities.size());
    for (int i = 0; i < m; ++i) {
      const auto& mod = r.entities[static_cast<std::size_t>(i)];
      const int base = base_of(mod.type);
      if (base < 0) continue;
      int target = -1;
      if (mod.target && is_base(r.entities[static_cast<std::size_t>(*mod.target)].type, base)) {
        target = *mod.target;
      } else {
        int best_d = 1 << 30;
        for (int j = 0; j < m; ++j) {
          const auto& c = r.entities[static_cast<std::size_t>(j)];
          if (j == i || !is_base(c.type, base)) continue;
          int d = 1 << 30;
          for (int p = mod.start; p < mod.end; ++p)
            for (int q = c.start; q < c.end; ++q) d = std::min(d, std::abs(p - q));
          if (d < best_d ||
              (d == best_d && c.start < r.entities[static_cast<std::size_t>(target)].start)) {
            best_d = d;
            target = j;
          }
        }
      }
      if (target < 0) continue;
      const auto& head = r.entities[static_cast<std::size_t>(target)];
      for (int p = mod.start; p < mod.end; ++p)
        for (int q = head.start; q < head.end; ++q) add(p, q, 2);
    }
  }
  return out;
}

/// Random small annotated findings over a tiny alphabet so that repeated
/// words, overlapping spans and stray arcs all occur.
inline wgsum::Report random_annotated(std::mt19937_64& rng, int id) {
  static const std::vector<std::string> words{"left", "right", "effusion", "tube", "lung",
                                              "small", "no", "possible", "base", "."};
  wgsum::Report r;
  r.id = "rand-" + std::to_string(id);
  const int n = 4 + static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) r.findings.push_back(words[rng() % words.size()]);
  const int spans = static_cast<int>(rng() % 6);
  for (int s = 0; s < spans; ++s) {
    const int start = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const int len = 1 + static_cast<int>(rng() % 3);
    wgsum::EntitySpan e;
    e.start = start;
    e.end = std::min(n, start + len);
    e.type = static_cast<wgsum::EntityType>(rng() % 5);
    r.entities.push_back(e);
  }
  for (std::size_t s = 0; s < r.entities.size(); ++s) {
    if (rng() % 2 == 0 && r.entities.size() > 1) {
      int t = static_cast<int>(rng() % r.entities.size());
      if (t != static_cast<int>(s)) r.entities[s].target = t;
    }
  }
  const int arcs = static_cast<int>(rng() % static_cast<std::uint64_t>(n + 1));
  for (int a = 0; a < arcs; ++a) {
    const int dep = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    int head = static_cast<int>(rng() % static_cast<std::uint64_t>(n + 1)) - 1;
    if (head == dep) head = -1;
    r.deps.push_back({head, dep, "dep"});
  }
  return r;
}

}  // namespace oracle

#endif  // WGSUM_TESTS_ORACLES_HPP_
