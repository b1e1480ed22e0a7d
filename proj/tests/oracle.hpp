#pragma once

// Brute-force reference for subgraph extraction, kept deliberately separate
// from the library implementation: it rebuilds adjacency straight from the
// triple list, enumerates every simple path exhaustively (no fanout cap), and
// applies the one-shot prune rule over plain sets. Comparisons against it are
// meaningful only when the library side is called with a cap wider than the
// maximum degree.

#include <cstdint>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "atbrg/kg.hpp"
#include "atbrg/subgraph.hpp"

namespace oracle {

// (head kind, head id, relation, tail kind, tail id); kind 0 = item, 1 = entity.
using EdgeTuple = std::tuple<int, std::int32_t, std::int32_t, int, std::int32_t>;

struct OraclePath {
  atbrg::ItemId item;
  std::vector<std::pair<atbrg::RelationId, atbrg::EntityId>> hops;
};

struct OracleResult {
  std::set<atbrg::EntityId> entities;
  std::set<EdgeTuple> edges;
  std::set<atbrg::ItemId> connected_items;
  int node_count = 0;
};

inline std::multimap<atbrg::EntityId, std::pair<atbrg::RelationId, atbrg::EntityId>>
adjacency_from_triples(const atbrg::KnowledgeGraph& kg) {
  std::multimap<atbrg::EntityId, std::pair<atbrg::RelationId, atbrg::EntityId>> adj;
  std::set<atbrg::Triple> seen;
  for (const atbrg::Triple& t : kg.triples()) {
    if (!seen.insert(t).second) continue;
    adj.emplace(t.head, std::pair{t.rel, t.tail});
  }
  return adj;
}

inline void oracle_dfs(
    const std::multimap<atbrg::EntityId, std::pair<atbrg::RelationId, atbrg::EntityId>>& adj,
    atbrg::ItemId item, atbrg::EntityId at, int depth_left,
    std::set<atbrg::EntityId>& visited,
    std::vector<std::pair<atbrg::RelationId, atbrg::EntityId>>& hops,
    std::vector<OraclePath>& out) {
  if (depth_left == 0) return;
  auto [lo, hi] = adj.equal_range(at);
  for (auto it = lo; it != hi; ++it) {
    auto [rel, next] = it->second;
    if (visited.count(next)) continue;
    hops.emplace_back(rel, next);
    visited.insert(next);
    out.push_back({item, hops});
    oracle_dfs(adj, item, next, depth_left - 1, visited, hops, out);
    visited.erase(next);
    hops.pop_back();
  }
}

inline std::vector<OraclePath> oracle_paths(const atbrg::KnowledgeGraph& kg,
                                            atbrg::ItemId item, int max_depth) {
  auto adj = adjacency_from_triples(kg);
  atbrg::EntityId anchor = kg.align(item);
  std::set<atbrg::EntityId> visited{anchor};
  std::vector<std::pair<atbrg::RelationId, atbrg::EntityId>> hops;
  std::vector<OraclePath> out;
  oracle_dfs(adj, item, anchor, max_depth, visited, hops, out);
  return out;
}

inline OracleResult oracle_extract(const atbrg::KnowledgeGraph& kg,
                                   atbrg::ItemId target,
                                   const std::vector<atbrg::ItemId>& behaviors,
                                   int max_depth) {
  std::vector<atbrg::ItemId> anchors{target};
  anchors.insert(anchors.end(), behaviors.begin(), behaviors.end());

  std::vector<OraclePath> all;
  std::set<atbrg::ItemId> done;
  for (atbrg::ItemId a : anchors) {
    if (!done.insert(a).second) continue;
    if (max_depth > 0)
      for (auto& p : oracle_paths(kg, a, max_depth)) all.push_back(p);
  }

  std::map<atbrg::EntityId, std::set<atbrg::ItemId>> buckets;
  for (const auto& p : all)
    for (auto [rel, ent] : p.hops) buckets[ent].insert(p.item);

  std::set<atbrg::EntityId> removed;
  for (const auto& [ent, items] : buckets)
    if (items.size() == 1) removed.insert(ent);

  auto nf = static_cast<atbrg::RelationId>(kg.n_forward_relations());
  auto flip = [nf](atbrg::RelationId r) { return r < nf ? r + nf : r - nf; };

  OracleResult res;
  for (const auto& p : all) {
    bool dead = false;
    for (auto [rel, ent] : p.hops)
      if (removed.count(ent)) {
        dead = true;
        break;
      }
    if (dead) continue;

    int prev_kind = 0;
    std::int32_t prev_id = p.item;
    for (auto [rel, ent] : p.hops) {
      res.edges.insert({prev_kind, prev_id, rel, 1, ent});
      res.edges.insert({1, ent, flip(rel), prev_kind, prev_id});
      res.entities.insert(ent);
      prev_kind = 1;
      prev_id = ent;
    }
  }
  for (const auto& e : res.edges) {
    if (std::get<0>(e) == 0) res.connected_items.insert(std::get<1>(e));
    if (std::get<3>(e) == 0) res.connected_items.insert(std::get<4>(e));
  }
  res.node_count = static_cast<int>(res.entities.size() + res.connected_items.size());
  return res;
}

inline std::set<EdgeTuple> as_tuples(const std::vector<atbrg::Edge>& edges) {
  std::set<EdgeTuple> out;
  for (const atbrg::Edge& e : edges)
    out.insert({e.head.kind == atbrg::NodeRef::Kind::Item ? 0 : 1, e.head.id, e.rel,
                e.tail.kind == atbrg::NodeRef::Kind::Item ? 0 : 1, e.tail.id});
  return out;
}

// Exact AUC by exhaustive positive/negative pair comparison.
inline double pair_count_auc(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  double num = 0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    ++pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j])
        num += 1.0;
      else if (scores[i] == scores[j])
        num += 0.5;
    }
  }
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (labels[j] == 0) ++neg;
  return num / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace oracle
