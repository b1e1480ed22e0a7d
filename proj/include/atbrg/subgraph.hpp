#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "atbrg/errors.hpp"
#include "atbrg/kg.hpp"

namespace atbrg {

// Node of a relational subgraph. Anchor items keep their item identity even
// though they occupy their aligned entity's position in the graph; stepped
// entities are plain entity nodes.
struct NodeRef {
  enum class Kind : std::uint8_t { Item = 0, Entity = 1 };
  Kind kind;
  std::int32_t id;

  static NodeRef item(ItemId i) { return {Kind::Item, i}; }
  static NodeRef entity(EntityId e) { return {Kind::Entity, e}; }

  auto operator<=>(const NodeRef&) const = default;

  std::string str() const {
    return (kind == Kind::Item ? "i:" : "e:") + std::to_string(id);
  }
};

// Simple path rooted at an item's aligned entity. hops[k] = (relation taken
// on step k+1, entity reached). The anchor entity itself is not a hop.
struct Path {
  ItemId item;
  std::vector<std::pair<RelationId, EntityId>> hops;

  auto operator<=>(const Path&) const = default;
};

struct BuildParams {
  int max_depth = 2;
  int fanout_cap = 8;
};

// All simple paths of length 1..max_depth out of item's anchor entity, every
// prefix emitted as its own path, in depth-first preorder over sorted
// adjacency. The fanout cap truncates each node's sorted neighbor list before
// traversal; it stands in for the usual fixed-size neighbor sampling but is a
// pure function of the node, so extraction stays deterministic.
inline std::vector<Path> enumerate_paths(const KnowledgeGraph& kg, ItemId item,
                                         int max_depth, int fanout_cap) {
  if (max_depth < 1) throw ContractError("enumerate_paths: max_depth must be >= 1");
  if (fanout_cap < 1) throw ContractError("enumerate_paths: fanout_cap must be >= 1");
  EntityId anchor = kg.align(item);

  std::vector<Path> out;
  std::set<EntityId> on_path{anchor};
  std::vector<std::pair<RelationId, EntityId>> hops;

  auto capped = [&](EntityId e) {
    const auto& nbrs = kg.neighbors(e);
    std::size_t n = std::min(nbrs.size(), static_cast<std::size_t>(fanout_cap));
    return std::pair{nbrs.begin(), nbrs.begin() + static_cast<std::ptrdiff_t>(n)};
  };

  auto dfs = [&](auto&& self, EntityId at, int depth) -> void {
    if (depth == max_depth) return;
    auto [it, end] = capped(at);
    for (; it != end; ++it) {
      auto [rel, next] = *it;
      if (on_path.count(next)) continue;
      hops.emplace_back(rel, next);
      on_path.insert(next);
      out.push_back({item, hops});
      self(self, next, depth + 1);
      on_path.erase(next);
      hops.pop_back();
    }
  };
  dfs(dfs, anchor, 0);
  return out;
}

struct AnchorPaths {
  ItemId item;
  std::vector<Path> paths;
};

// Union of per-anchor path sets, indexed by stepped entity. entity_items[e]
// records which anchor items reach e; anchors themselves are not indexed
// (the item occupies the anchor-entity position).
struct CandidateGraph {
  std::vector<ItemId> anchors;  // call order, duplicates removed
  std::vector<Path> paths;      // concatenated per-anchor lists
  std::map<EntityId, std::set<ItemId>> entity_items;
};

inline CandidateGraph connect(const std::vector<AnchorPaths>& per_anchor) {
  if (per_anchor.empty()) throw ContractError("connect: at least one anchor required");
  CandidateGraph g;
  std::set<ItemId> seen;
  for (const auto& ap : per_anchor) {
    if (seen.insert(ap.item).second) g.anchors.push_back(ap.item);
    for (const Path& p : ap.paths) {
      if (p.item != ap.item)
        throw ContractError("connect: path does not belong to its anchor");
      g.paths.push_back(p);
      for (const auto& [rel, ent] : p.hops) g.entity_items[ent].insert(p.item);
    }
  }
  return g;
}

struct Edge {
  NodeRef head;
  RelationId rel;
  NodeRef tail;

  auto operator<=>(const Edge&) const = default;
};

// Pruned relational subgraph. Edges are closed under inversion: (h, r, t)
// implies (t, r~, h), so per-node neighborhoods read directly off out-edges.
struct RelationalSubgraph {
  ItemId target = -1;
  std::vector<ItemId> behaviors;  // as requested, order kept, duplicates kept
  std::vector<ItemId> anchors;    // target then distinct behaviors
  std::vector<EntityId> entities;  // surviving, ascending
  std::vector<Edge> edges;         // ascending (head, rel, tail)
  std::map<EntityId, std::set<ItemId>> item_sets;  // surviving entities only
};

// Single-pass prune: drop every entity whose path-derived item set is a
// singleton, discard paths through dropped entities, keep the edge union of
// what survives. Entities left standing are intentionally not re-examined;
// a second pass would erode shared structure the model should see.
inline RelationalSubgraph prune(const CandidateGraph& g, const KnowledgeGraph& kg) {
  std::set<EntityId> removed;
  for (const auto& [ent, items] : g.entity_items)
    if (items.size() == 1) removed.insert(ent);

  RelationalSubgraph sub;
  sub.anchors = g.anchors;
  std::set<EntityId> entities;
  std::set<Edge> edges;

  for (const Path& p : g.paths) {
    bool alive = true;
    for (const auto& [rel, ent] : p.hops)
      if (removed.count(ent)) {
        alive = false;
        break;
      }
    if (!alive) continue;

    NodeRef prev = NodeRef::item(p.item);
    for (const auto& [rel, ent] : p.hops) {
      NodeRef cur = NodeRef::entity(ent);
      edges.insert({prev, rel, cur});
      edges.insert({cur, kg.inverse_of(rel), prev});
      entities.insert(ent);
      sub.item_sets[ent] = g.entity_items.at(ent);
      prev = cur;
    }
  }

  sub.entities.assign(entities.begin(), entities.end());
  sub.edges.assign(edges.begin(), edges.end());
  return sub;
}

// Entities plus anchor items that kept at least one edge. Edge-less anchors
// still feed the model (they fall back to their own embedding) but do not
// count as graph nodes.
inline int node_count(const RelationalSubgraph& sub) {
  std::set<ItemId> connected;
  for (const Edge& e : sub.edges) {
    if (e.head.kind == NodeRef::Kind::Item) connected.insert(e.head.id);
    if (e.tail.kind == NodeRef::Kind::Item) connected.insert(e.tail.id);
  }
  return static_cast<int>(sub.entities.size() + connected.size());
}

// max_depth 0 is allowed here (not in enumerate_paths): it yields the
// degenerate subgraph with anchors only, which is the no-KG ablation rung.
inline RelationalSubgraph build_subgraph(const KnowledgeGraph& kg, ItemId target,
                                         const std::vector<ItemId>& behaviors,
                                         BuildParams params = {}) {
  if (params.max_depth < 0) throw ContractError("build_subgraph: max_depth must be >= 0");
  std::vector<ItemId> order{target};
  for (ItemId b : behaviors) order.push_back(b);

  std::map<ItemId, std::vector<Path>> path_cache;
  std::vector<AnchorPaths> per_anchor;
  for (ItemId item : order) {
    kg.align(item);  // reject unaligned anchors even when no paths are taken
    auto it = path_cache.find(item);
    if (it == path_cache.end())
      it = path_cache
               .emplace(item, params.max_depth == 0
                                  ? std::vector<Path>{}
                                  : enumerate_paths(kg, item, params.max_depth,
                                                    params.fanout_cap))
               .first;
    per_anchor.push_back({item, it->second});
  }

  RelationalSubgraph sub = prune(connect(per_anchor), kg);
  sub.target = target;
  sub.behaviors = behaviors;
  return sub;
}

// Message-passing view: every anchor item (edge-less ones included) plus all
// surviving entities, with one shared adjacency reused at every layer. Items
// sort before entities; neighbor lists sort by (relation, node).
struct LayeredView {
  std::vector<NodeRef> nodes;
  std::map<NodeRef, std::vector<std::pair<RelationId, NodeRef>>> adjacency;
};

inline LayeredView layered_view(const RelationalSubgraph& sub) {
  LayeredView view;
  std::set<NodeRef> nodes;
  for (ItemId a : sub.anchors) nodes.insert(NodeRef::item(a));
  for (EntityId e : sub.entities) nodes.insert(NodeRef::entity(e));
  view.nodes.assign(nodes.begin(), nodes.end());
  for (const NodeRef& n : view.nodes) view.adjacency[n];  // ensure presence
  for (const Edge& e : sub.edges)
    view.adjacency[e.head].emplace_back(e.rel, e.tail);
  for (auto& [node, nbrs] : view.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return view;
}

}  // namespace atbrg
