#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "atbrg/kg.hpp"
#include "atbrg/rng.hpp"
#include "atbrg/subgraph.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace atbrg;

namespace {

constexpr int kNoCap = 1 << 20;  // wide enough that truncation never binds

KnowledgeGraph shirt_cup_kg(const TempDir& dir) {
  // Items a, b, c anchored at entities A, B, C; A and B share Shirt, C only
  // reaches Cup.
  return KnowledgeGraph::load(dir.file("t.tsv",
                                       "A\tbuy\tShirt\n"
                                       "B\tbuy\tShirt\n"
                                       "C\tbuy\tCup\n"),
                              dir.file("a.tsv",
                                       "a\tA\n"
                                       "b\tB\n"
                                       "c\tC\n"));
}

// Random KG in the acceptance regime: bounded entities/triples, a handful of
// aligned items.
struct RandomCase {
  TempDir dir;
  KnowledgeGraph kg;
  std::vector<ItemId> items;
};

RandomCase random_case(Rng& rng, int max_entities = 50, int max_triples = 200) {
  int n_ent = 2 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_entities - 1)));
  int n_rel = 1 + static_cast<int>(rng.uniform_int(4));
  int n_tr = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_triples)));
  std::string triples;
  std::set<int> mentioned;
  for (int i = 0; i < n_tr; ++i) {
    int h = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_ent)));
    int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_ent)));
    int r = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_rel)));
    triples += "n" + std::to_string(h) + "\tr" + std::to_string(r) + "\tn" +
               std::to_string(t) + "\n";
    mentioned.insert(h);
    mentioned.insert(t);
  }
  std::vector<int> pool(mentioned.begin(), mentioned.end());
  int n_items = 2 + static_cast<int>(rng.uniform_int(std::min<std::uint64_t>(5, pool.size() - 1)));
  std::string alignment;
  for (int i = 0; i < n_items; ++i) {
    int e = pool[rng.uniform_int(pool.size())];
    alignment += "item" + std::to_string(i) + "\tn" + std::to_string(e) + "\n";
  }
  RandomCase rc;
  rc.kg = KnowledgeGraph::load(rc.dir.file("t.tsv", triples),
                               rc.dir.file("a.tsv", alignment));
  for (ItemId i = 0; i < static_cast<ItemId>(rc.kg.n_items()); ++i) rc.items.push_back(i);
  return rc;
}

std::set<std::pair<ItemId, std::vector<std::pair<RelationId, EntityId>>>> path_set(
    const std::vector<Path>& paths) {
  std::set<std::pair<ItemId, std::vector<std::pair<RelationId, EntityId>>>> out;
  for (const Path& p : paths) out.insert({p.item, p.hops});
  return out;
}

}  // namespace

TEST_CASE("isolated anchor yields no paths", "[subgraph]") {
  TempDir dir;
  auto kg = KnowledgeGraph::load(dir.file("t.tsv", "x\tr\ty\n"),
                                 dir.file("a.tsv", "item\ty\n"),
                                 KgOptions{.augment_inverse = false});
  CHECK(enumerate_paths(kg, 0, 2, 8).empty());
}

TEST_CASE("depth-1 enumeration lists each neighbor once", "[subgraph]") {
  TempDir dir;
  auto kg = KnowledgeGraph::load(dir.file("t.tsv",
                                          "A\tr\tX\n"
                                          "A\ts\tY\n"),
                                 dir.file("a.tsv", "a\tA\n"));
  auto paths = enumerate_paths(kg, 0, 1, 8);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].hops == std::vector<std::pair<RelationId, EntityId>>{{0, 1}});
  CHECK(paths[1].hops == std::vector<std::pair<RelationId, EntityId>>{{1, 2}});
}

TEST_CASE("every path prefix is emitted and paths stay simple", "[subgraph]") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto rc = random_case(rng, 20, 50);
    for (ItemId item : rc.items) {
      auto paths = enumerate_paths(rc.kg, item, 2, kNoCap);
      auto got = path_set(paths);
      CHECK(got.size() == paths.size());  // no duplicate paths
      for (const Path& p : paths) {
        std::set<EntityId> seen{rc.kg.align(item)};
        for (auto [rel, ent] : p.hops) CHECK(seen.insert(ent).second);
        if (p.hops.size() > 1) {
          Path prefix{p.item, {p.hops.begin(), p.hops.end() - 1}};
          CHECK(got.count({prefix.item, prefix.hops}) == 1);
        }
      }
      CHECK(got == path_set([&] {
              auto op = oracle::oracle_paths(rc.kg, item, 2);
              std::vector<Path> conv;
              for (auto& p : op) conv.push_back({p.item, p.hops});
              return conv;
            }()));
    }
  }
}

TEST_CASE("fanout cap truncates sorted adjacency before traversal", "[subgraph]") {
  TempDir dir;
  auto kg = KnowledgeGraph::load(dir.file("t.tsv",
                                          "A\tr\tX\n"
                                          "A\tr\tY\n"
                                          "A\ts\tZ\n"),
                                 dir.file("a.tsv", "a\tA\n"));
  auto paths = enumerate_paths(kg, 0, 1, 2);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].hops[0].second == kg.entity_id("X").value());
  CHECK(paths[1].hops[0].second == kg.entity_id("Y").value());
}

TEST_CASE("enumerate preconditions", "[subgraph]") {
  TempDir dir;
  auto kg = shirt_cup_kg(dir);
  CHECK_THROWS_AS(enumerate_paths(kg, 0, 0, 8), ContractError);
  CHECK_THROWS_AS(enumerate_paths(kg, 0, 1, 0), ContractError);
  CHECK_THROWS_AS(enumerate_paths(kg, 99, 1, 8), AlignmentError);
}

TEST_CASE("connect buckets entities by the anchor items that reach them", "[subgraph]") {
  TempDir dir;
  auto kg = shirt_cup_kg(dir);
  std::vector<AnchorPaths> per_anchor;
  for (ItemId i : {0, 1, 2})
    per_anchor.push_back({i, enumerate_paths(kg, i, 1, 8)});
  auto g = connect(per_anchor);
  auto shirt = kg.entity_id("Shirt").value();
  auto cup = kg.entity_id("Cup").value();
  REQUIRE(g.entity_items.count(shirt) == 1);
  CHECK(g.entity_items.at(shirt) == std::set<ItemId>{0, 1});
  CHECK(g.entity_items.at(cup) == std::set<ItemId>{2});
  CHECK_THROWS_AS(connect({}), ContractError);
}

TEST_CASE("prune drops singleton entities and keeps shared structure", "[subgraph]") {
  TempDir dir;
  auto kg = shirt_cup_kg(dir);
  auto sub = build_subgraph(kg, 0, {1, 2}, {.max_depth = 1, .fanout_cap = 8});

  auto shirt = kg.entity_id("Shirt").value();
  REQUIRE(sub.entities == std::vector<EntityId>{shirt});
  REQUIRE(sub.item_sets.at(shirt) == std::set<ItemId>{0, 1});

  RelationId buy = 0, buy_inv = static_cast<RelationId>(kg.n_forward_relations());
  std::set<Edge> expect{
      {NodeRef::item(0), buy, NodeRef::entity(shirt)},
      {NodeRef::entity(shirt), buy_inv, NodeRef::item(0)},
      {NodeRef::item(1), buy, NodeRef::entity(shirt)},
      {NodeRef::entity(shirt), buy_inv, NodeRef::item(1)},
  };
  CHECK(std::set<Edge>(sub.edges.begin(), sub.edges.end()) == expect);
  CHECK(node_count(sub) == 3);  // Shirt + two connected anchors; c is edge-less
}

TEST_CASE("all-singleton candidate prunes to the empty subgraph", "[subgraph]") {
  TempDir dir;
  auto kg = shirt_cup_kg(dir);
  auto sub = build_subgraph(kg, 2, {}, {.max_depth = 1, .fanout_cap = 8});
  CHECK(sub.entities.empty());
  CHECK(sub.edges.empty());
  CHECK(node_count(sub) == 0);
}

TEST_CASE("depth 0 builds the anchors-only subgraph", "[subgraph]") {
  TempDir dir;
  auto kg = shirt_cup_kg(dir);
  auto sub = build_subgraph(kg, 0, {1}, {.max_depth = 0, .fanout_cap = 8});
  CHECK(sub.entities.empty());
  CHECK(sub.edges.empty());
  CHECK(sub.anchors == std::vector<ItemId>{0, 1});
  auto view = layered_view(sub);
  REQUIRE(view.nodes.size() == 2);
  CHECK(view.adjacency.at(NodeRef::item(0)).empty());
}

TEST_CASE("extraction matches the brute-force oracle", "[subgraph]") {
  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    auto rc = random_case(rng);
    int depth = 1 + static_cast<int>(rng.uniform_int(2));
    ItemId target = rc.items[rng.uniform_int(rc.items.size())];
    std::vector<ItemId> behaviors;
    int nb = static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < nb; ++i)
      behaviors.push_back(rc.items[rng.uniform_int(rc.items.size())]);

    auto sub = build_subgraph(rc.kg, target, behaviors,
                              {.max_depth = depth, .fanout_cap = kNoCap});
    auto ref = oracle::oracle_extract(rc.kg, target, behaviors, depth);

    CHECK(std::set<EntityId>(sub.entities.begin(), sub.entities.end()) == ref.entities);
    CHECK(oracle::as_tuples(sub.edges) == ref.edges);
    CHECK(node_count(sub) == ref.node_count);
  }
}

TEST_CASE("surviving entities always connect at least two anchor items", "[subgraph]") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto rc = random_case(rng);
    ItemId target = rc.items[0];
    std::vector<ItemId> behaviors(rc.items.begin() + 1, rc.items.end());
    auto sub = build_subgraph(rc.kg, target, behaviors, {.max_depth = 2, .fanout_cap = 6});
    for (EntityId e : sub.entities) CHECK(sub.item_sets.at(e).size() >= 2);
  }
}

TEST_CASE("adding a behavior never shrinks the subgraph", "[subgraph]") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto rc = random_case(rng);
    if (rc.items.size() < 3) continue;
    ItemId target = rc.items[0];
    std::vector<ItemId> base(rc.items.begin() + 1, rc.items.end() - 1);
    std::vector<ItemId> more(rc.items.begin() + 1, rc.items.end());
    BuildParams params{.max_depth = 2, .fanout_cap = 5};
    auto small = build_subgraph(rc.kg, target, base, params);
    auto large = build_subgraph(rc.kg, target, more, params);

    std::set<EntityId> se(small.entities.begin(), small.entities.end());
    std::set<EntityId> le(large.entities.begin(), large.entities.end());
    for (EntityId e : se) CHECK(le.count(e) == 1);
    CHECK(node_count(large) >= node_count(small));
  }
}

TEST_CASE("raising the fanout cap never removes a surviving entity", "[subgraph]") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto rc = random_case(rng);
    ItemId target = rc.items[0];
    std::vector<ItemId> behaviors(rc.items.begin() + 1, rc.items.end());
    auto narrow = build_subgraph(rc.kg, target, behaviors, {.max_depth = 2, .fanout_cap = 2});
    auto wide = build_subgraph(rc.kg, target, behaviors, {.max_depth = 2, .fanout_cap = 6});
    std::set<EntityId> ne(narrow.entities.begin(), narrow.entities.end());
    std::set<EntityId> we(wide.entities.begin(), wide.entities.end());
    for (EntityId e : ne) CHECK(we.count(e) == 1);
  }
}

TEST_CASE("an entity shared within depth and cap order always survives", "[subgraph]") {
  TempDir dir;
  // Target and one behavior both reach Hub in one hop; everything else is
  // singleton noise.
  auto kg = KnowledgeGraph::load(dir.file("t.tsv",
                                          "A\tr\tHub\n"
                                          "A\tr\tNoiseA\n"
                                          "B\tr\tHub\n"
                                          "B\tr\tNoiseB\n"),
                                 dir.file("a.tsv", "a\tA\nb\tB\n"));
  auto sub = build_subgraph(kg, 0, {1}, {.max_depth = 1, .fanout_cap = 8});
  auto hub = kg.entity_id("Hub").value();
  CHECK(std::set<EntityId>(sub.entities.begin(), sub.entities.end()) ==
        std::set<EntityId>{hub});
}

TEST_CASE("extraction is deterministic", "[subgraph]") {
  Rng rng(21);
  auto rc = random_case(rng);
  ItemId target = rc.items[0];
  std::vector<ItemId> behaviors(rc.items.begin() + 1, rc.items.end());
  BuildParams params{.max_depth = 2, .fanout_cap = 4};
  auto s1 = build_subgraph(rc.kg, target, behaviors, params);
  auto s2 = build_subgraph(rc.kg, target, behaviors, params);
  CHECK(s1.entities == s2.entities);
  CHECK(s1.edges == s2.edges);
  CHECK(s1.item_sets == s2.item_sets);
}

TEST_CASE("layered view lists anchors and entities with shared adjacency", "[subgraph]") {
  TempDir dir;
  // a - E - b chain through a shared entity E.
  auto kg = KnowledgeGraph::load(dir.file("t.tsv",
                                          "A\tcat\tE\n"
                                          "B\tcat\tE\n"),
                                 dir.file("a.tsv", "a\tA\nb\tB\n"));
  auto sub = build_subgraph(kg, 0, {1}, {.max_depth = 1, .fanout_cap = 8});
  auto view = layered_view(sub);

  auto e = kg.entity_id("E").value();
  REQUIRE(view.nodes == std::vector<NodeRef>{NodeRef::item(0), NodeRef::item(1),
                                             NodeRef::entity(e)});
  RelationId cat = 0, cat_inv = static_cast<RelationId>(kg.n_forward_relations());
  CHECK(view.adjacency.at(NodeRef::item(0)) ==
        std::vector<std::pair<RelationId, NodeRef>>{{cat, NodeRef::entity(e)}});
  CHECK(view.adjacency.at(NodeRef::entity(e)) ==
        std::vector<std::pair<RelationId, NodeRef>>{{cat_inv, NodeRef::item(0)},
                                                    {cat_inv, NodeRef::item(1)}});
}

TEST_CASE("node_count ignores edge-less anchors", "[subgraph]") {
  TempDir dir;
  auto kg = shirt_cup_kg(dir);
  auto sub = build_subgraph(kg, 0, {1, 2}, {.max_depth = 1, .fanout_cap = 8});
  auto view = layered_view(sub);
  CHECK(view.nodes.size() == 4);  // three anchors + Shirt
  CHECK(node_count(sub) == 3);    // anchor c contributes no edges
}
