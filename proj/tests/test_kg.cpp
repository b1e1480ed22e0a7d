#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "atbrg/kg.hpp"
#include "atbrg/rng.hpp"
#include "test_util.hpp"

using namespace atbrg;

namespace {

const char* kToyTriples =
    "Blouse\tCategory\tShirt\n"
    "Dress\tCategory\tShirt\n"
    "Shirt\tAudience\tGirl\n"
    "Blouse\tAudience\tGirl\n"
    "Dress\tStyle\tSweet\n"
    "Skirt\tCategory\tBottoms\n";

const char* kToyAlignment =
    "blouse\tBlouse\n"
    "dress\tDress\n"
    "skirt\tSkirt\n";

KnowledgeGraph load_toy(const TempDir& dir, KgOptions opt = {}) {
  return KnowledgeGraph::load(dir.file("triples.tsv", kToyTriples),
                              dir.file("alignment.tsv", kToyAlignment), opt);
}

// Random KG as raw files; entity/relation/item tokens are synthetic. Used for
// round-trip and property checks.
struct RandomKgFiles {
  std::string triples;
  std::string alignment;
  int n_items;
};

RandomKgFiles random_kg_files(Rng& rng, int max_entities, int max_triples) {
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
  int n_items = 1 + static_cast<int>(rng.uniform_int(
                        std::min<std::uint64_t>(5, pool.size())));
  std::string alignment;
  for (int i = 0; i < n_items; ++i) {
    int e = pool[rng.uniform_int(pool.size())];
    alignment += "item" + std::to_string(i) + "\tn" + std::to_string(e) + "\n";
  }
  return {triples, alignment, n_items};
}

}  // namespace

TEST_CASE("empty files load to an empty graph", "[kg]") {
  TempDir dir;
  auto kg = KnowledgeGraph::load(dir.file("t.tsv", ""), dir.file("a.tsv", ""));
  CHECK(kg.n_entities() == 0);
  CHECK(kg.n_relations() == 0);
  CHECK(kg.n_items() == 0);
  CHECK(kg.triples().empty());
}

TEST_CASE("single triple gains exactly one inverse", "[kg]") {
  TempDir dir;
  auto kg = KnowledgeGraph::load(dir.file("t.tsv", "Blouse\tCategory\tShirt\n"),
                                 dir.file("a.tsv", ""));
  REQUIRE(kg.n_entities() == 2);
  REQUIRE(kg.n_forward_relations() == 1);
  REQUIRE(kg.n_relations() == 2);
  REQUIRE(kg.triples().size() == 2);
  CHECK(kg.triples()[1] == Triple{1, 1, 0});
  CHECK(kg.relation_name(0) == "Category");
  CHECK(kg.relation_name(1) == "Category^-1");
  CHECK(kg.is_inverse(1));
  CHECK_FALSE(kg.is_inverse(0));
  CHECK(kg.inverse_of(0) == 1);
  CHECK(kg.inverse_of(1) == 0);
}

TEST_CASE("toy graph adjacency is sorted and inverse-augmented", "[kg]") {
  TempDir dir;
  auto kg = load_toy(dir);
  // Interning order: Blouse=0, Shirt=1, Dress=2, Girl=3, Sweet=4, Skirt=5,
  // Bottoms=6; Category=0, Audience=1, Style=2, inverses offset by 3.
  REQUIRE(kg.n_entities() == 7);
  REQUIRE(kg.n_forward_relations() == 3);
  auto shirt = kg.entity_id("Shirt");
  REQUIRE(shirt.has_value());
  REQUIRE(*shirt == 1);
  const auto& nbrs = kg.neighbors(*shirt);
  REQUIRE(nbrs.size() == 3);
  CHECK(nbrs[0] == std::pair<RelationId, EntityId>{1, 3});  // Audience -> Girl
  CHECK(nbrs[1] == std::pair<RelationId, EntityId>{3, 0});  // Category^-1 -> Blouse
  CHECK(nbrs[2] == std::pair<RelationId, EntityId>{3, 2});  // Category^-1 -> Dress
}

TEST_CASE("alignment defines the item vocabulary", "[kg]") {
  TempDir dir;
  auto kg = load_toy(dir);
  REQUIRE(kg.n_items() == 3);
  CHECK(kg.align(0) == 0);
  CHECK(kg.align(1) == 2);
  CHECK(kg.item_id("dress") == ItemId{1});
  CHECK(kg.require_item("skirt") == 2);
  CHECK_FALSE(kg.item_id("hat").has_value());
  CHECK_THROWS_AS(kg.require_item("hat"), AlignmentError);
  CHECK_THROWS_AS(kg.align(3), AlignmentError);
  CHECK_THROWS_AS(kg.align(-1), AlignmentError);
}

TEST_CASE("malformed lines are rejected with their line number", "[kg]") {
  TempDir dir;
  try {
    KnowledgeGraph::load(dir.file("t.tsv", "a\tr\tb\nbad line\n"), dir.file("a.tsv", ""));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(
      KnowledgeGraph::load(dir.file("t2.tsv", "a\tr\tb\tc\n"), dir.file("a2.tsv", "")),
      ParseError);
  CHECK_THROWS_AS(
      KnowledgeGraph::load(dir.file("t3.tsv", "a\t\tb\n"), dir.file("a3.tsv", "")),
      ParseError);
  CHECK_THROWS_AS(
      KnowledgeGraph::load(dir.file("t4.tsv", "a\tr\tb\n"), dir.file("a4.tsv", "x\n")),
      ParseError);
}

TEST_CASE("alignment integrity is enforced", "[kg]") {
  TempDir dir;
  CHECK_THROWS_AS(KnowledgeGraph::load(dir.file("t.tsv", "a\tr\tb\n"),
                                       dir.file("a.tsv", "item\tmissing\n")),
                  IntegrityError);
  CHECK_THROWS_AS(KnowledgeGraph::load(dir.file("t2.tsv", "a\tr\tb\n"),
                                       dir.file("a2.tsv", "item\ta\nitem\tb\n")),
                  IntegrityError);
}

TEST_CASE("lookup errors on out-of-range ids", "[kg]") {
  TempDir dir;
  auto kg = load_toy(dir);
  CHECK_THROWS_AS(kg.neighbors(99), LookupError);
  CHECK_THROWS_AS(kg.neighbors(-1), LookupError);
  CHECK_THROWS_AS(kg.entity_name(99), LookupError);
  CHECK_THROWS_AS(kg.relation_name(6), LookupError);
}

TEST_CASE("without augmentation a tail-only entity is isolated", "[kg]") {
  TempDir dir;
  auto kg = KnowledgeGraph::load(dir.file("t.tsv", "a\tr\tb\n"),
                                 dir.file("a.tsv", "item\tb\n"),
                                 KgOptions{.augment_inverse = false});
  REQUIRE(kg.n_relations() == 1);
  REQUIRE(kg.triples().size() == 1);
  auto b = kg.entity_id("b");
  REQUIRE(b.has_value());
  CHECK(kg.neighbors(*b).empty());
  CHECK_THROWS_AS(kg.inverse_of(0), ContractError);
}

TEST_CASE("duplicate triples are kept in the list but deduped in adjacency", "[kg]") {
  TempDir dir;
  auto kg = KnowledgeGraph::load(dir.file("t.tsv", "a\tr\tb\na\tr\tb\n"),
                                 dir.file("a.tsv", ""));
  CHECK(kg.triples().size() == 4);
  CHECK(kg.neighbors(0).size() == 1);
}

TEST_CASE("augmentation doubles the triple list", "[kg]") {
  TempDir dir;
  auto kg = load_toy(dir);
  CHECK(kg.triples().size() == 2 * kg.n_forward_triples());
  for (RelationId r = 0; r < static_cast<RelationId>(kg.n_relations()); ++r)
    CHECK(kg.inverse_of(kg.inverse_of(r)) == r);
}

TEST_CASE("save/load round-trips vocabularies, adjacency and alignment", "[kg]") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    TempDir dir;
    auto files = random_kg_files(rng, 30, 60);
    auto kg = KnowledgeGraph::load(dir.file("t.tsv", files.triples),
                                   dir.file("a.tsv", files.alignment));
    kg.save(dir.path / "t2.tsv", dir.path / "a2.tsv");
    auto kg2 = KnowledgeGraph::load(dir.path / "t2.tsv", dir.path / "a2.tsv");

    REQUIRE(kg2.n_entities() == kg.n_entities());
    REQUIRE(kg2.n_relations() == kg.n_relations());
    REQUIRE(kg2.n_items() == kg.n_items());
    REQUIRE(kg2.triples() == kg.triples());
    for (EntityId e = 0; e < static_cast<EntityId>(kg.n_entities()); ++e) {
      REQUIRE(kg2.entity_name(e) == kg.entity_name(e));
      REQUIRE(kg2.neighbors(e) == kg.neighbors(e));
    }
    for (ItemId i = 0; i < static_cast<ItemId>(kg.n_items()); ++i) {
      REQUIRE(kg2.item_name(i) == kg.item_name(i));
      REQUIRE(kg2.align(i) == kg.align(i));
    }
  }
}

TEST_CASE("queries do not mutate the graph", "[kg]") {
  TempDir dir;
  auto kg = load_toy(dir);
  kg.save(dir.path / "before_t.tsv", dir.path / "before_a.tsv");
  for (EntityId e = 0; e < static_cast<EntityId>(kg.n_entities()); ++e) kg.neighbors(e);
  for (ItemId i = 0; i < static_cast<ItemId>(kg.n_items()); ++i) kg.align(i);
  kg.entity_id("Shirt");
  kg.save(dir.path / "after_t.tsv", dir.path / "after_a.tsv");
  CHECK(slurp(dir.path / "before_t.tsv") == slurp(dir.path / "after_t.tsv"));
  CHECK(slurp(dir.path / "before_a.tsv") == slurp(dir.path / "after_a.tsv"));
}
