#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "atbrg/errors.hpp"
#include "atbrg/kg.hpp"
#include "atbrg/rng.hpp"
#include "atbrg/subgraph.hpp"
#include "atbrg/train.hpp"
#include "atbrg/tsv.hpp"

namespace atbrg {

// Recipe for a planted-signal benchmark: a random item-attribute KG, per-user
// behavior lists, and labels drawn Bernoulli(sigma(signal * (raw - mu))) where
// raw is a KG-derived quantity a graph-blind model cannot fully recover.
//
// signal_mode "node_count": raw is the node count of the sample's depth-1
// relational subgraph, which plants the node-count/CTR trend directly.
// signal_mode "relation": raw is the best behavior's polarity-weighted
// attribute overlap with the target, where a relation's polarity depends only
// on its identity, so attention that ignores relations loses information.
struct SynthSpec {
  int entities = 50;
  int relations = 4;
  int items = 40;
  int attrs_min = 3;
  int attrs_max = 6;
  int users = 80;
  int behaviors_min = 2;
  int behaviors_max = 6;
  double signal = 0.0;
  std::string signal_mode = "node_count";
  int train_count = 2000;
  int test_count = 600;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& msg) { throw ValidationError("synth spec: " + msg); };
    if (entities < 1 || relations < 1 || items < 1 || users < 1) fail("counts must be >= 1");
    if (attrs_min < 1 || attrs_max < attrs_min) fail("attribute range is empty");
    if (attrs_max > entities) fail("attrs_max exceeds the attribute pool");
    if (behaviors_min < 0 || behaviors_max < behaviors_min) fail("behavior range is empty");
    if (behaviors_max > 10) fail("behaviors_max exceeds the cap of 10");
    if (behaviors_max > items) fail("behaviors_max exceeds the item count");
    if (!(signal >= 0.0)) fail("signal must be >= 0");
    if (signal_mode != "node_count" && signal_mode != "relation")
      fail("signal_mode must be node_count or relation");
    if (signal_mode == "relation" && signal > 0.0 && relations < 2)
      fail("relation mode needs at least two relations to carry polarity");
    if (train_count < 1 || test_count < 1) fail("split sizes must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"entities", entities},
            {"relations", relations},
            {"items", items},
            {"attrs_min", attrs_min},
            {"attrs_max", attrs_max},
            {"users", users},
            {"behaviors_min", behaviors_min},
            {"behaviors_max", behaviors_max},
            {"signal", signal},
            {"signal_mode", signal_mode},
            {"train", train_count},
            {"test", test_count},
            {"seed", seed}};
  }

  static SynthSpec from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "entities",       "relations", "items", "attrs_min",   "attrs_max", "users",
        "behaviors_min",  "behaviors_max", "signal", "signal_mode", "train", "test",
        "seed"};
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) throw ValidationError("synth spec: unknown key '" + key + "'");
    SynthSpec s;
    try {
      s.entities = j.value("entities", s.entities);
      s.relations = j.value("relations", s.relations);
      s.items = j.value("items", s.items);
      s.attrs_min = j.value("attrs_min", s.attrs_min);
      s.attrs_max = j.value("attrs_max", s.attrs_max);
      s.users = j.value("users", s.users);
      s.behaviors_min = j.value("behaviors_min", s.behaviors_min);
      s.behaviors_max = j.value("behaviors_max", s.behaviors_max);
      s.signal = j.value("signal", s.signal);
      s.signal_mode = j.value("signal_mode", s.signal_mode);
      s.train_count = j.value("train", s.train_count);
      s.test_count = j.value("test", s.test_count);
      s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("synth spec: ") + e.what());
    }
    s.validate();
    return s;
  }
};

namespace detail {

// polarity by generator relation index, read back off the token so the value
// does not depend on interning order
inline int relation_polarity(const KnowledgeGraph& kg, RelationId r, int n_relations) {
  const std::string& name = kg.relation_name(r);
  int m = static_cast<int>(parse_int(name.substr(1), "relation token"));
  return m < n_relations / 2 ? 1 : -1;
}

}  // namespace detail

// Writes the full on-disk dataset layout under dir: kg/{triples,alignment}.tsv,
// schema.json, users.tsv, items.tsv, train.tsv, test.tsv. Bit-deterministic
// per spec: same spec, same bytes.
inline void generate(const SynthSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir / "kg");
  Rng rng(spec.seed);

  // the KG comes first: item anchors I<j> linked to attribute entities E<k>
  std::string triples, alignment;
  for (int j = 0; j < spec.items; ++j) {
    int na = spec.attrs_min +
             static_cast<int>(rng.uniform_int(
                 static_cast<std::uint64_t>(spec.attrs_max - spec.attrs_min + 1)));
    for (std::uint64_t k : rng.sample_distinct(static_cast<std::uint64_t>(spec.entities),
                                               static_cast<std::size_t>(na))) {
      auto m = rng.uniform_int(static_cast<std::uint64_t>(spec.relations));
      triples += "I" + std::to_string(j) + "\tR" + std::to_string(m) + "\tE" +
                 std::to_string(k) + "\n";
    }
    alignment += std::to_string(j) + "\tI" + std::to_string(j) + "\n";
  }
  write_file(dir / "kg" / "triples.tsv", triples);
  write_file(dir / "kg" / "alignment.tsv", alignment);
  KnowledgeGraph kg = KnowledgeGraph::load(dir / "kg" / "triples.tsv",
                                           dir / "kg" / "alignment.tsv");

  nlohmann::json schema = {
      {"user", {{"sparse", {{{"name", "uid"}, {"vocab", spec.users}}}}, {"dense", {"act"}}}},
      {"item", {{"sparse", {{{"name", "iid"}, {"vocab", spec.items}}}}, {"dense", {"pop"}}}},
      {"b_max", 10}};
  write_file(dir / "schema.json", schema.dump(2) + "\n");

  std::string users_tsv, items_tsv;
  for (int u = 0; u < spec.users; ++u)
    users_tsv += "u" + std::to_string(u) + "\t" + std::to_string(u) + "\t" +
                 fmt_double(rng.uniform(0.0, 1.0)) + "\n";
  for (int j = 0; j < spec.items; ++j)
    items_tsv += std::to_string(j) + "\t" + std::to_string(j) + "\t" +
                 fmt_double(rng.uniform(0.0, 1.0)) + "\n";
  write_file(dir / "users.tsv", users_tsv);
  write_file(dir / "items.tsv", items_tsv);

  // fixed behavior list per user, most recent first
  std::vector<std::vector<ItemId>> behaviors(static_cast<std::size_t>(spec.users));
  for (auto& list : behaviors) {
    int nb = spec.behaviors_min +
             static_cast<int>(rng.uniform_int(
                 static_cast<std::uint64_t>(spec.behaviors_max - spec.behaviors_min + 1)));
    for (std::uint64_t idx : rng.sample_distinct(static_cast<std::uint64_t>(spec.items),
                                                 static_cast<std::size_t>(nb)))
      list.push_back(static_cast<ItemId>(idx));
  }

  // per-item forward attribute views for the relation-mode overlap
  std::vector<std::vector<std::pair<RelationId, EntityId>>> fwd(
      static_cast<std::size_t>(spec.items));
  std::vector<std::set<EntityId>> attr_set(static_cast<std::size_t>(spec.items));
  for (int j = 0; j < spec.items; ++j) {
    for (const auto& [r, e] : kg.neighbors(kg.align(j))) {
      if (kg.is_inverse(r)) continue;
      fwd[static_cast<std::size_t>(j)].emplace_back(r, e);
      attr_set[static_cast<std::size_t>(j)].insert(e);
    }
  }

  SubgraphCache cache;
  auto raw_of = [&](int u, ItemId t) -> double {
    const auto& list = behaviors[static_cast<std::size_t>(u)];
    if (spec.signal_mode == "node_count")
      return static_cast<double>(node_count(cache.get(kg, t, list, {1, 1 << 20})));
    bool any = false;
    double best = 0.0;
    for (ItemId b : list) {
      if (b == t) continue;
      double overlap = 0.0;
      for (const auto& [r, e] : fwd[static_cast<std::size_t>(t)])
        if (attr_set[static_cast<std::size_t>(b)].count(e))
          overlap += detail::relation_polarity(kg, r, spec.relations);
      if (!any || overlap > best) {
        best = overlap;
        any = true;
      }
    }
    return any ? best : 0.0;
  };

  // pilot draw centers the sigmoid so base CTR sits near one half
  Rng pilot(spec.seed ^ 0x9e3779b97f4a7c15ull);
  double mu = 0.0;
  for (int i = 0; i < 1000; ++i) {
    int u = static_cast<int>(pilot.uniform_int(static_cast<std::uint64_t>(spec.users)));
    auto t = static_cast<ItemId>(pilot.uniform_int(static_cast<std::uint64_t>(spec.items)));
    mu += raw_of(u, t);
  }
  mu /= 1000.0;

  auto draw_split = [&](int n) {
    std::string out;
    for (int i = 0; i < n; ++i) {
      int u = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.users)));
      auto t = static_cast<ItemId>(rng.uniform_int(static_cast<std::uint64_t>(spec.items)));
      double p = 1.0 / (1.0 + std::exp(-spec.signal * (raw_of(u, t) - mu)));
      int label = rng.bernoulli(p) ? 1 : 0;
      out += "u" + std::to_string(u) + "\t" + std::to_string(t) + "\t" +
             std::to_string(label) + "\t";
      const auto& list = behaviors[static_cast<std::size_t>(u)];
      for (std::size_t b = 0; b < list.size(); ++b) {
        if (b) out += ",";
        out += std::to_string(list[b]);
      }
      out += "\n";
    }
    return out;
  };
  write_file(dir / "train.tsv", draw_split(spec.train_count));
  write_file(dir / "test.tsv", draw_split(spec.test_count));
}

}  // namespace atbrg
