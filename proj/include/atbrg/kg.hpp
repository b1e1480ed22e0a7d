#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "atbrg/errors.hpp"
#include "atbrg/tsv.hpp"

namespace atbrg {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using ItemId = std::int32_t;
using UserId = std::int32_t;

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;

  auto operator<=>(const Triple&) const = default;
};

struct KgOptions {
  // When set, every loaded triple (h, r, t) also materializes (t, r~, h)
  // where r~ is a distinct inverse relation id, so traversal only ever needs
  // out-edges.
  bool augment_inverse = true;
};

// Immutable knowledge graph: entity/relation vocabularies interned in file
// order, adjacency lists, and the item -> entity alignment.
//
// Triple file: one `head<TAB>relation<TAB>tail` per line.
// Alignment file: one `item<TAB>entity` per line; it defines the item
// vocabulary and must only name entities the triple file introduced.
class KnowledgeGraph {
 public:
  static KnowledgeGraph load(const std::filesystem::path& triples_path,
                             const std::filesystem::path& alignment_path,
                             KgOptions options = {}) {
    KnowledgeGraph kg;
    kg.options_ = options;

    auto lines = read_lines(triples_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto cols = split(lines[i], '\t');
      if (cols.size() != 3)
        throw ParseError(triples_path.string() + ":" + std::to_string(i + 1) +
                         ": expected 3 tab-separated columns, got " +
                         std::to_string(cols.size()));
      for (const auto& c : cols)
        if (c.empty())
          throw ParseError(triples_path.string() + ":" + std::to_string(i + 1) +
                           ": empty token");
      EntityId h = kg.intern_entity(cols[0]);
      RelationId r = kg.intern_relation(cols[1]);
      EntityId t = kg.intern_entity(cols[2]);
      kg.triples_.push_back({h, r, t});
    }
    kg.n_forward_triples_ = kg.triples_.size();

    if (options.augment_inverse) {
      std::size_t nf = kg.n_forward_triples_;
      auto fwd_rels = static_cast<RelationId>(kg.relation_names_.size());
      kg.triples_.reserve(2 * nf);
      for (std::size_t i = 0; i < nf; ++i) {
        const Triple& t = kg.triples_[i];
        kg.triples_.push_back(
            {t.tail, static_cast<RelationId>(t.rel + fwd_rels), t.head});
      }
    }

    kg.adjacency_.assign(kg.entity_names_.size(), {});
    for (const Triple& t : kg.triples_)
      kg.adjacency_[static_cast<std::size_t>(t.head)].emplace_back(t.rel, t.tail);
    for (auto& nbrs : kg.adjacency_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }

    auto align_lines = read_lines(alignment_path);
    for (std::size_t i = 0; i < align_lines.size(); ++i) {
      auto cols = split(align_lines[i], '\t');
      if (cols.size() != 2)
        throw ParseError(alignment_path.string() + ":" + std::to_string(i + 1) +
                         ": expected 2 tab-separated columns, got " +
                         std::to_string(cols.size()));
      if (cols[0].empty() || cols[1].empty())
        throw ParseError(alignment_path.string() + ":" + std::to_string(i + 1) +
                         ": empty token");
      auto e = kg.entity_id(cols[1]);
      if (!e)
        throw IntegrityError(alignment_path.string() + ":" +
                             std::to_string(i + 1) +
                             ": alignment references unknown entity '" +
                             cols[1] + "'");
      if (kg.item_index_.count(cols[0]))
        throw IntegrityError(alignment_path.string() + ":" +
                             std::to_string(i + 1) + ": duplicate item '" +
                             cols[0] + "'");
      kg.item_index_[cols[0]] = static_cast<ItemId>(kg.item_names_.size());
      kg.item_names_.push_back(cols[0]);
      kg.item_entity_.push_back(*e);
    }
    return kg;
  }

  // Writes the forward triples and the alignment in their original order, so
  // a reload reproduces vocabularies and adjacency exactly.
  void save(const std::filesystem::path& triples_path,
            const std::filesystem::path& alignment_path) const {
    std::ostringstream t;
    for (std::size_t i = 0; i < n_forward_triples_; ++i) {
      const Triple& tr = triples_[i];
      t << entity_names_[static_cast<std::size_t>(tr.head)] << '\t'
        << relation_names_[static_cast<std::size_t>(tr.rel)] << '\t'
        << entity_names_[static_cast<std::size_t>(tr.tail)] << '\n';
    }
    write_file(triples_path, t.str());

    std::ostringstream a;
    for (std::size_t i = 0; i < item_names_.size(); ++i)
      a << item_names_[i] << '\t'
        << entity_names_[static_cast<std::size_t>(item_entity_[i])] << '\n';
    write_file(alignment_path, a.str());
  }

  std::size_t n_entities() const { return entity_names_.size(); }
  std::size_t n_forward_relations() const { return relation_names_.size(); }
  // Total relation vocabulary, inverse ids included when augmentation is on.
  std::size_t n_relations() const {
    return options_.augment_inverse ? 2 * relation_names_.size()
                                    : relation_names_.size();
  }
  std::size_t n_items() const { return item_names_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t n_forward_triples() const { return n_forward_triples_; }

  const std::string& entity_name(EntityId e) const {
    check_entity(e, "entity_name");
    return entity_names_[static_cast<std::size_t>(e)];
  }

  std::string relation_name(RelationId r) const {
    if (r < 0 || static_cast<std::size_t>(r) >= n_relations())
      throw LookupError("relation_name: id out of range");
    if (is_inverse(r))
      return relation_names_[static_cast<std::size_t>(
                 r - static_cast<RelationId>(relation_names_.size()))] +
             "^-1";
    return relation_names_[static_cast<std::size_t>(r)];
  }

  std::optional<EntityId> entity_id(const std::string& token) const {
    auto it = entity_index_.find(token);
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<RelationId> relation_id(const std::string& token) const {
    auto it = relation_index_.find(token);
    if (it == relation_index_.end()) return std::nullopt;
    return it->second;
  }

  bool is_inverse(RelationId r) const {
    return static_cast<std::size_t>(r) >= relation_names_.size();
  }

  // Involution pairing each forward relation with its inverse.
  RelationId inverse_of(RelationId r) const {
    if (!options_.augment_inverse)
      throw ContractError("inverse_of: inverse augmentation is disabled");
    if (r < 0 || static_cast<std::size_t>(r) >= n_relations())
      throw LookupError("inverse_of: id out of range");
    auto nf = static_cast<RelationId>(relation_names_.size());
    return is_inverse(r) ? r - nf : r + nf;
  }

  const std::vector<std::pair<RelationId, EntityId>>& neighbors(EntityId e) const {
    check_entity(e, "neighbors");
    return adjacency_[static_cast<std::size_t>(e)];
  }

  EntityId align(ItemId item) const {
    if (item < 0 || static_cast<std::size_t>(item) >= item_entity_.size())
      throw AlignmentError("align: item id " + std::to_string(item) +
                           " has no entity alignment");
    return item_entity_[static_cast<std::size_t>(item)];
  }

  std::optional<ItemId> item_id(const std::string& token) const {
    auto it = item_index_.find(token);
    if (it == item_index_.end()) return std::nullopt;
    return it->second;
  }

  ItemId require_item(const std::string& token) const {
    auto id = item_id(token);
    if (!id)
      throw AlignmentError("item '" + token + "' absent from alignment");
    return *id;
  }

  const std::string& item_name(ItemId item) const {
    if (item < 0 || static_cast<std::size_t>(item) >= item_names_.size())
      throw LookupError("item_name: id out of range");
    return item_names_[static_cast<std::size_t>(item)];
  }

 private:
  void check_entity(EntityId e, const char* who) const {
    if (e < 0 || static_cast<std::size_t>(e) >= entity_names_.size())
      throw LookupError(std::string(who) + ": entity id " + std::to_string(e) +
                        " out of range");
  }

  EntityId intern_entity(const std::string& token) {
    auto it = entity_index_.find(token);
    if (it != entity_index_.end()) return it->second;
    auto id = static_cast<EntityId>(entity_names_.size());
    entity_index_[token] = id;
    entity_names_.push_back(token);
    return id;
  }

  RelationId intern_relation(const std::string& token) {
    auto it = relation_index_.find(token);
    if (it != relation_index_.end()) return it->second;
    auto id = static_cast<RelationId>(relation_names_.size());
    relation_index_[token] = id;
    relation_names_.push_back(token);
    return id;
  }

  KgOptions options_;
  std::vector<std::string> entity_names_;
  std::map<std::string, EntityId> entity_index_;
  std::vector<std::string> relation_names_;  // forward only
  std::map<std::string, RelationId> relation_index_;
  std::vector<Triple> triples_;  // forward block, then inverse block
  std::size_t n_forward_triples_ = 0;
  std::vector<std::vector<std::pair<RelationId, EntityId>>> adjacency_;
  std::vector<std::string> item_names_;
  std::map<std::string, ItemId> item_index_;
  std::vector<EntityId> item_entity_;
};

}  // namespace atbrg
