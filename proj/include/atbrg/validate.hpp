#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "atbrg/dataset.hpp"
#include "atbrg/tsv.hpp"

namespace atbrg {

// One problem found by validate_dataset. `file` is relative to the dataset
// root, `line` is 1-based (0 for file-level problems such as a missing file).
struct Violation {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

namespace detail {

inline bool lenient_int(const std::string& tok, long long& out) {
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && p == tok.data() + tok.size();
}

inline bool lenient_double(const std::string& tok, double& out) {
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && p == tok.data() + tok.size();
}

// Checks one profile row (name, sparse list, dense list) against a side
// schema, appending a violation per defect instead of stopping at the first.
inline void check_profile(const std::vector<std::string>& cols, const SideSchema& side,
                          const std::string& file, std::size_t line,
                          std::vector<Violation>& out) {
  auto sparse_toks = split_list(cols[1]);
  if (sparse_toks.size() != side.sparse.size()) {
    out.push_back({file, line,
                   "expected " + std::to_string(side.sparse.size()) + " sparse ids, got " +
                       std::to_string(sparse_toks.size())});
  } else {
    for (std::size_t k = 0; k < sparse_toks.size(); ++k) {
      long long id = 0;
      if (!lenient_int(sparse_toks[k], id))
        out.push_back({file, line, "not an integer: '" + sparse_toks[k] + "'"});
      else if (id < 0 || id >= side.sparse[k].vocab)
        out.push_back({file, line,
                       "sparse id " + std::to_string(id) + " out of range for field " +
                           side.sparse[k].name});
    }
  }
  auto dense_toks = split_list(cols[2]);
  if (dense_toks.size() != side.dense.size()) {
    out.push_back({file, line,
                   "expected " + std::to_string(side.dense.size()) + " dense values, got " +
                       std::to_string(dense_toks.size())});
  } else {
    for (const auto& tok : dense_toks) {
      double v = 0;
      if (!lenient_double(tok, v))
        out.push_back({file, line, "not a number: '" + tok + "'"});
      else if (!std::isfinite(v))
        out.push_back({file, line, "dense value not finite"});
    }
  }
}

}  // namespace detail

// Lenient counterpart of load_dataset: walks the same layout, applies the
// same format and cross-reference rules, and reports every violation found
// rather than throwing on the first. An empty result means load_dataset will
// accept the directory. Content problems never throw; the only exceptions
// escaping are filesystem-level surprises (e.g. unreadable existing files).
inline std::vector<Violation> validate_dataset(const std::filesystem::path& dir) {
  std::vector<Violation> out;

  auto lines_of = [&](const std::string& rel, std::vector<std::string>& lines) {
    if (!std::filesystem::exists(dir / rel)) {
      out.push_back({rel, 0, "missing file"});
      return false;
    }
    lines = read_lines(dir / rel);
    return true;
  };

  // kg/triples.tsv defines the entity and relation universe.
  std::set<std::string> entities;
  bool have_entities = false;
  {
    std::vector<std::string> lines;
    if (lines_of("kg/triples.tsv", lines)) {
      have_entities = true;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto cols = split(lines[i], '\t');
        if (cols.size() != 3) {
          out.push_back({"kg/triples.tsv", i + 1, "expected 3 tab-separated columns"});
          continue;
        }
        bool empty = false;
        for (const auto& c : cols)
          if (c.empty()) empty = true;
        if (empty) {
          out.push_back({"kg/triples.tsv", i + 1, "empty token"});
          continue;
        }
        entities.insert(cols[0]);
        entities.insert(cols[2]);
      }
    }
  }

  // kg/alignment.tsv maps item names onto known entities, each item once.
  std::set<std::string> items;
  bool have_items = false;
  {
    std::vector<std::string> lines;
    if (lines_of("kg/alignment.tsv", lines)) {
      have_items = true;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto cols = split(lines[i], '\t');
        if (cols.size() != 2) {
          out.push_back({"kg/alignment.tsv", i + 1, "expected 2 tab-separated columns"});
          continue;
        }
        if (cols[0].empty() || cols[1].empty()) {
          out.push_back({"kg/alignment.tsv", i + 1, "empty token"});
          continue;
        }
        if (have_entities && !entities.count(cols[1]))
          out.push_back({"kg/alignment.tsv", i + 1, "unknown entity '" + cols[1] + "'"});
        if (items.count(cols[0]))
          out.push_back({"kg/alignment.tsv", i + 1, "duplicate item '" + cols[0] + "'"});
        items.insert(cols[0]);
      }
    }
  }

  // schema.json gates the profile checks below; without it only the column
  // counts of users.tsv and items.tsv can be verified.
  bool have_schema = false;
  FeatureSchema schema;
  {
    if (!std::filesystem::exists(dir / "schema.json")) {
      out.push_back({"schema.json", 0, "missing file"});
    } else {
      try {
        schema = FeatureSchema::from_json(nlohmann::json::parse(slurp_file(dir / "schema.json")));
        have_schema = true;
      } catch (const std::exception& e) {
        out.push_back({"schema.json", 0, e.what()});
      }
    }
  }

  // users.tsv: unique names, profiles matching the user schema.
  std::set<std::string> users;
  bool have_users = false;
  {
    std::vector<std::string> lines;
    if (lines_of("users.tsv", lines)) {
      have_users = true;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto cols = split(lines[i], '\t');
        if (cols.size() != 3) {
          out.push_back({"users.tsv", i + 1, "expected 3 columns"});
          continue;
        }
        if (users.count(cols[0]))
          out.push_back({"users.tsv", i + 1, "duplicate user '" + cols[0] + "'"});
        users.insert(cols[0]);
        if (have_schema) detail::check_profile(cols, schema.user, "users.tsv", i + 1, out);
      }
    }
  }

  // items.tsv: every aligned item exactly once, profiles per item schema.
  {
    std::vector<std::string> lines;
    std::set<std::string> covered;
    if (lines_of("items.tsv", lines)) {
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto cols = split(lines[i], '\t');
        if (cols.size() != 3) {
          out.push_back({"items.tsv", i + 1, "expected 3 columns"});
          continue;
        }
        if (have_items && !items.count(cols[0]))
          out.push_back({"items.tsv", i + 1, "item '" + cols[0] + "' not in alignment"});
        if (covered.count(cols[0]))
          out.push_back({"items.tsv", i + 1, "duplicate item '" + cols[0] + "'"});
        covered.insert(cols[0]);
        if (have_schema) detail::check_profile(cols, schema.item, "items.tsv", i + 1, out);
      }
      if (have_items)
        for (const auto& name : items)
          if (!covered.count(name))
            out.push_back({"items.tsv", 0, "no profile for item '" + name + "'"});
    }
  }

  // Interaction splits: known user and items, binary label, behavior list
  // within the schema bound.
  for (const std::string rel : {"train.tsv", "test.tsv"}) {
    std::vector<std::string> lines;
    if (!lines_of(rel, lines)) continue;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto cols = split(lines[i], '\t');
      if (cols.size() != 4) {
        out.push_back({rel, i + 1, "expected 4 columns"});
        continue;
      }
      if (have_users && !users.count(cols[0]))
        out.push_back({rel, i + 1, "unknown user '" + cols[0] + "'"});
      if (have_items && !items.count(cols[1]))
        out.push_back({rel, i + 1, "unknown item '" + cols[1] + "'"});
      long long label = 0;
      if (!detail::lenient_int(cols[2], label))
        out.push_back({rel, i + 1, "not an integer: '" + cols[2] + "'"});
      else if (label != 0 && label != 1)
        out.push_back({rel, i + 1, "label must be 0 or 1"});
      auto behaviors = split_list(cols[3]);
      if (have_items)
        for (const auto& tok : behaviors)
          if (!items.count(tok))
            out.push_back({rel, i + 1, "unknown behavior item '" + tok + "'"});
      if (have_schema && static_cast<int>(behaviors.size()) > schema.b_max)
        out.push_back({rel, i + 1, "behavior list longer than b_max"});
    }
  }

  return out;
}

}  // namespace atbrg
