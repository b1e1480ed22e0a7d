#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "atbrg/errors.hpp"
#include "atbrg/kg.hpp"
#include "atbrg/tsv.hpp"

namespace atbrg {

struct FieldSpec {
  std::string name;
  int vocab = 0;
};

struct SideSchema {
  std::vector<FieldSpec> sparse;
  std::vector<std::string> dense;
};

// Declares the feature layout of user and item profiles plus the behavior
// list bound. Lives in schema.json next to the profile files.
struct FeatureSchema {
  SideSchema user;
  SideSchema item;
  int b_max = 10;

  nlohmann::json to_json() const {
    auto side = [](const SideSchema& s) {
      nlohmann::json sparse = nlohmann::json::array();
      for (const auto& f : s.sparse) sparse.push_back({{"name", f.name}, {"vocab", f.vocab}});
      return nlohmann::json{{"sparse", sparse}, {"dense", s.dense}};
    };
    return {{"user", side(user)}, {"item", side(item)}, {"b_max", b_max}};
  }

  static FeatureSchema from_json(const nlohmann::json& j) {
    auto side = [](const nlohmann::json& js) {
      SideSchema s;
      for (const auto& f : js.at("sparse")) {
        FieldSpec spec{f.at("name").get<std::string>(), f.at("vocab").get<int>()};
        if (spec.vocab < 1) throw IntegrityError("schema: vocab must be >= 1 for field " + spec.name);
        s.sparse.push_back(std::move(spec));
      }
      s.dense = js.at("dense").get<std::vector<std::string>>();
      return s;
    };
    FeatureSchema schema;
    schema.user = side(j.at("user"));
    schema.item = side(j.at("item"));
    schema.b_max = j.at("b_max").get<int>();
    if (schema.b_max < 1) throw IntegrityError("schema: b_max must be >= 1");
    return schema;
  }
};

// One profile row: sparse feature ids in schema field order, then dense
// values in schema column order.
struct Profile {
  std::vector<int> sparse;
  std::vector<double> dense;
};

struct Sample {
  UserId user = -1;
  ItemId target = -1;
  int label = 0;
  std::vector<ItemId> behaviors;  // most recent first
};

struct Dataset {
  KnowledgeGraph kg;
  FeatureSchema schema;
  std::vector<std::string> user_names;
  std::map<std::string, UserId> user_index;
  std::vector<Profile> user_profiles;  // by user id
  std::vector<Profile> item_profiles;  // by item id, aligned with kg items
  std::vector<Sample> train;
  std::vector<Sample> test;
};

namespace detail {

inline Profile parse_profile(const std::vector<std::string>& cols, const SideSchema& side,
                             const std::string& where) {
  Profile p;
  auto sparse_toks = split_list(cols[1]);
  if (sparse_toks.size() != side.sparse.size())
    throw IntegrityError(where + ": expected " + std::to_string(side.sparse.size()) +
                         " sparse ids, got " + std::to_string(sparse_toks.size()));
  for (std::size_t k = 0; k < sparse_toks.size(); ++k) {
    long long id = parse_int(sparse_toks[k], where);
    if (id < 0 || id >= side.sparse[k].vocab)
      throw IntegrityError(where + ": sparse id " + std::to_string(id) +
                           " out of range for field " + side.sparse[k].name);
    p.sparse.push_back(static_cast<int>(id));
  }
  auto dense_toks = split_list(cols[2]);
  if (dense_toks.size() != side.dense.size())
    throw IntegrityError(where + ": expected " + std::to_string(side.dense.size()) +
                         " dense values, got " + std::to_string(dense_toks.size()));
  for (const auto& tok : dense_toks) {
    double v = parse_double(tok, where);
    if (!std::isfinite(v)) throw IntegrityError(where + ": dense value not finite");
    p.dense.push_back(v);
  }
  return p;
}

}  // namespace detail

inline std::vector<Sample> load_interactions(const std::filesystem::path& path,
                                             const Dataset& ds);

// Loads the on-disk layout produced by the generator:
//   dir/kg/triples.tsv  dir/kg/alignment.tsv  dir/schema.json
//   dir/items.tsv  dir/users.tsv  dir/train.tsv  dir/test.tsv
// kg_dir overrides the graph location (empty means dir/kg). Strict: the first
// inconsistency throws. validate_dataset() is the lenient, report-everything
// counterpart.
inline Dataset load_dataset(const std::filesystem::path& dir,
                            const std::filesystem::path& kg_dir = {}) {
  Dataset ds;
  auto kgd = kg_dir.empty() ? dir / "kg" : kg_dir;
  ds.kg = KnowledgeGraph::load(kgd / "triples.tsv", kgd / "alignment.tsv");

  {
    auto text = slurp_file(dir / "schema.json");
    ds.schema = FeatureSchema::from_json(nlohmann::json::parse(text));
  }

  // users.tsv defines the user vocabulary in first-appearance order.
  {
    auto lines = read_lines(dir / "users.tsv");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string where = "users.tsv:" + std::to_string(i + 1);
      auto cols = split(lines[i], '\t');
      if (cols.size() != 3) throw ParseError(where + ": expected 3 columns");
      if (ds.user_index.count(cols[0]))
        throw IntegrityError(where + ": duplicate user '" + cols[0] + "'");
      ds.user_index[cols[0]] = static_cast<UserId>(ds.user_names.size());
      ds.user_names.push_back(cols[0]);
      ds.user_profiles.push_back(detail::parse_profile(cols, ds.schema.user, where));
    }
  }

  // items.tsv must cover every aligned item exactly once.
  {
    ds.item_profiles.assign(ds.kg.n_items(), Profile{});
    std::vector<bool> seen(ds.kg.n_items(), false);
    auto lines = read_lines(dir / "items.tsv");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string where = "items.tsv:" + std::to_string(i + 1);
      auto cols = split(lines[i], '\t');
      if (cols.size() != 3) throw ParseError(where + ": expected 3 columns");
      auto id = ds.kg.item_id(cols[0]);
      if (!id) throw IntegrityError(where + ": item '" + cols[0] + "' not in alignment");
      if (seen[static_cast<std::size_t>(*id)])
        throw IntegrityError(where + ": duplicate item '" + cols[0] + "'");
      seen[static_cast<std::size_t>(*id)] = true;
      ds.item_profiles[static_cast<std::size_t>(*id)] =
          detail::parse_profile(cols, ds.schema.item, where);
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i])
        throw IntegrityError("items.tsv: no profile for item '" + ds.kg.item_name(static_cast<ItemId>(i)) + "'");
  }

  ds.train = load_interactions(dir / "train.tsv", ds);
  ds.test = load_interactions(dir / "test.tsv", ds);
  return ds;
}

// `user<TAB>item<TAB>label<TAB>comma-separated behaviors, most recent first`.
inline std::vector<Sample> load_interactions(const std::filesystem::path& path,
                                             const Dataset& ds) {
  std::vector<Sample> out;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string where = path.filename().string() + ":" + std::to_string(i + 1);
    auto cols = split(lines[i], '\t');
    if (cols.size() != 4) throw ParseError(where + ": expected 4 columns");
    Sample s;
    auto uit = ds.user_index.find(cols[0]);
    if (uit == ds.user_index.end())
      throw IntegrityError(where + ": unknown user '" + cols[0] + "'");
    s.user = uit->second;
    auto item = ds.kg.item_id(cols[1]);
    if (!item) throw IntegrityError(where + ": unknown item '" + cols[1] + "'");
    s.target = *item;
    long long label = parse_int(cols[2], where);
    if (label != 0 && label != 1)
      throw IntegrityError(where + ": label must be 0 or 1");
    s.label = static_cast<int>(label);
    for (const auto& tok : split_list(cols[3])) {
      auto b = ds.kg.item_id(tok);
      if (!b) throw IntegrityError(where + ": unknown behavior item '" + tok + "'");
      s.behaviors.push_back(*b);
    }
    if (static_cast<int>(s.behaviors.size()) > ds.schema.b_max)
      throw IntegrityError(where + ": behavior list longer than b_max");
    out.push_back(std::move(s));
  }
  return out;
}

// Per-column mean and standard deviation of the dense features, measured over
// the split's (user, target) occurrences. Stored in checkpoints so scoring
// normalizes identically at train and eval time.
struct DenseStats {
  std::vector<double> user_mu, user_sd, item_mu, item_sd;

  nlohmann::json to_json() const {
    return {{"user_mu", user_mu}, {"user_sd", user_sd},
            {"item_mu", item_mu}, {"item_sd", item_sd}};
  }
  static DenseStats from_json(const nlohmann::json& j) {
    DenseStats s;
    s.user_mu = j.at("user_mu").get<std::vector<double>>();
    s.user_sd = j.at("user_sd").get<std::vector<double>>();
    s.item_mu = j.at("item_mu").get<std::vector<double>>();
    s.item_sd = j.at("item_sd").get<std::vector<double>>();
    return s;
  }
};

inline DenseStats compute_stats(const Dataset& ds, const std::vector<Sample>& split) {
  if (split.empty()) throw ContractError("compute_stats: empty split");
  auto one_side = [&](std::size_t cols, auto&& profile_of) {
    std::vector<double> mu(cols, 0.0), sd(cols, 0.0);
    for (const Sample& s : split) {
      const Profile& p = profile_of(s);
      for (std::size_t c = 0; c < cols; ++c) mu[c] += p.dense[c];
    }
    for (double& m : mu) m /= static_cast<double>(split.size());
    for (const Sample& s : split) {
      const Profile& p = profile_of(s);
      for (std::size_t c = 0; c < cols; ++c) {
        double d = p.dense[c] - mu[c];
        sd[c] += d * d;
      }
    }
    for (double& v : sd) v = std::max(std::sqrt(v / static_cast<double>(split.size())), 1e-6);
    return std::pair{mu, sd};
  };
  DenseStats stats;
  auto [umu, usd] = one_side(ds.schema.user.dense.size(),
                             [&](const Sample& s) -> const Profile& {
                               return ds.user_profiles[static_cast<std::size_t>(s.user)];
                             });
  auto [imu, isd] = one_side(ds.schema.item.dense.size(),
                             [&](const Sample& s) -> const Profile& {
                               return ds.item_profiles[static_cast<std::size_t>(s.target)];
                             });
  stats.user_mu = umu;
  stats.user_sd = usd;
  stats.item_mu = imu;
  stats.item_sd = isd;
  return stats;
}

}  // namespace atbrg
