#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "atbrg/dataset.hpp"
#include "atbrg/errors.hpp"
#include "atbrg/rng.hpp"

namespace atbrg {

// Expands a positive-only interaction list: each positive is followed by k
// label-0 samples whose targets are drawn without replacement from the items
// the user never engaged with (any of their positive targets or behaviors).
// The negatives inherit the positive's behavior context. One generator seeded
// once drives the whole pass, so output is a pure function of the inputs.
inline std::vector<Sample> negative_sample(const std::vector<Sample>& positives,
                                           std::size_t n_items, int k, std::uint64_t seed) {
  if (k < 1) throw ContractError("negative_sample: k must be >= 1");
  std::map<UserId, std::set<ItemId>> engaged;
  for (const Sample& s : positives) {
    if (s.label != 1) throw ContractError("negative_sample: input must be all positives");
    if (s.target < 0 || static_cast<std::size_t>(s.target) >= n_items)
      throw ContractError("negative_sample: target outside the item universe");
    auto& set = engaged[s.user];
    set.insert(s.target);
    for (ItemId b : s.behaviors) {
      if (b < 0 || static_cast<std::size_t>(b) >= n_items)
        throw ContractError("negative_sample: behavior outside the item universe");
      set.insert(b);
    }
  }

  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(positives.size() * (static_cast<std::size_t>(k) + 1));
  for (const Sample& s : positives) {
    out.push_back(s);
    const auto& set = engaged.at(s.user);
    std::vector<ItemId> pool;
    pool.reserve(n_items - set.size());
    for (std::size_t i = 0; i < n_items; ++i)
      if (!set.count(static_cast<ItemId>(i))) pool.push_back(static_cast<ItemId>(i));
    if (pool.size() < static_cast<std::size_t>(k))
      throw SamplingError("negative_sample: user " + std::to_string(s.user) + " has only " +
                          std::to_string(pool.size()) + " unengaged items, need " +
                          std::to_string(k));
    for (std::uint64_t idx : rng.sample_distinct(pool.size(), static_cast<std::size_t>(k))) {
      Sample neg = s;
      neg.target = pool[static_cast<std::size_t>(idx)];
      neg.label = 0;
      out.push_back(std::move(neg));
    }
  }
  return out;
}

}  // namespace atbrg
