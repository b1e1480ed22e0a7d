#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "atbrg/params.hpp"
#include "atbrg/rng.hpp"
#include "atbrg/tape.hpp"

namespace atbrg {

// Builds a scalar loss over the store's parameters. Must be deterministic:
// the checker re-evaluates it many times under small parameter nudges.
using GraphBuilder = std::function<NodeId(Tape&, ParameterStore&)>;

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> params;
  double tolerance = 0.0;

  bool all_pass() const {
    for (const auto& e : params)
      if (!e.pass) return false;
    return true;
  }
};

// Central finite differences against the tape's reverse sweep. Every element
// is checked unless the parameter exceeds sample_limit elements, in which
// case a seeded sample of max(sample_limit, 100) elements is used. Relative
// error uses a floor so near-zero gradients compare absolutely.
inline GradCheckReport grad_check(const GraphBuilder& builder, ParameterStore& store,
                                  double tolerance, std::size_t sample_limit = 0,
                                  double step = 1e-5, std::uint64_t seed = 17) {
  Tape tape;
  NodeId loss = builder(tape, store);
  auto analytic = tape.backward(loss);

  auto eval = [&]() {
    Tape t;
    NodeId l = builder(t, store);
    return t.value(l).values[0];
  };

  Rng rng(seed);
  GradCheckReport report;
  report.tolerance = tolerance;

  for (const std::string& name : store.names()) {
    DenseArray& value = store.value(name);
    std::size_t n = value.size();

    std::vector<std::size_t> indices;
    if (sample_limit > 0 && n > sample_limit) {
      std::size_t k = std::max<std::size_t>(sample_limit, 100);
      k = std::min(k, n);
      for (auto i : rng.sample_distinct(n, k)) indices.push_back(static_cast<std::size_t>(i));
      std::sort(indices.begin(), indices.end());
    } else {
      indices.resize(n);
      for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    }

    GradCheckEntry entry;
    entry.param = name;
    entry.checked = indices.size();
    auto ga = analytic.find(name);

    for (std::size_t i : indices) {
      double saved = value.values[i];
      value.values[i] = saved + step;
      double up = eval();
      value.values[i] = saved - step;
      double down = eval();
      value.values[i] = saved;

      double fd = (up - down) / (2.0 * step);
      double an = ga == analytic.end() ? 0.0 : ga->second.values[i];
      double denom = std::max({std::fabs(an), std::fabs(fd), 1e-3});
      entry.max_rel_err = std::max(entry.max_rel_err, std::fabs(an - fd) / denom);
    }
    entry.pass = entry.max_rel_err <= tolerance;
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace atbrg
