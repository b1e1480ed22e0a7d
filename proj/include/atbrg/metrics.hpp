#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "atbrg/errors.hpp"

namespace atbrg {

// Area under the ROC curve via the rank statistic: the probability that a
// uniformly chosen positive outscores a uniformly chosen negative, ties
// counted one half. Tie groups get their average rank, which keeps the
// numerator a sum of halves and therefore exact in double, so the result
// equals brute-force pair counting bit for bit.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw MetricError("auc: " + std::to_string(scores.size()) + " scores vs " +
                      std::to_string(labels.size()) + " labels");
  if (scores.empty()) throw MetricError("auc: empty input");

  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw MetricError("auc: non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw MetricError("auc: labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(labels[i]);
  }
  std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw MetricError("auc: needs both classes, got " + std::to_string(n_pos) +
                      " positives of " + std::to_string(scores.size()));

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
    i = j;
  }
  double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

// |model - base| / base * 100, the headline lift number.
inline double relative_improvement(double model_auc, double base_auc) {
  if (!(base_auc > 0.0)) throw ContractError("relative_improvement: base must be positive");
  return std::fabs(model_auc - base_auc) / base_auc * 100.0;
}

inline std::string format_percent(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f%%", value);
  return buf;
}

struct CtrBucket {
  int node_count = 0;
  double ctr = 0.0;
  int support = 0;
};

// Buckets samples by relational-subgraph node count and averages their labels,
// ascending by bucket. Empty input gives an empty series.
inline std::vector<CtrBucket> ctr_by_node_count(const std::vector<int>& node_counts,
                                                const std::vector<int>& labels) {
  if (node_counts.size() != labels.size())
    throw MetricError("ctr_by_node_count: size mismatch");
  std::map<int, std::pair<long long, long long>> acc;  // bucket -> (clicks, total)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw MetricError("ctr_by_node_count: labels must be 0 or 1");
    auto& [clicks, total] = acc[node_counts[i]];
    clicks += labels[i];
    ++total;
  }
  std::vector<CtrBucket> out;
  for (const auto& [bucket, ct] : acc)
    out.push_back({bucket, static_cast<double>(ct.first) / static_cast<double>(ct.second),
                   static_cast<int>(ct.second)});
  return out;
}

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

}  // namespace detail

// Spearman rank correlation: Pearson correlation of the tie-averaged ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw MetricError("spearman: size mismatch");
  if (x.size() < 2) throw MetricError("spearman: needs at least two points");
  auto rx = detail::average_ranks(x);
  auto ry = detail::average_ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw MetricError("spearman: an input is constant, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace atbrg
