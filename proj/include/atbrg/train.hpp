#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "atbrg/dataset.hpp"
#include "atbrg/errors.hpp"
#include "atbrg/metrics.hpp"
#include "atbrg/model.hpp"
#include "atbrg/params.hpp"
#include "atbrg/rng.hpp"
#include "atbrg/subgraph.hpp"
#include "atbrg/tsv.hpp"

namespace atbrg {

// Extraction is a pure function of (target, behaviors, depth, fanout), so each
// distinct key is built once and shared across batches, epochs, and repeats.
class SubgraphCache {
 public:
  const RelationalSubgraph& get(const KnowledgeGraph& kg, ItemId target,
                                const std::vector<ItemId>& behaviors, BuildParams params) {
    Key key{target, behaviors, params.max_depth, params.fanout_cap};
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(std::move(key), build_subgraph(kg, target, behaviors, params)).first;
    return it->second;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  using Key = std::tuple<ItemId, std::vector<ItemId>, int, int>;
  std::map<Key, RelationalSubgraph> cache_;
};

struct TrainReport {
  std::vector<double> epoch_loss;   // repeat 0, mean per-sample loss per epoch
  double test_auc = 0.0;            // mean over repeats
  std::vector<double> repeat_aucs;  // one per repeat, in repeat order
  nlohmann::json config;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;  // informational only; never serialized, so
                              // reports stay byte-identical across reruns

  nlohmann::json to_json() const {
    return {{"epoch_loss", epoch_loss},
            {"test_auc", test_auc},
            {"repeat_aucs", repeat_aucs},
            {"config", config},
            {"seed", seed}};
  }
};

struct TrainResult {
  ParameterStore params;  // repeat 0 weights
  DenseStats stats;
  TrainReport report;
};

namespace detail {

inline NodeId forward_sample(const AtbrgModel& model, BoundParams& bp, const Dataset& ds,
                             const Sample& s, SubgraphCache& cache) {
  const ModelConfig& cfg = model.config();
  const RelationalSubgraph& sub =
      cache.get(ds.kg, s.target, model.effective_behaviors(s), {cfg.depth, cfg.fanout});
  return model.sample_forward(bp, ds, s, sub);
}

inline NodeId forward_sample(const BaselineModel& model, BoundParams& bp, const Dataset& ds,
                             const Sample& s, SubgraphCache&) {
  return model.sample_forward(bp, ds, s);
}

template <class Model>
std::vector<double> score_split(const Model& model, const Dataset& ds,
                                const std::vector<Sample>& samples, SubgraphCache& cache) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const Sample& s : samples) {
    Tape t;
    BoundParams bp(t, model.params());
    scores.push_back(t.value(forward_sample(model, bp, ds, s, cache)).values[0]);
  }
  return scores;
}

template <class Model>
double run_one_repeat(Model& model, const Dataset& ds, SubgraphCache& cache,
                      std::vector<double>* epoch_loss) {
  const ModelConfig& cfg = model.config();
  Rng shuffle_rng(cfg.seed);
  std::vector<std::size_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Tape t;
      BoundParams bp(t, model.params());
      std::vector<NodeId> preds;
      std::vector<double> labels;
      preds.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const Sample& s = ds.train[order[i]];
        preds.push_back(forward_sample(model, bp, ds, s, cache));
        labels.push_back(static_cast<double>(s.label));
      }
      NodeId loss = t.bce(preds, labels);
      double lv = t.value(loss).values[0];
      if (!std::isfinite(lv))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch starting " + std::to_string(start));
      auto grads = t.backward(loss);
      model.params().adagrad_step(grads, cfg.lr, cfg.eps);
      loss_sum += lv * static_cast<double>(stop - start);
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(order.size()));
  }

  auto scores = score_split(model, ds, ds.test, cache);
  std::vector<int> labels;
  labels.reserve(ds.test.size());
  for (const Sample& s : ds.test) labels.push_back(s.label);
  return auc(scores, labels);
}

}  // namespace detail

// Full training run: `repeats` independent models seeded seed, seed+1, ...;
// the returned weights come from the first repeat, the reported AUC is the
// mean across repeats.
inline TrainResult train(const Dataset& ds, const ModelConfig& cfg_in) {
  ModelConfig cfg = cfg_in;
  cfg.validate();
  if (ds.train.empty()) throw ContractError("train: empty training split");
  if (ds.test.empty()) throw ContractError("train: empty test split");

  TrainResult result;
  result.stats = compute_stats(ds, ds.train);
  result.report.config = cfg.to_json();
  result.report.seed = cfg.seed;

  SubgraphCache cache;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    ModelConfig rc = cfg;
    rc.seed = cfg.seed + static_cast<std::uint64_t>(rep);
    std::vector<double>* losses = rep == 0 ? &result.report.epoch_loss : nullptr;
    double rep_auc = 0.0;
    if (cfg.model_kind == "baseline") {
      BaselineModel model(rc, ds.schema, result.stats, ds.kg);
      model.init();
      rep_auc = detail::run_one_repeat(model, ds, cache, losses);
      if (rep == 0) result.params = model.params();
    } else {
      AtbrgModel model(rc, ds.schema, result.stats, ds.kg);
      model.init();
      rep_auc = detail::run_one_repeat(model, ds, cache, losses);
      if (rep == 0) result.params = model.params();
    }
    result.report.repeat_aucs.push_back(rep_auc);
  }
  result.report.test_auc =
      std::accumulate(result.report.repeat_aucs.begin(), result.report.repeat_aucs.end(), 0.0) /
      static_cast<double>(result.report.repeat_aucs.size());
  return result;
}

struct Checkpoint {
  ParameterStore params;
  ModelConfig config;
  DenseStats stats;
};

inline nlohmann::json checkpoint_json(const ParameterStore& params, const ModelConfig& cfg,
                                      const DenseStats& stats) {
  return {{"params", params.to_json()}, {"config", cfg.to_json()}, {"stats", stats.to_json()}};
}

inline void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params,
                            const ModelConfig& cfg, const DenseStats& stats) {
  write_file(path, checkpoint_json(params, cfg, stats).dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    Checkpoint ckpt;
    ckpt.params = ParameterStore::from_json(j.at("params"));
    ckpt.config = ModelConfig::from_json(j.at("config"));
    ckpt.stats = DenseStats::from_json(j.at("stats"));
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Scores a sample list in order under the checkpoint's configuration.
inline std::vector<double> score_checkpoint(const Checkpoint& ckpt, const Dataset& ds,
                                            const std::vector<Sample>& samples) {
  SubgraphCache cache;
  if (ckpt.config.model_kind == "baseline") {
    BaselineModel model(ckpt.config, ds.schema, ckpt.stats, ds.kg);
    model.set_params(ckpt.params);
    return detail::score_split(model, ds, samples, cache);
  }
  AtbrgModel model(ckpt.config, ds.schema, ckpt.stats, ds.kg);
  model.set_params(ckpt.params);
  return detail::score_split(model, ds, samples, cache);
}

inline double evaluate(const Checkpoint& ckpt, const Dataset& ds,
                       const std::vector<Sample>& samples) {
  auto scores = score_checkpoint(ckpt, ds, samples);
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const Sample& s : samples) labels.push_back(s.label);
  return auc(scores, labels);
}

struct AblationRow {
  std::string name;
  double mean_auc = 0.0;
  std::vector<double> repeat_aucs;
};

struct AblationTable {
  std::string grid;
  std::vector<AblationRow> rows;

  nlohmann::json to_json() const {
    nlohmann::json out = {{"grid", grid}, {"rows", nlohmann::json::array()}};
    for (const auto& r : rows)
      out["rows"].push_back(
          {{"name", r.name}, {"mean_auc", r.mean_auc}, {"repeat_aucs", r.repeat_aucs}});
    return out;
  }

  // Aligned columns, paper-table style: each row's AUC plus its relative gap
  // to the best row, the best row marked with a dash.
  std::string text() const {
    double best = 0.0;
    for (const auto& r : rows) best = std::max(best, r.mean_auc);
    std::size_t width = 7;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    std::string out = "variant";
    out.append(width - 7 + 2, ' ');
    out += "AUC     RI vs best\n";
    for (const auto& r : rows) {
      out += r.name;
      out.append(width - r.name.size() + 2, ' ');
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", r.mean_auc);
      out += buf;
      out += "  ";
      out += r.mean_auc == best ? "-" : format_percent(relative_improvement(r.mean_auc, best));
      out += "\n";
    }
    return out;
  }
};

// Named configuration grids mirroring the published ablations: the activation
// and relation-aware switches, the layer/depth ladder, and the aggregators.
inline std::vector<std::pair<std::string, ModelConfig>> ablation_grid(const std::string& name,
                                                                      const ModelConfig& base) {
  std::vector<std::pair<std::string, ModelConfig>> grid;
  if (name == "ram-ral") {
    grid.emplace_back("full", base);
    ModelConfig no_ram = base;
    no_ram.use_ram = false;
    grid.emplace_back("w/o RAM", no_ram);
    ModelConfig no_ral = base;
    no_ral.use_ral = false;
    grid.emplace_back("w/o RAL", no_ral);
  } else if (name == "depth") {
    for (int layers : {1, 3, 5}) {
      ModelConfig c = base;
      c.layers = layers;
      c.depth = (layers - 1) / 2;  // one extractor layer per hop, plus the anchor hop back
      grid.emplace_back("L=" + std::to_string(layers), c);
    }
  } else if (name == "aggregator") {
    for (Aggregator agg : {Aggregator::RelationAware, Aggregator::Concat, Aggregator::Sum,
                           Aggregator::SelfAttention, Aggregator::Nonlinear}) {
      ModelConfig c = base;
      c.aggregator = agg;
      grid.emplace_back(aggregator_name(agg), c);
    }
  } else {
    throw ContractError("ablation_grid: unknown grid '" + name + "'");
  }
  return grid;
}

inline AblationTable run_ablation(const Dataset& ds, const std::string& grid_name,
                                  const ModelConfig& base) {
  AblationTable table;
  table.grid = grid_name;
  for (const auto& [name, cfg] : ablation_grid(grid_name, base)) {
    TrainResult r = train(ds, cfg);
    table.rows.push_back({name, r.report.test_auc, r.report.repeat_aucs});
  }
  return table;
}

}  // namespace atbrg
