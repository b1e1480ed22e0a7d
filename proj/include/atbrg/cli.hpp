#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atbrg/config.hpp"
#include "atbrg/dataset.hpp"
#include "atbrg/errors.hpp"
#include "atbrg/kg.hpp"
#include "atbrg/metrics.hpp"
#include "atbrg/subgraph.hpp"
#include "atbrg/synth.hpp"
#include "atbrg/train.hpp"
#include "atbrg/tsv.hpp"
#include "atbrg/validate.hpp"

namespace atbrg {

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(slurp_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_file(path, j.dump(2) + "\n");
}

// Edges as [head, relation id, tail] with node ids in the "i:<n>"/"e:<n>"
// form, so item and entity namespaces stay distinct in the dump.
inline nlohmann::json subgraph_json(const RelationalSubgraph& sub) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : sub.edges)
    edges.push_back({e.head.str(), e.rel, e.tail.str()});
  return {{"target", sub.target},   {"behaviors", sub.behaviors},
          {"anchors", sub.anchors}, {"entities", sub.entities},
          {"edges", edges},         {"node_count", node_count(sub)}};
}

inline std::string ctr_table_text(const std::vector<CtrBucket>& buckets) {
  std::string out = "node_count       ctr  support\n";
  char row[96];
  for (const auto& b : buckets) {
    std::snprintf(row, sizeof(row), "%10d  %8.4f  %7d\n", b.node_count, b.ctr, b.support);
    out += row;
  }
  return out;
}

}  // namespace detail

// Unified command-line surface. Exit codes: 0 success, 1 data or contract
// errors (anything rooted in atbrg::Error), 2 usage errors. Every subcommand
// takes --seed/--config/--out for interface uniformity; where one has no
// effect its help text says so.
inline int run_cli(int argc, char** argv) {
  CLI::App app{"knowledge-graph recommendation toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path, out_path;
  std::string data_dir, kg_dir, ckpt_path, samples_path, spec_path, val_dir;
  std::string target_name, behaviors_csv, grid_name = "ram-ral", split = "test";
  int depth = -1, fanout = -1;

  auto common = [&](CLI::App* c, const char* config_help, const char* out_help) {
    c->add_option("--seed", seed, "override the configured seed")->option_text("N");
    c->add_option("--config", config_path, config_help)->option_text("FILE");
    c->add_option("--out", out_path, out_help)->option_text("PATH");
  };
  const char* noop = "accepted for interface uniformity; no effect here";

  auto* c_synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
  c_synth->add_option("--spec", spec_path, "generator spec JSON")->required();
  common(c_synth, noop, "output dataset directory");
  c_synth->get_option("--out")->required();

  auto* c_val = app.add_subcommand("validate", "check a dataset directory, listing every violation");
  c_val->add_option("dir", val_dir, "dataset directory")->required();
  common(c_val, noop, "also write the violations as TSV");

  auto* c_ext = app.add_subcommand("extract", "build one relational subgraph and dump it as JSON");
  c_ext->add_option("--kg", kg_dir, "directory with triples.tsv and alignment.tsv")->required();
  c_ext->add_option("--target", target_name, "target item name")->required();
  c_ext->add_option("--behaviors", behaviors_csv, "comma-separated behavior item names");
  c_ext->add_option("--depth", depth, "hops per anchor (default 2)");
  c_ext->add_option("--fanout", fanout, "per-node expansion cap, 0 = unlimited (default 8)");
  common(c_ext, "model config supplying depth/fanout defaults", "write JSON here instead of stdout");

  auto* c_train = app.add_subcommand("train", "train a model and write checkpoint + report");
  c_train->add_option("--data", data_dir, "dataset directory")->required();
  c_train->add_option("--kg", kg_dir, "graph directory override (default <data>/kg)");
  common(c_train, "model/training config JSON", "run directory for ckpt.json and report.json");
  c_train->get_option("--config")->required();
  c_train->get_option("--out")->required();

  auto* c_eval = app.add_subcommand("eval", "score a split under a checkpoint and print AUC");
  c_eval->add_option("--data", data_dir, "dataset directory")->required();
  c_eval->add_option("--kg", kg_dir, "graph directory override (default <data>/kg)");
  c_eval->add_option("--checkpoint", ckpt_path, "checkpoint JSON")->required();
  c_eval->add_option("--split", split, "which split to score")
      ->check(CLI::IsMember({"train", "test"}));
  common(c_eval, noop, "also write {\"auc\": ...} JSON");

  auto* c_abl = app.add_subcommand("ablate", "train a variant grid and print the comparison table");
  c_abl->add_option("--data", data_dir, "dataset directory")->required();
  c_abl->add_option("--kg", kg_dir, "graph directory override (default <data>/kg)");
  c_abl->add_option("--grid", grid_name, "ram-ral | depth | aggregator");
  common(c_abl, "base model/training config JSON", "directory for ablation.json and ablation.txt");
  c_abl->get_option("--config")->required();

  auto* c_ana = app.add_subcommand("analyze", "bucket a split's CTR by subgraph node count");
  c_ana->add_option("--data", data_dir, "dataset directory")->required();
  c_ana->add_option("--kg", kg_dir, "graph directory override (default <data>/kg)");
  c_ana->add_option("--split", split, "which split to bucket")
      ->check(CLI::IsMember({"train", "test"}));
  c_ana->add_option("--depth", depth, "hops per anchor (default 1)");
  c_ana->add_option("--fanout", fanout, "per-node expansion cap, 0 = unlimited (default 0)");
  common(c_ana, "model config supplying depth/fanout defaults",
         "directory for analysis.tsv and analysis.dat");

  auto* c_pred = app.add_subcommand("predict", "score a samples file under a checkpoint");
  c_pred->add_option("--data", data_dir, "dataset directory")->required();
  c_pred->add_option("--kg", kg_dir, "graph directory override (default <data>/kg)");
  c_pred->add_option("--checkpoint", ckpt_path, "checkpoint JSON")->required();
  c_pred->add_option("--samples", samples_path, "interaction TSV to score")->required();
  common(c_pred, noop, "write one score per line here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_synth)) {
      SynthSpec spec = SynthSpec::from_json(detail::read_json_file(spec_path));
      if (c_synth->count("--seed")) spec.seed = seed;
      generate(spec, out_path);
      return 0;
    }

    if (app.got_subcommand(c_val)) {
      auto violations = validate_dataset(val_dir);
      for (const auto& v : violations) {
        if (v.line == 0)
          std::cout << v.file << ": " << v.message << "\n";
        else
          std::cout << v.file << ":" << v.line << ": " << v.message << "\n";
      }
      if (!out_path.empty()) {
        std::string tsv = "file\tline\tmessage\n";
        for (const auto& v : violations)
          tsv += v.file + "\t" + std::to_string(v.line) + "\t" + v.message + "\n";
        write_file(out_path, tsv);
      }
      return violations.empty() ? 0 : 1;
    }

    if (app.got_subcommand(c_ext)) {
      KnowledgeGraph kg = KnowledgeGraph::load(std::filesystem::path(kg_dir) / "triples.tsv",
                                               std::filesystem::path(kg_dir) / "alignment.tsv");
      BuildParams bp;
      if (!config_path.empty()) {
        ModelConfig cfg = ModelConfig::from_json(detail::read_json_file(config_path));
        bp.max_depth = cfg.depth;
        bp.fanout_cap = cfg.fanout;
      }
      if (c_ext->count("--depth")) bp.max_depth = depth;
      if (c_ext->count("--fanout")) bp.fanout_cap = fanout == 0 ? (1 << 20) : fanout;
      auto want = [&](const std::string& name) {
        auto id = kg.item_id(name);
        if (!id) throw IntegrityError("extract: unknown item '" + name + "'");
        return *id;
      };
      std::vector<ItemId> behaviors;
      for (const auto& tok : split_list(behaviors_csv)) behaviors.push_back(want(tok));
      auto sub = build_subgraph(kg, want(target_name), behaviors, bp);
      auto j = detail::subgraph_json(sub);
      if (out_path.empty())
        std::cout << j.dump(2) << "\n";
      else
        detail::write_json_file(out_path, j);
      return 0;
    }

    if (app.got_subcommand(c_train)) {
      Dataset ds = load_dataset(data_dir, kg_dir);
      ModelConfig cfg = ModelConfig::from_json(detail::read_json_file(config_path));
      if (c_train->count("--seed")) cfg.seed = seed;
      TrainResult r = train(ds, cfg);
      std::filesystem::create_directories(out_path);
      save_checkpoint(std::filesystem::path(out_path) / "ckpt.json", r.params, cfg, r.stats);
      detail::write_json_file(std::filesystem::path(out_path) / "report.json",
                              r.report.to_json());
      for (std::size_t i = 0; i < r.report.epoch_loss.size(); ++i)
        std::cout << "epoch " << i << " loss " << fmt_double(r.report.epoch_loss[i]) << "\n";
      std::cout << "test_auc " << fmt_double(r.report.test_auc) << "\n";
      return 0;
    }

    if (app.got_subcommand(c_eval)) {
      Dataset ds = load_dataset(data_dir, kg_dir);
      Checkpoint ckpt = load_checkpoint(ckpt_path);
      double a = evaluate(ckpt, ds, split == "train" ? ds.train : ds.test);
      std::cout << fmt_double(a) << "\n";
      if (!out_path.empty()) detail::write_json_file(out_path, {{"auc", a}});
      return 0;
    }

    if (app.got_subcommand(c_abl)) {
      Dataset ds = load_dataset(data_dir, kg_dir);
      ModelConfig cfg = ModelConfig::from_json(detail::read_json_file(config_path));
      if (c_abl->count("--seed")) cfg.seed = seed;
      AblationTable table = run_ablation(ds, grid_name, cfg);
      std::cout << table.text();
      if (!out_path.empty()) {
        std::filesystem::create_directories(out_path);
        detail::write_json_file(std::filesystem::path(out_path) / "ablation.json",
                                table.to_json());
        write_file(std::filesystem::path(out_path) / "ablation.txt", table.text());
      }
      return 0;
    }

    if (app.got_subcommand(c_ana)) {
      Dataset ds = load_dataset(data_dir, kg_dir);
      BuildParams bp{1, 1 << 20};
      if (!config_path.empty()) {
        ModelConfig cfg = ModelConfig::from_json(detail::read_json_file(config_path));
        bp.max_depth = cfg.depth;
        bp.fanout_cap = cfg.fanout;
      }
      if (c_ana->count("--depth")) bp.max_depth = depth;
      if (c_ana->count("--fanout")) bp.fanout_cap = fanout == 0 ? (1 << 20) : fanout;
      const auto& samples = split == "train" ? ds.train : ds.test;
      SubgraphCache cache;
      std::vector<int> counts, labels;
      for (const Sample& s : samples) {
        counts.push_back(node_count(cache.get(ds.kg, s.target, s.behaviors, bp)));
        labels.push_back(s.label);
      }
      auto buckets = ctr_by_node_count(counts, labels);
      std::cout << detail::ctr_table_text(buckets);
      try {
        std::vector<double> xs, ys;
        for (const auto& b : buckets) {
          xs.push_back(b.node_count);
          ys.push_back(b.ctr);
        }
        char line[64];
        std::snprintf(line, sizeof(line), "spearman %.4f\n", spearman(xs, ys));
        std::cout << line;
      } catch (const MetricError& e) {
        std::cout << "spearman n/a (" << e.what() << ")\n";
      }
      if (!out_path.empty()) {
        std::filesystem::create_directories(out_path);
        std::string tsv = "node_count\tctr\tsupport\n";
        std::string dat = "# node_count ctr support\n";
        for (const auto& b : buckets) {
          tsv += std::to_string(b.node_count) + "\t" + fmt_double(b.ctr) + "\t" +
                 std::to_string(b.support) + "\n";
          dat += std::to_string(b.node_count) + " " + fmt_double(b.ctr) + " " +
                 std::to_string(b.support) + "\n";
        }
        write_file(std::filesystem::path(out_path) / "analysis.tsv", tsv);
        write_file(std::filesystem::path(out_path) / "analysis.dat", dat);
      }
      return 0;
    }

    if (app.got_subcommand(c_pred)) {
      Dataset ds = load_dataset(data_dir, kg_dir);
      Checkpoint ckpt = load_checkpoint(ckpt_path);
      auto samples = load_interactions(samples_path, ds);
      auto scores = score_checkpoint(ckpt, ds, samples);
      std::string lines;
      for (double s : scores) lines += fmt_double(s) + "\n";
      if (out_path.empty())
        std::cout << lines;
      else
        write_file(out_path, lines);
      return 0;
    }

    return 2;
  } catch (const Error& e) {
    std::cerr << "atbrg: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "atbrg: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace atbrg
