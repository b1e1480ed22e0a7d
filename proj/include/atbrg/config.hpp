#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "atbrg/errors.hpp"

namespace atbrg {

enum class Aggregator { RelationAware, Concat, Sum, SelfAttention, Nonlinear };

inline std::string aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::RelationAware: return "relation-aware";
    case Aggregator::Concat: return "concat";
    case Aggregator::Sum: return "sum";
    case Aggregator::SelfAttention: return "self-attention";
    case Aggregator::Nonlinear: return "nonlinear";
  }
  return "?";
}

inline Aggregator aggregator_from_name(const std::string& s) {
  if (s == "relation-aware") return Aggregator::RelationAware;
  if (s == "concat") return Aggregator::Concat;
  if (s == "sum") return Aggregator::Sum;
  if (s == "self-attention") return Aggregator::SelfAttention;
  if (s == "nonlinear") return Aggregator::Nonlinear;
  throw ContractError("unknown aggregator '" + s + "'");
}

// Everything that defines a model and a training run. Serialized verbatim
// into checkpoints and reports so a run can be reproduced from either.
struct ModelConfig {
  int embed_dim = 4;
  int layers = 5;  // node state width doubles each layer: d * 2^l
  std::vector<int> mlp_dims = {512, 256, 128};
  int b_max = 10;
  Aggregator aggregator = Aggregator::RelationAware;
  bool use_ram = true;  // relation-aware attention logits
  bool use_ral = true;  // behavior activation (attention over behaviors)
  double lr = 0.001;
  double eps = 1e-8;
  std::uint64_t seed = 42;
  int depth = 2;   // KG hops per anchor during extraction
  int fanout = 8;  // per-node expansion cap during extraction
  int batch_size = 64;
  int epochs = 5;
  bool desk_scale = false;     // shrink default MLP for laptop-sized runs
  bool dedupe_target = false;  // drop the target from its own behavior list
  int agg_cap = 8;             // neighbor slots for the concat aggregator
  std::string mlp_activation = "tanh";
  std::string model_kind = "atbrg";  // or "baseline" (behavior-pooling MLP)
  int repeats = 1;

  void validate() const {
    if (embed_dim < 1) throw ContractError("config: embed_dim must be >= 1");
    if (layers < 1) throw ContractError("config: layers must be >= 1");
    if (mlp_dims.empty()) throw ContractError("config: mlp_dims must be nonempty");
    for (int w : mlp_dims)
      if (w < 1) throw ContractError("config: mlp widths must be >= 1");
    if (b_max < 1) throw ContractError("config: b_max must be >= 1");
    if (lr <= 0) throw ContractError("config: lr must be positive");
    if (eps <= 0) throw ContractError("config: eps must be positive");
    if (depth < 0) throw ContractError("config: depth must be >= 0");
    if (fanout < 1) throw ContractError("config: fanout must be >= 1");
    if (batch_size < 1) throw ContractError("config: batch_size must be >= 1");
    if (epochs < 0) throw ContractError("config: epochs must be >= 0");
    if (agg_cap < 1) throw ContractError("config: agg_cap must be >= 1");
    if (repeats < 1) throw ContractError("config: repeats must be >= 1");
    if (mlp_activation != "tanh" && mlp_activation != "sigmoid")
      throw ContractError("config: mlp_activation must be tanh or sigmoid");
    if (model_kind != "atbrg" && model_kind != "baseline")
      throw ContractError("config: model_kind must be atbrg or baseline");
    if (!use_ram && aggregator != Aggregator::RelationAware)
      throw ContractError("config: use_ram=false only applies to the relation-aware aggregator");
  }

  nlohmann::json to_json() const {
    return {{"d", embed_dim},
            {"L", layers},
            {"mlp_dims", mlp_dims},
            {"b_max", b_max},
            {"aggregator", aggregator_name(aggregator)},
            {"use_ram", use_ram},
            {"use_ral", use_ral},
            {"lr", lr},
            {"eps", eps},
            {"seed", seed},
            {"depth", depth},
            {"fanout", fanout},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"desk_scale", desk_scale},
            {"dedupe_target", dedupe_target},
            {"agg_cap", agg_cap},
            {"mlp_activation", mlp_activation},
            {"model_kind", model_kind},
            {"repeats", repeats}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    get("d", c.embed_dim);
    get("L", c.layers);
    get("b_max", c.b_max);
    get("use_ram", c.use_ram);
    get("use_ral", c.use_ral);
    get("lr", c.lr);
    get("eps", c.eps);
    get("seed", c.seed);
    get("depth", c.depth);
    get("fanout", c.fanout);
    get("batch_size", c.batch_size);
    get("epochs", c.epochs);
    get("desk_scale", c.desk_scale);
    get("dedupe_target", c.dedupe_target);
    get("agg_cap", c.agg_cap);
    get("mlp_activation", c.mlp_activation);
    get("model_kind", c.model_kind);
    get("repeats", c.repeats);
    if (j.contains("aggregator"))
      c.aggregator = aggregator_from_name(j.at("aggregator").get<std::string>());
    if (j.contains("mlp_dims"))
      c.mlp_dims = j.at("mlp_dims").get<std::vector<int>>();
    else if (c.desk_scale)
      c.mlp_dims = {64, 32, 16};
    c.validate();
    return c;
  }
};

}  // namespace atbrg
