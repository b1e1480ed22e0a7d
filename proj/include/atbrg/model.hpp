#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "atbrg/config.hpp"
#include "atbrg/dataset.hpp"
#include "atbrg/errors.hpp"
#include "atbrg/kg.hpp"
#include "atbrg/params.hpp"
#include "atbrg/rng.hpp"
#include "atbrg/subgraph.hpp"
#include "atbrg/tape.hpp"

namespace atbrg {

// Optional probes filled during a forward pass so tests can inspect attention
// weights and intermediate representations by node id.
struct ForwardTrace {
  std::map<std::pair<int, NodeRef>, NodeId> alpha;  // (layer, node) -> weight vector
  NodeId beta = -1;                                 // behavior weights
  NodeId target_repr = -1;
  std::vector<NodeId> behavior_reprs;
};

namespace detail {

inline NodeId embed_profile_impl(BoundParams& bp, const SideSchema& side,
                                 const std::string& prefix, const Profile& profile,
                                 const std::vector<double>& mu,
                                 const std::vector<double>& sd) {
  Tape& t = bp.tape();
  if (profile.sparse.size() != side.sparse.size())
    throw ShapeError("embed_profile: profile has " + std::to_string(profile.sparse.size()) +
                     " sparse ids, schema expects " + std::to_string(side.sparse.size()));
  if (profile.dense.size() != side.dense.size())
    throw ShapeError("embed_profile: profile has " + std::to_string(profile.dense.size()) +
                     " dense values, schema expects " + std::to_string(side.dense.size()));
  std::vector<NodeId> parts;
  for (std::size_t k = 0; k < side.sparse.size(); ++k) {
    NodeId table = bp.get(prefix + side.sparse[k].name);
    parts.push_back(t.gather(table, profile.sparse[k]));
  }
  if (!side.dense.empty()) {
    if (mu.size() != side.dense.size() || sd.size() != side.dense.size())
      throw ShapeError("embed_profile: dense stats do not cover the schema");
    std::vector<double> z(side.dense.size());
    for (std::size_t c = 0; c < z.size(); ++c)
      z[c] = (profile.dense[c] - mu[c]) / sd[c];
    parts.push_back(t.constant(DenseArray::vec(std::move(z))));
  }
  if (parts.empty()) throw ContractError("embed_profile: side has no features");
  return t.concat(parts);
}

inline NodeId mlp_forward(BoundParams& bp, NodeId input, const std::vector<int>& dims,
                          const std::string& activation, const std::string& prefix) {
  Tape& t = bp.tape();
  NodeId h = input;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    std::string base = prefix + std::to_string(i);
    h = t.affine(bp.get(base + ".W"), h, bp.get(base + ".b"));
    h = activation == "tanh" ? t.tanh_op(h) : t.sigmoid(h);
  }
  h = t.affine(bp.get(prefix + "out.W"), h, bp.get(prefix + "out.b"));
  return t.sigmoid(h);
}

inline void create_mlp_params(ParameterStore& store, Rng& rng, std::size_t input_dim,
                              const std::vector<int>& dims, const std::string& prefix) {
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    auto out = static_cast<std::size_t>(dims[i]);
    std::string base = prefix + std::to_string(i);
    store.create(base + ".W", {out, in}, &rng);
    store.create(base + ".b", {out}, nullptr);
    in = out;
  }
  store.create(prefix + "out.W", {1, in}, &rng);
  store.create(prefix + "out.b", {1}, nullptr);
}

}  // namespace detail

// The knowledge-aware recommender: entity/profile embeddings, stacked
// relation-aware extractor layers over the relational subgraph, a behavior
// activation layer, and a feature-interaction MLP ending in a sigmoid.
//
// State widths: layer l holds d * 2^l values per node; each layer appends the
// aggregated neighbor message to the node's own state, doubling the width.
class AtbrgModel {
 public:
  AtbrgModel(ModelConfig cfg, FeatureSchema schema, DenseStats stats,
             const KnowledgeGraph& kg)
      : cfg_(std::move(cfg)), schema_(std::move(schema)), stats_(std::move(stats)), kg_(&kg) {
    cfg_.validate();
    if (schema_.user.sparse.empty() && schema_.user.dense.empty())
      throw ContractError("model: user side has no features");
    if (schema_.item.sparse.empty() && schema_.item.dense.empty())
      throw ContractError("model: item side has no features");
  }

  // Creates all tables and weights in a fixed order from cfg.seed. The order
  // is part of the reproducibility contract.
  void init() {
    Rng rng(cfg_.seed);
    std::size_t d = static_cast<std::size_t>(cfg_.embed_dim);
    store_ = ParameterStore{};
    store_.create("emb.entity", {kg_->n_entities(), d}, &rng);
    store_.create("emb.relation", {std::max<std::size_t>(kg_->n_relations(), 1), d}, &rng);
    for (const auto& f : schema_.user.sparse)
      store_.create("emb.user." + f.name, {static_cast<std::size_t>(f.vocab), d}, &rng);
    for (const auto& f : schema_.item.sparse)
      store_.create("emb.item." + f.name, {static_cast<std::size_t>(f.vocab), d}, &rng);

    for (int l = 0; l < cfg_.layers; ++l) {
      std::size_t dl = dim_at(l);
      std::string base = "ext.l" + std::to_string(l) + ".";
      switch (cfg_.aggregator) {
        case Aggregator::RelationAware:
          store_.create(base + "f.W", {d, 2 * dl}, &rng);
          store_.create(base + "f.b", {d}, nullptr);
          if (cfg_.use_ram)
            store_.create(base + "Walpha", {d, d}, &rng);
          else
            store_.create(base + "proj", {d}, &rng);
          break;
        case Aggregator::SelfAttention:
          store_.create(base + "f.W", {d, 2 * dl}, &rng);
          store_.create(base + "f.b", {d}, nullptr);
          store_.create(base + "sa", {d}, &rng);
          break;
        case Aggregator::Concat:
          store_.create(base + "cat.W", {dl, static_cast<std::size_t>(cfg_.agg_cap) * dl}, &rng);
          store_.create(base + "cat.b", {dl}, nullptr);
          break;
        case Aggregator::Nonlinear:
          store_.create(base + "nl.W", {dl, dl}, &rng);
          store_.create(base + "nl.b", {dl}, nullptr);
          break;
        case Aggregator::Sum:
          break;
      }
    }

    if (cfg_.use_ral) {
      std::size_t dL = dim_at(cfg_.layers);
      store_.create("act.Wbeta", {dL, dL}, &rng);
    }
    detail::create_mlp_params(store_, rng, mlp_input_dim(), cfg_.mlp_dims, "mlp.");
  }

  const ModelConfig& config() const { return cfg_; }
  const FeatureSchema& schema() const { return schema_; }
  const DenseStats& stats() const { return stats_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  void set_params(ParameterStore store) { store_ = std::move(store); }

  std::size_t dim_at(int layer) const {
    return static_cast<std::size_t>(cfg_.embed_dim) << layer;
  }

  std::size_t profile_dim(const SideSchema& side) const {
    return side.sparse.size() * static_cast<std::size_t>(cfg_.embed_dim) + side.dense.size();
  }

  std::size_t mlp_input_dim() const {
    return profile_dim(schema_.user) + profile_dim(schema_.item) + 2 * dim_at(cfg_.layers);
  }

  NodeId embed_user(BoundParams& bp, const Profile& p) const {
    return detail::embed_profile_impl(bp, schema_.user, "emb.user.", p, stats_.user_mu,
                                      stats_.user_sd);
  }
  NodeId embed_item(BoundParams& bp, const Profile& p) const {
    return detail::embed_profile_impl(bp, schema_.item, "emb.item.", p, stats_.item_mu,
                                      stats_.item_sd);
  }

  // Behavior list actually used for a sample: optionally stripped of the
  // target, truncated to the B_max most recent entries.
  std::vector<ItemId> effective_behaviors(const Sample& s) const {
    std::vector<ItemId> out;
    for (ItemId b : s.behaviors) {
      if (cfg_.dedupe_target && b == s.target) continue;
      out.push_back(b);
      if (static_cast<int>(out.size()) == cfg_.b_max) break;
    }
    return out;
  }

  // Initial node states: every node starts from its entity embedding, anchor
  // items from their aligned entity's row.
  std::map<NodeRef, NodeId> layer0_states(BoundParams& bp, const LayeredView& view) const {
    Tape& t = bp.tape();
    NodeId table = bp.get("emb.entity");
    std::map<NodeRef, NodeId> states;
    for (const NodeRef& n : view.nodes) {
      EntityId e = n.kind == NodeRef::Kind::Item ? kg_->align(n.id) : n.id;
      states.emplace(n, t.gather(table, e));
    }
    return states;
  }

  // One extractor layer: per node, score each (relation, neighbor) edge,
  // normalize scores over the neighborhood, aggregate the neighbors' states,
  // and append the aggregate to the node's own state. Nodes with no edges
  // append a zero message so widths stay uniform.
  std::map<NodeRef, NodeId> extractor_layer(BoundParams& bp, const LayeredView& view,
                                            const std::map<NodeRef, NodeId>& states,
                                            int layer, ForwardTrace* trace = nullptr) const {
    Tape& t = bp.tape();
    std::size_t dl = dim_at(layer);
    std::string base = "ext.l" + std::to_string(layer) + ".";
    std::size_t d = static_cast<std::size_t>(cfg_.embed_dim);

    std::map<NodeRef, NodeId> next;
    for (const NodeRef& h : view.nodes) {
      const auto& nbrs = view.adjacency.at(h);
      NodeId self = states.at(h);
      if (t.value(self).size() != dl)
        throw ShapeError("extractor_layer: state width does not match layer");
      NodeId msg;
      if (nbrs.empty()) {
        msg = t.zeros(dl);
      } else {
        std::vector<NodeId> nbr_states;
        nbr_states.reserve(nbrs.size());
        for (const auto& [rel, tail] : nbrs) nbr_states.push_back(states.at(tail));

        switch (cfg_.aggregator) {
          case Aggregator::RelationAware:
          case Aggregator::SelfAttention: {
            NodeId fw = bp.get(base + "f.W");
            NodeId fb = bp.get(base + "f.b");
            NodeId zero_d = t.zeros(d);
            std::vector<NodeId> scores;
            for (std::size_t i = 0; i < nbrs.size(); ++i) {
              NodeId f = t.tanh_op(t.affine(fw, t.concat({self, nbr_states[i]}), fb));
              NodeId score;
              if (cfg_.aggregator == Aggregator::SelfAttention) {
                score = t.dot(bp.get(base + "sa"), f);
              } else if (cfg_.use_ram) {
                NodeId xr = t.gather(bp.get("emb.relation"), nbrs[i].first);
                score = t.dot(xr, t.affine(bp.get(base + "Walpha"), f, zero_d));
              } else {
                score = t.dot(bp.get(base + "proj"), f);
              }
              scores.push_back(score);
            }
            NodeId ones = t.constant(DenseArray::vec(std::vector<double>(nbrs.size(), 1.0)));
            NodeId alpha = t.masked_softmax(t.concat(scores), ones);
            if (trace) trace->alpha[{layer, h}] = alpha;
            msg = t.weighted_sum(alpha, nbr_states);
            break;
          }
          case Aggregator::Sum: {
            NodeId ones = t.constant(DenseArray::vec(std::vector<double>(nbrs.size(), 1.0)));
            msg = t.weighted_sum(ones, nbr_states);
            break;
          }
          case Aggregator::Nonlinear: {
            NodeId ones = t.constant(DenseArray::vec(std::vector<double>(nbrs.size(), 1.0)));
            NodeId s = t.weighted_sum(ones, nbr_states);
            msg = t.tanh_op(t.affine(bp.get(base + "nl.W"), s, bp.get(base + "nl.b")));
            break;
          }
          case Aggregator::Concat: {
            std::vector<NodeId> slots;
            auto cap = static_cast<std::size_t>(cfg_.agg_cap);
            for (std::size_t i = 0; i < cap; ++i)
              slots.push_back(i < nbr_states.size() ? nbr_states[i] : t.zeros(dl));
            msg = t.affine(bp.get(base + "cat.W"), t.concat(slots), bp.get(base + "cat.b"));
            break;
          }
        }
      }
      next.emplace(h, t.concat({self, msg}));
    }
    return next;
  }

  // Runs L extractor layers over the subgraph and returns the target's final
  // representation plus one per behavior, in behavior order.
  std::pair<NodeId, std::vector<NodeId>> relational_repr(BoundParams& bp,
                                                         const RelationalSubgraph& sub,
                                                         ForwardTrace* trace = nullptr) const {
    LayeredView view = layered_view(sub);
    auto states = layer0_states(bp, view);
    for (int l = 0; l < cfg_.layers; ++l)
      states = extractor_layer(bp, view, states, l, trace);

    NodeId target = states.at(NodeRef::item(sub.target));
    std::vector<NodeId> behaviors;
    behaviors.reserve(sub.behaviors.size());
    for (ItemId b : sub.behaviors) behaviors.push_back(states.at(NodeRef::item(b)));
    if (trace) {
      trace->target_repr = target;
      trace->behavior_reprs = behaviors;
    }
    return {target, behaviors};
  }

  // Attention over behaviors: each behavior is scored by a bilinear form
  // against the target representation; the user's relational vector is the
  // score-weighted sum. With use_ral off it degrades to an unweighted mean
  // over the unmasked behaviors.
  NodeId activation_layer(BoundParams& bp, const std::vector<NodeId>& behavior_reprs,
                          NodeId target_repr, const std::vector<double>& mask,
                          ForwardTrace* trace = nullptr) const {
    Tape& t = bp.tape();
    if (behavior_reprs.empty())
      throw ContractError("activation_layer: zero behaviors (caller substitutes zeros)");
    if (mask.size() != behavior_reprs.size())
      throw ShapeError("activation_layer: mask length does not match behaviors");

    if (!cfg_.use_ral) {
      std::vector<NodeId> unmasked;
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] == 1.0) unmasked.push_back(behavior_reprs[i]);
      if (unmasked.empty())
        throw ContractError("activation_layer: all behaviors masked");
      return t.mean(unmasked);
    }

    std::size_t dL = dim_at(cfg_.layers);
    NodeId projected = t.affine(bp.get("act.Wbeta"), target_repr, t.zeros(dL));
    std::vector<NodeId> scores;
    scores.reserve(behavior_reprs.size());
    for (NodeId b : behavior_reprs) scores.push_back(t.dot(b, projected));
    NodeId beta = t.masked_softmax(t.concat(scores), t.constant(DenseArray::vec(mask)));
    if (trace) trace->beta = beta;
    return t.weighted_sum(beta, behavior_reprs);
  }

  // sigma(MLP(x_u + x_i + relational user + relational item)), a scalar in (0, 1).
  NodeId predict(BoundParams& bp, NodeId user_vec, NodeId item_vec, NodeId rel_user,
                 NodeId rel_item) const {
    Tape& t = bp.tape();
    NodeId input = t.concat({user_vec, item_vec, rel_user, rel_item});
    if (t.value(input).size() != mlp_input_dim())
      throw ShapeError("predict: interaction input width mismatch");
    return detail::mlp_forward(bp, input, cfg_.mlp_dims, cfg_.mlp_activation, "mlp.");
  }

  // Full forward pass for one sample. The subgraph must have been built for
  // this sample's target and effective behavior list.
  NodeId sample_forward(BoundParams& bp, const Dataset& ds, const Sample& sample,
                        const RelationalSubgraph& sub, ForwardTrace* trace = nullptr) const {
    Tape& t = bp.tape();
    NodeId xu = embed_user(bp, ds.user_profiles[static_cast<std::size_t>(sample.user)]);
    NodeId xi = embed_item(bp, ds.item_profiles[static_cast<std::size_t>(sample.target)]);

    auto [rel_item, behavior_reprs] = relational_repr(bp, sub, trace);
    NodeId rel_user;
    if (behavior_reprs.empty()) {
      rel_user = t.zeros(dim_at(cfg_.layers));
    } else {
      std::vector<double> mask(behavior_reprs.size(), 1.0);
      rel_user = activation_layer(bp, behavior_reprs, rel_item, mask, trace);
    }
    return predict(bp, xu, xi, rel_user, rel_item);
  }

  static NodeId batch_loss(Tape& t, const std::vector<NodeId>& preds,
                           const std::vector<double>& labels) {
    return t.bce(preds, labels);
  }

 private:
  ModelConfig cfg_;
  FeatureSchema schema_;
  DenseStats stats_;
  const KnowledgeGraph* kg_;
  ParameterStore store_;
};

// Reference model for lift measurements: same profile embeddings and MLP head
// but the KG is invisible; behaviors enter as a mean-pooled free embedding.
class BaselineModel {
 public:
  BaselineModel(ModelConfig cfg, FeatureSchema schema, DenseStats stats,
                const KnowledgeGraph& kg)
      : cfg_(std::move(cfg)), schema_(std::move(schema)), stats_(std::move(stats)), kg_(&kg) {
    cfg_.validate();
  }

  void init() {
    Rng rng(cfg_.seed);
    std::size_t d = static_cast<std::size_t>(cfg_.embed_dim);
    store_ = ParameterStore{};
    for (const auto& f : schema_.user.sparse)
      store_.create("emb.user." + f.name, {static_cast<std::size_t>(f.vocab), d}, &rng);
    for (const auto& f : schema_.item.sparse)
      store_.create("emb.item." + f.name, {static_cast<std::size_t>(f.vocab), d}, &rng);
    store_.create("base.behavior", {std::max<std::size_t>(kg_->n_items(), 1), d}, &rng);
    detail::create_mlp_params(store_, rng, mlp_input_dim(), cfg_.mlp_dims, "mlp.");
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  void set_params(ParameterStore store) { store_ = std::move(store); }

  std::size_t profile_dim(const SideSchema& side) const {
    return side.sparse.size() * static_cast<std::size_t>(cfg_.embed_dim) + side.dense.size();
  }
  std::size_t mlp_input_dim() const {
    return profile_dim(schema_.user) + profile_dim(schema_.item) +
           static_cast<std::size_t>(cfg_.embed_dim);
  }

  std::vector<ItemId> effective_behaviors(const Sample& s) const {
    std::vector<ItemId> out;
    for (ItemId b : s.behaviors) {
      if (cfg_.dedupe_target && b == s.target) continue;
      out.push_back(b);
      if (static_cast<int>(out.size()) == cfg_.b_max) break;
    }
    return out;
  }

  NodeId sample_forward(BoundParams& bp, const Dataset& ds, const Sample& sample) const {
    Tape& t = bp.tape();
    NodeId xu = detail::embed_profile_impl(bp, schema_.user, "emb.user.",
                                           ds.user_profiles[static_cast<std::size_t>(sample.user)],
                                           stats_.user_mu, stats_.user_sd);
    NodeId xi = detail::embed_profile_impl(bp, schema_.item, "emb.item.",
                                           ds.item_profiles[static_cast<std::size_t>(sample.target)],
                                           stats_.item_mu, stats_.item_sd);
    auto behaviors = effective_behaviors(sample);
    NodeId pooled;
    if (behaviors.empty()) {
      pooled = t.zeros(static_cast<std::size_t>(cfg_.embed_dim));
    } else {
      std::vector<NodeId> rows;
      rows.reserve(behaviors.size());
      for (ItemId b : behaviors) rows.push_back(t.gather(bp.get("base.behavior"), b));
      pooled = t.mean(rows);
    }
    NodeId input = t.concat({xu, xi, pooled});
    return detail::mlp_forward(bp, input, cfg_.mlp_dims, cfg_.mlp_activation, "mlp.");
  }

 private:
  ModelConfig cfg_;
  FeatureSchema schema_;
  DenseStats stats_;
  const KnowledgeGraph* kg_;
  ParameterStore store_;
};

}  // namespace atbrg
