#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "atbrg/array.hpp"
#include "atbrg/errors.hpp"
#include "atbrg/rng.hpp"
#include "atbrg/tape.hpp"

namespace atbrg {

// Named trainable tensors plus their squared-gradient accumulators. Creation
// order is part of the model contract: given one seed, a fixed creation
// sequence reproduces identical initial values.
class ParameterStore {
 public:
  // Uniform init in [lo, hi); pass rng = nullptr for zeros (biases).
  DenseArray& create(const std::string& name, std::vector<std::size_t> shape,
                     Rng* rng, double lo = -0.05, double hi = 0.05) {
    if (entries_.count(name))
      throw ContractError("parameter '" + name + "' already exists");
    DenseArray value = DenseArray::zeros(shape);
    if (rng)
      for (double& v : value.values) v = rng->uniform(lo, hi);
    auto [it, ok] = entries_.emplace(name, Entry{std::move(value), DenseArray::zeros(shape)});
    (void)ok;
    return it->second.value;
  }

  bool has(const std::string& name) const { return entries_.count(name) > 0; }

  DenseArray& value(const std::string& name) { return entry(name).value; }
  const DenseArray& value(const std::string& name) const { return entry(name).value; }
  const DenseArray& accum(const std::string& name) const { return entry(name).accum; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
  }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.size();
    return n;
  }

  // One Adagrad update per supplied gradient: accum += g^2, then
  // theta -= lr * g / (sqrt(accum) + eps). Parameters without a gradient
  // entry are untouched, accumulators included.
  void adagrad_step(const std::map<std::string, DenseArray>& grads, double lr,
                    double eps = 1e-8) {
    for (const auto& [name, g] : grads) {
      Entry& e = entry(name);
      if (!e.value.same_shape(g))
        throw ShapeError("adagrad_step: gradient shape " + g.shape_str() +
                         " does not match parameter '" + name + "' " +
                         e.value.shape_str());
      for (std::size_t i = 0; i < g.size(); ++i) {
        double gi = g.values[i];
        e.accum.values[i] += gi * gi;
        e.value.values[i] -= lr * gi / (std::sqrt(e.accum.values[i]) + eps);
      }
      if (!e.value.finite())
        throw NumericError("adagrad_step: parameter '" + name + "' became non-finite");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, e] : entries_) {
      j[name] = {{"shape", e.value.shape},
                 {"values", e.value.values},
                 {"accum", e.accum.values}};
    }
    return j;
  }

  static ParameterStore from_json(const nlohmann::json& j) {
    ParameterStore store;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const nlohmann::json& p = it.value();
      std::vector<std::size_t> shape = p.at("shape").get<std::vector<std::size_t>>();
      std::vector<double> values = p.at("values").get<std::vector<double>>();
      std::vector<double> accum = p.at("accum").get<std::vector<double>>();
      if (values.size() != DenseArray::count(shape) || accum.size() != values.size())
        throw ShapeError("checkpoint parameter '" + it.key() + "' has inconsistent sizes");
      store.entries_.emplace(it.key(), Entry{DenseArray(shape, std::move(values)),
                                             DenseArray(shape, std::move(accum))});
    }
    return store;
  }

 private:
  struct Entry {
    DenseArray value;
    DenseArray accum;
  };

  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw LookupError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw LookupError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

// Binds parameters to tape leaves, one leaf per name per tape, so a graph
// that touches the same table many times accumulates into one gradient.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParameterStore& store) : tape_(tape), store_(store) {}

  NodeId get(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    NodeId id = tape_.param(name, store_.value(name));
    cache_.emplace(name, id);
    return id;
  }

  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  const ParameterStore& store_;
  std::map<std::string, NodeId> cache_;
};

}  // namespace atbrg
