#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "atbrg/array.hpp"
#include "atbrg/errors.hpp"

namespace atbrg {

using NodeId = std::int32_t;

enum class OpKind : std::uint8_t {
  Constant,
  Param,
  Gather,
  Concat,
  Affine,
  Tanh,
  Sigmoid,
  Exp,
  Dot,
  MaskedSoftmax,
  WeightedSum,
  Mean,
  Bce,
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Constant: return "constant";
    case OpKind::Param: return "param";
    case OpKind::Gather: return "gather";
    case OpKind::Concat: return "concat";
    case OpKind::Affine: return "affine";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Exp: return "exp";
    case OpKind::Dot: return "dot";
    case OpKind::MaskedSoftmax: return "masked_softmax";
    case OpKind::WeightedSum: return "weighted_sum";
    case OpKind::Mean: return "mean";
    case OpKind::Bce: return "bce";
  }
  return "?";
}

inline constexpr double kBceClampLo = 1e-7;
inline constexpr double kBceClampHi = 1.0 - 1e-7;

// Eager reverse-mode tape. Each builder call evaluates the op immediately and
// records it; backward() runs the recorded ops in reverse, accumulating
// vector-Jacobian products. Every op output is checked finite on the spot so
// a numeric blowup surfaces at the op that caused it, not at the loss.
class Tape {
 public:
  NodeId constant(DenseArray v) { return push({OpKind::Constant, {}, {}, {}, "", std::move(v)}); }

  NodeId scalar(double v) { return constant(DenseArray::scalar(v)); }

  NodeId zeros(std::size_t n) { return constant(DenseArray::zeros({n})); }

  // Leaf carrying a snapshot of a named parameter. backward() reports
  // gradients keyed by these names.
  NodeId param(const std::string& name, const DenseArray& value) {
    if (name.empty()) throw ContractError("param: name must be nonempty");
    return push({OpKind::Param, {}, {}, {}, name, value});
  }

  // Row lookup in a rank-2 table.
  NodeId gather(NodeId table, std::int64_t row) {
    const DenseArray& t = val(table, "gather");
    if (t.shape.size() != 2) throw ShapeError("gather: table must be rank 2");
    if (row < 0 || static_cast<std::size_t>(row) >= t.rows())
      throw LookupError("gather: row " + std::to_string(row) +
                        " out of range for table with " +
                        std::to_string(t.rows()) + " rows");
    std::size_t c = t.cols();
    std::vector<double> out(t.values.begin() + static_cast<std::ptrdiff_t>(row) * c,
                            t.values.begin() + (static_cast<std::ptrdiff_t>(row) + 1) * c);
    return push({OpKind::Gather, {table}, {row}, {}, "", DenseArray::vec(std::move(out))});
  }

  NodeId concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat: needs at least one input");
    std::vector<double> out;
    for (NodeId p : parts) {
      const DenseArray& v = val(p, "concat");
      if (v.shape.size() != 1) throw ShapeError("concat: inputs must be rank 1");
      out.insert(out.end(), v.values.begin(), v.values.end());
    }
    return push({OpKind::Concat, parts, {}, {}, "", DenseArray::vec(std::move(out))});
  }

  // W x + b with W rank 2, x and b rank 1.
  NodeId affine(NodeId w, NodeId x, NodeId b) {
    const DenseArray& wv = val(w, "affine");
    const DenseArray& xv = val(x, "affine");
    const DenseArray& bv = val(b, "affine");
    if (wv.shape.size() != 2 || xv.shape.size() != 1 || bv.shape.size() != 1)
      throw ShapeError("affine: expected W rank 2, x and b rank 1");
    if (wv.cols() != xv.size() || wv.rows() != bv.size())
      throw ShapeError("affine: shape mismatch W" + wv.shape_str() + " x" +
                       xv.shape_str() + " b" + bv.shape_str());
    std::size_t m = wv.rows(), n = wv.cols();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = bv.values[i];
      const double* row = wv.values.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * xv.values[j];
      out[i] = acc;
    }
    return push({OpKind::Affine, {w, x, b}, {}, {}, "", DenseArray::vec(std::move(out))});
  }

  NodeId tanh_op(NodeId x) { return unary(OpKind::Tanh, x, [](double v) { return std::tanh(v); }); }

  NodeId sigmoid(NodeId x) {
    return unary(OpKind::Sigmoid, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }

  NodeId exp_op(NodeId x) { return unary(OpKind::Exp, x, [](double v) { return std::exp(v); }); }

  NodeId dot(NodeId a, NodeId b) {
    const DenseArray& av = val(a, "dot");
    const DenseArray& bv = val(b, "dot");
    if (av.shape.size() != 1 || bv.shape.size() != 1 || av.size() != bv.size())
      throw ShapeError("dot: expected equal-length vectors, got " +
                       av.shape_str() + " and " + bv.shape_str());
    double acc = 0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av.values[i] * bv.values[i];
    return push({OpKind::Dot, {a, b}, {}, {}, "", DenseArray::scalar(acc)});
  }

  // Softmax over the positions where mask is 1; masked positions get weight
  // exactly 0 and receive no gradient. The mask is data, not a parameter.
  NodeId masked_softmax(NodeId logits, NodeId mask) {
    const DenseArray& lv = val(logits, "masked_softmax");
    const DenseArray& mv = val(mask, "masked_softmax");
    if (lv.shape.size() != 1 || !lv.same_shape(mv))
      throw ShapeError("masked_softmax: logits and mask must be equal-length vectors");
    double mx = -std::numeric_limits<double>::infinity();
    std::size_t active = 0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
      double m = mv.values[i];
      if (m != 0.0 && m != 1.0)
        throw ContractError("masked_softmax: mask entries must be 0 or 1");
      if (m == 1.0) {
        ++active;
        mx = std::max(mx, lv.values[i]);
      }
    }
    if (active == 0) throw ContractError("masked_softmax: mask is entirely zero");
    std::vector<double> out(lv.size(), 0.0);
    double denom = 0;
    for (std::size_t i = 0; i < lv.size(); ++i)
      if (mv.values[i] == 1.0) {
        out[i] = std::exp(lv.values[i] - mx);
        denom += out[i];
      }
    for (double& v : out) v /= denom;
    return push({OpKind::MaskedSoftmax, {logits, mask}, {}, {}, "", DenseArray::vec(std::move(out))});
  }

  // sum_i weights[i] * values[i], weights a length-n vector, values n
  // equal-length vectors.
  NodeId weighted_sum(NodeId weights, const std::vector<NodeId>& values) {
    if (values.empty()) throw ContractError("weighted_sum: needs at least one value");
    const DenseArray& wv = val(weights, "weighted_sum");
    if (wv.shape.size() != 1 || wv.size() != values.size())
      throw ShapeError("weighted_sum: weight count must match value count");
    std::size_t dim = val(values[0], "weighted_sum").size();
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const DenseArray& v = val(values[i], "weighted_sum");
      if (v.shape.size() != 1 || v.size() != dim)
        throw ShapeError("weighted_sum: values must be equal-length vectors");
      for (std::size_t j = 0; j < dim; ++j) out[j] += wv.values[i] * v.values[j];
    }
    std::vector<NodeId> in{weights};
    in.insert(in.end(), values.begin(), values.end());
    return push({OpKind::WeightedSum, std::move(in), {}, {}, "", DenseArray::vec(std::move(out))});
  }

  NodeId mean(const std::vector<NodeId>& values) {
    if (values.empty()) throw ContractError("mean: needs at least one value");
    std::size_t dim = val(values[0], "mean").size();
    std::vector<double> out(dim, 0.0);
    for (NodeId id : values) {
      const DenseArray& v = val(id, "mean");
      if (v.shape.size() != 1 || v.size() != dim)
        throw ShapeError("mean: values must be equal-length vectors");
      for (std::size_t j = 0; j < dim; ++j) out[j] += v.values[j];
    }
    for (double& v : out) v /= static_cast<double>(values.size());
    return push({OpKind::Mean, values, {}, {}, "", DenseArray::vec(std::move(out))});
  }

  // Mean binary cross-entropy over scalar predictions. Predictions are
  // clamped to [1e-7, 1 - 1e-7] inside the op; outside the clamp the
  // derivative is exactly zero.
  NodeId bce(const std::vector<NodeId>& preds, const std::vector<double>& labels) {
    if (preds.empty()) throw ContractError("bce: empty batch");
    if (preds.size() != labels.size())
      throw ShapeError("bce: prediction and label counts differ");
    double acc = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const DenseArray& p = val(preds[i], "bce");
      if (p.size() != 1) throw ShapeError("bce: predictions must be scalars");
      double y = labels[i];
      if (y != 0.0 && y != 1.0) throw ContractError("bce: labels must be 0 or 1");
      double q = std::clamp(p.values[0], kBceClampLo, kBceClampHi);
      acc -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
    }
    acc /= static_cast<double>(preds.size());
    Node node{OpKind::Bce, preds, {}, labels, "", DenseArray::scalar(acc)};
    return push(std::move(node));
  }

  const DenseArray& value(NodeId id) const { return val(id, "value"); }

  std::size_t size() const { return nodes_.size(); }

  // Gradient vector of a node after backward(); test hook.
  const std::vector<double>& grad(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw LookupError("grad: node id out of range");
    return nodes_[static_cast<std::size_t>(id)].grad;
  }

  // Reverse sweep from a scalar loss. Returns gradients for every Param leaf,
  // keyed by name; a name bound more than once accumulates.
  std::map<std::string, DenseArray> backward(NodeId loss) {
    const DenseArray& lv = val(loss, "backward");
    if (lv.size() != 1) throw ContractError("backward: loss must be a scalar");
    for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
    nodes_[static_cast<std::size_t>(loss)].grad[0] = 1.0;

    for (NodeId id = loss; id >= 0; --id) propagate(id);

    std::map<std::string, DenseArray> grads;
    for (const auto& n : nodes_) {
      if (n.kind != OpKind::Param) continue;
      auto it = grads.find(n.name);
      if (it == grads.end()) {
        grads.emplace(n.name, DenseArray(n.val.shape, n.grad));
      } else {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          it->second.values[i] += n.grad[i];
      }
    }
    return grads;
  }

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> in;
    std::vector<std::int64_t> iattr;
    std::vector<double> fattr;
    std::string name;
    DenseArray val;
    std::vector<double> grad;
  };

  template <class F>
  NodeId unary(OpKind kind, NodeId x, F f) {
    const DenseArray& xv = val(x, op_name(kind));
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv.values[i]);
    return push({kind, {x}, {}, {}, "", DenseArray(xv.shape, std::move(out))});
  }

  NodeId push(Node n) {
    if (!n.val.finite())
      throw NumericError(std::string("non-finite value produced by ") + op_name(n.kind));
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  const DenseArray& val(NodeId id, const char* who) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw LookupError(std::string(who) + ": node id out of range");
    return nodes_[static_cast<std::size_t>(id)].val;
  }

  std::vector<double>& grad_of(NodeId id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  void propagate(NodeId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const std::vector<double>& g = n.grad;
    bool any = false;
    for (double v : g)
      if (v != 0.0) {
        any = true;
        break;
      }
    if (!any) return;

    switch (n.kind) {
      case OpKind::Constant:
      case OpKind::Param:
        break;
      case OpKind::Gather: {
        auto& tg = grad_of(n.in[0]);
        std::size_t c = n.val.size();
        std::size_t base = static_cast<std::size_t>(n.iattr[0]) * c;
        for (std::size_t i = 0; i < c; ++i) tg[base + i] += g[i];
        break;
      }
      case OpKind::Concat: {
        std::size_t off = 0;
        for (NodeId p : n.in) {
          auto& pg = grad_of(p);
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g[off + i];
          off += pg.size();
        }
        break;
      }
      case OpKind::Affine: {
        const DenseArray& wv = nodes_[static_cast<std::size_t>(n.in[0])].val;
        const DenseArray& xv = nodes_[static_cast<std::size_t>(n.in[1])].val;
        auto& wg = grad_of(n.in[0]);
        auto& xg = grad_of(n.in[1]);
        auto& bg = grad_of(n.in[2]);
        std::size_t m = wv.rows(), k = wv.cols();
        for (std::size_t i = 0; i < m; ++i) {
          double gi = g[i];
          if (gi == 0.0) continue;
          bg[i] += gi;
          const double* row = wv.values.data() + i * k;
          for (std::size_t j = 0; j < k; ++j) {
            wg[i * k + j] += gi * xv.values[j];
            xg[j] += gi * row[j];
          }
        }
        break;
      }
      case OpKind::Tanh: {
        auto& xg = grad_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          xg[i] += g[i] * (1.0 - n.val.values[i] * n.val.values[i]);
        break;
      }
      case OpKind::Sigmoid: {
        auto& xg = grad_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          xg[i] += g[i] * n.val.values[i] * (1.0 - n.val.values[i]);
        break;
      }
      case OpKind::Exp: {
        auto& xg = grad_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * n.val.values[i];
        break;
      }
      case OpKind::Dot: {
        const DenseArray& av = nodes_[static_cast<std::size_t>(n.in[0])].val;
        const DenseArray& bv = nodes_[static_cast<std::size_t>(n.in[1])].val;
        auto& ag = grad_of(n.in[0]);
        auto& bg = grad_of(n.in[1]);
        double gs = g[0];
        for (std::size_t i = 0; i < av.size(); ++i) {
          ag[i] += gs * bv.values[i];
          bg[i] += gs * av.values[i];
        }
        break;
      }
      case OpKind::MaskedSoftmax: {
        const DenseArray& mv = nodes_[static_cast<std::size_t>(n.in[1])].val;
        auto& lg = grad_of(n.in[0]);
        double inner = 0;
        for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * n.val.values[i];
        for (std::size_t i = 0; i < g.size(); ++i)
          if (mv.values[i] == 1.0)
            lg[i] += n.val.values[i] * (g[i] - inner);
        break;
      }
      case OpKind::WeightedSum: {
        const DenseArray& wv = nodes_[static_cast<std::size_t>(n.in[0])].val;
        auto& wg = grad_of(n.in[0]);
        for (std::size_t i = 1; i < n.in.size(); ++i) {
          const DenseArray& v = nodes_[static_cast<std::size_t>(n.in[i])].val;
          auto& vg = grad_of(n.in[i]);
          double acc = 0;
          for (std::size_t j = 0; j < g.size(); ++j) {
            acc += g[j] * v.values[j];
            vg[j] += g[j] * wv.values[i - 1];
          }
          wg[i - 1] += acc;
        }
        break;
      }
      case OpKind::Mean: {
        double inv = 1.0 / static_cast<double>(n.in.size());
        for (NodeId p : n.in) {
          auto& pg = grad_of(p);
          for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * inv;
        }
        break;
      }
      case OpKind::Bce: {
        double gs = g[0] / static_cast<double>(n.in.size());
        for (std::size_t i = 0; i < n.in.size(); ++i) {
          double p = nodes_[static_cast<std::size_t>(n.in[i])].val.values[0];
          if (p < kBceClampLo || p > kBceClampHi) continue;  // clamped flat
          double y = n.fattr[i];
          grad_of(n.in[i])[0] += gs * (-(y / p) + (1.0 - y) / (1.0 - p));
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace atbrg
