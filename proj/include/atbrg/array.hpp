#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "atbrg/errors.hpp"

namespace atbrg {

// Row-major dense array of doubles. Rank 1 or 2 is all the model needs.
struct DenseArray {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  DenseArray() = default;
  DenseArray(std::vector<std::size_t> s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (count(shape) != values.size())
      throw ShapeError("DenseArray: value count does not match shape");
  }

  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

  static DenseArray zeros(std::vector<std::size_t> shape) {
    std::size_t n = count(shape);
    return DenseArray(std::move(shape), std::vector<double>(n, 0.0));
  }

  static DenseArray vec(std::vector<double> v) {
    std::size_t n = v.size();
    return DenseArray({n}, std::move(v));
  }

  static DenseArray scalar(double v) { return DenseArray({1}, {v}); }

  std::size_t size() const { return values.size(); }

  std::size_t rows() const {
    if (shape.size() != 2) throw ShapeError("rows: array is not rank 2");
    return shape[0];
  }
  std::size_t cols() const {
    if (shape.size() != 2) throw ShapeError("cols: array is not rank 2");
    return shape[1];
  }

  double& at(std::size_t i) { return values[i]; }
  double at(std::size_t i) const { return values[i]; }

  bool finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const DenseArray& other) const { return shape == other.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

}  // namespace atbrg
