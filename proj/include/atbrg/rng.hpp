#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "atbrg/errors.hpp"

namespace atbrg {

// Deterministic random source. All randomness in the library flows through
// this wrapper so that a seed fully determines every downstream artifact.
// Distribution mapping is hand-rolled: std::uniform_*_distribution output is
// not pinned by the standard and may differ across library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform double in [lo, hi). Uses the top 53 bits of the generator word.
  double uniform(double lo = 0.0, double hi = 1.0) {
    double unit = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }

  // Uniform integer in [0, n). Multiply-shift bounding; the bias for the n
  // used here (vocabulary sizes) is far below anything observable.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw ContractError("uniform_int: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), in draw order (partial Fisher-Yates over
  // an index pool).
  std::vector<std::uint64_t> sample_distinct(std::uint64_t n, std::size_t k) {
    if (k > n) throw ContractError("sample_distinct: k exceeds population");
    std::vector<std::uint64_t> pool(n);
    for (std::uint64_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::uint64_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      std::uint64_t j = i + uniform_int(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace atbrg
