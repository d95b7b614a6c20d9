#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "readapt/autodiff/tensor.hpp"

namespace readapt {

using Rng = std::mt19937_64;

/// Uniform in ±sqrt(6/(fan_in+fan_out)).
inline Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t = Tensor::matrix(fan_in, fan_out);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline Tensor uniform(Rng& rng, Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

/// Inverted-dropout mask: each entry is 0 with probability p, else 1/(1-p).
inline Tensor dropout_mask(Rng& rng, Shape shape, double p) {
  Tensor m(std::move(shape), 1.0);
  if (p <= 0.0) return m;
  std::bernoulli_distribution drop(p);
  for (auto& v : m.data()) v = drop(rng) ? 0.0 : 1.0 / (1.0 - p);
  return m;
}

/// Stream seed derived from a base seed and an index (splitmix64 mix).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace readapt
