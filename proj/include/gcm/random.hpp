#pragma once

#include <cstdint>
#include <random>

#include "gcm/tensor.hpp"

namespace gcm {

using Rng = std::mt19937_64;

// Trainable tensor with entries drawn from U(-bound, bound).
inline Tensor uniform_param(Shape shape, double bound, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.mutable_data()) v = dist(rng);
  return t;
}

// Derives an independent stream from a base seed and a tuple of indices.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace gcm
