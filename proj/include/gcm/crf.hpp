#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcm/tensor.hpp"

namespace gcm {

inline constexpr double kCrfMask = -1e4;

// Linear-chain CRF transition scores over u real tags plus virtual START (index
// u) and STOP (index u+1). transitions[i][j] scores moving from tag i to tag j.
// Edges into START and out of STOP carry kCrfMask.
struct CrfParams {
  Tensor transitions;  // (u+2) x (u+2)
  std::size_t classes = 0;

  static CrfParams init(std::size_t classes);

  std::size_t start() const { return classes; }
  std::size_t stop() const { return classes + 1; }
  double transition(std::size_t from, std::size_t to) const {
    return transitions[from * (classes + 2) + to];
  }
  // Re-applies the START/STOP masks (after an optimizer step).
  void enforce_masks();
};

// Unnormalized score of a tag path including START and STOP edges.
double path_score(const Tensor& emissions, std::span<const int> tags, const CrfParams& p);

// log sum over all paths of exp(path_score), by the forward algorithm.
double log_partition(const Tensor& emissions, const CrfParams& p);

// -(path_score(gold) - log_partition). Differentiable in both the emissions
// and the transition matrix.
Tensor crf_nll(const Tensor& emissions, std::span<const int> gold, const CrfParams& p);

// Highest-scoring path; ties resolve toward the lower tag index.
std::vector<int> viterbi(const Tensor& emissions, const CrfParams& p);

}  // namespace gcm
