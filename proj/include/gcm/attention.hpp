#pragma once

#include <cstddef>
#include <vector>

#include "gcm/random.hpp"
#include "gcm/tensor.hpp"

namespace gcm {

// Multi-head token-level self-attention over encoder outputs, followed by a
// residual softmax classifier. Q/K/V maps have no bias and no positional
// encoding is added, so attend() is permutation-equivariant.
struct AttentionParams {
  std::vector<Tensor> W_q, W_k, W_v;  // per head, d_h x d_c
  Tensor W_c;                         // d_h x u, no bias
  std::size_t model_dim = 0;          // d_h
  std::size_t head_dim = 0;           // d_c
  std::size_t classes = 0;

  std::size_t heads() const { return W_q.size(); }

  // Throws ConfigError unless heads * head_dim == model_dim.
  static AttentionParams init(std::size_t model_dim, std::size_t heads, std::size_t head_dim,
                              std::size_t classes, Rng& rng);
};

struct AttentionOutput {
  Tensor C;                  // n x (m * d_c), heads concatenated in order
  std::vector<Tensor> alpha; // per head, n x n row-stochastic
};

AttentionOutput attend(const Tensor& H, const AttentionParams& p);

// Logits (H + C) W_c.
Tensor residual_logits(const Tensor& H, const Tensor& C, const AttentionParams& p);
// softmax((H + C) W_c), row-wise.
Tensor residual_classify(const Tensor& H, const Tensor& C, const AttentionParams& p);

}  // namespace gcm
