#include "gcm/attention.hpp"

#include <cmath>

#include "gcm/error.hpp"

namespace gcm {

AttentionParams AttentionParams::init(std::size_t model_dim, std::size_t heads,
                                      std::size_t head_dim, std::size_t classes, Rng& rng) {
  if (heads == 0 || head_dim == 0 || heads * head_dim != model_dim)
    throw ConfigError("attention: heads (" + std::to_string(heads) + ") x head_dim (" +
                      std::to_string(head_dim) + ") must equal encoder width (" +
                      std::to_string(model_dim) + ")");
  AttentionParams p;
  p.model_dim = model_dim;
  p.head_dim = head_dim;
  p.classes = classes;
  const double bound = 1.0 / std::sqrt(static_cast<double>(model_dim));
  for (std::size_t i = 0; i < heads; ++i) {
    p.W_q.push_back(uniform_param({model_dim, head_dim}, bound, rng));
    p.W_k.push_back(uniform_param({model_dim, head_dim}, bound, rng));
    p.W_v.push_back(uniform_param({model_dim, head_dim}, bound, rng));
  }
  p.W_c = uniform_param({model_dim, classes}, bound, rng);
  return p;
}

AttentionOutput attend(const Tensor& H, const AttentionParams& p) {
  if (H.rank() != 2 || H.cols() != p.model_dim)
    throw DimensionError("attend: H " + shape_string(H.shape()) + " vs model dim " +
                         std::to_string(p.model_dim));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(p.head_dim));
  AttentionOutput out;
  Tensor C;
  for (std::size_t i = 0; i < p.heads(); ++i) {
    const Tensor Q = matmul(H, p.W_q[i]);
    const Tensor K = matmul(H, p.W_k[i]);
    const Tensor V = matmul(H, p.W_v[i]);
    Tensor alpha = softmax_rows(scale(matmul(Q, transpose(K)), inv_sqrt));
    Tensor head = matmul(alpha, V);
    C = C.defined() ? concat(C, head) : head;
    out.alpha.push_back(std::move(alpha));
  }
  out.C = C;
  return out;
}

Tensor residual_logits(const Tensor& H, const Tensor& C, const AttentionParams& p) {
  if (H.shape() != C.shape())
    throw DimensionError("residual_classify: H " + shape_string(H.shape()) + " vs C " +
                         shape_string(C.shape()));
  return matmul(add(H, C), p.W_c);
}

Tensor residual_classify(const Tensor& H, const Tensor& C, const AttentionParams& p) {
  return softmax_rows(residual_logits(H, C, p));
}

}  // namespace gcm
