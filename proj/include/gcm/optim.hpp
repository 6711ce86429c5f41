#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gcm/tensor.hpp"

namespace gcm {

struct OptimizerGroup {
  std::string name;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::vector<Tensor> params;
};

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with decoupled weight decay:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
// with bias-corrected moments. Each group has its own lr and decay.
class AdamW {
 public:
  explicit AdamW(std::vector<OptimizerGroup> groups, AdamWOptions opts = {});

  // Consumes the current grads. InternalError if a parameter has none.
  void step();
  void zero_grad();

  const std::vector<OptimizerGroup>& groups() const { return groups_; }
  long steps() const { return steps_; }
  // "name=lr" pairs, for diagnostics.
  std::string lr_snapshot() const;

 private:
  std::vector<OptimizerGroup> groups_;
  AdamWOptions opts_;
  std::vector<std::vector<std::vector<double>>> m_, v_;  // [group][param][elem]
  long steps_ = 0;
};

}  // namespace gcm
