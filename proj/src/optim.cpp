#include "gcm/optim.hpp"

#include <cmath>
#include <sstream>

#include "gcm/error.hpp"

namespace gcm {

AdamW::AdamW(std::vector<OptimizerGroup> groups, AdamWOptions opts)
    : groups_(std::move(groups)), opts_(opts) {
  for (const auto& g : groups_) {
    auto& m = m_.emplace_back();
    auto& v = v_.emplace_back();
    for (const auto& p : g.params) {
      m.emplace_back(p.size(), 0.0);
      v.emplace_back(p.size(), 0.0);
    }
  }
}

void AdamW::step() {
  ++steps_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    auto& g = groups_[gi];
    for (std::size_t pi = 0; pi < g.params.size(); ++pi) {
      Tensor& p = g.params[pi];
      if (!p.has_grad())
        throw InternalError("adamw: parameter " + std::to_string(pi) + " of group '" + g.name +
                            "' has no gradient");
      auto data = p.mutable_data();
      const auto grad = p.grad();
      auto& m = m_[gi][pi];
      auto& v = v_[gi][pi];
      for (std::size_t i = 0; i < data.size(); ++i) {
        m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * grad[i];
        v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        data[i] -= g.lr * (m_hat / (std::sqrt(v_hat) + opts_.eps) + g.weight_decay * data[i]);
      }
    }
  }
}

void AdamW::zero_grad() {
  for (auto& g : groups_)
    for (auto& p : g.params) p.zero_grad();
}

std::string AdamW::lr_snapshot() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < groups_.size(); ++i)
    os << (i ? " " : "") << groups_[i].name << '=' << groups_[i].lr;
  return os.str();
}

}  // namespace gcm
