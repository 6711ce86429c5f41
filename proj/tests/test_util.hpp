#pragma once

// Test-only helpers: a central finite-difference gradient oracle that
// evaluates the loss without any tape, plus random tensor builders.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gcm/tensor.hpp"

namespace gcm::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries whose
// true gradient is (near) zero from dividing by finite-difference noise.
inline double rel_err(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares tape gradients of `loss_fn()` w.r.t. every element of `params`
// with central differences of step `h`.
inline GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn,
                                       std::vector<std::pair<std::string, Tensor>> params,
                                       double h = 1e-5) {
  for (auto& [_, p] : params) p.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    backward(loss_fn());
  }
  GradCheckResult r;
  for (auto& [name, p] : params) {
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss_fn().item();
      data[i] = saved - h;
      const double down = loss_fn().item();
      data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double e = rel_err(a, numeric);
      ++r.checked;
      if (e > r.max_rel_err) {
        r.max_rel_err = e;
        r.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                  " numeric=" + std::to_string(numeric);
      }
    }
  }
  return r;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0,
                            bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  std::normal_distribution<double> d(0.0, scale);
  for (auto& v : t.mutable_data()) v = d(rng);
  return t;
}

inline std::vector<double> to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace gcm::testing
