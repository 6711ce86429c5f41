#include "gcm/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcm/error.hpp"

namespace gcm {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

void check_emissions(const Tensor& e, const CrfParams& p) {
  if (e.rank() != 2 || e.cols() != p.classes)
    throw DimensionError("crf: emissions " + shape_string(e.shape()) + " vs " +
                         std::to_string(p.classes) + " tags");
}

void check_tags(std::span<const int> tags, const Tensor& e, std::size_t u) {
  if (tags.size() != e.rows())
    throw DimensionError("crf: " + std::to_string(tags.size()) + " tags for " +
                         std::to_string(e.rows()) + " positions");
  for (std::size_t t = 0; t < tags.size(); ++t)
    if (tags[t] < 0 || static_cast<std::size_t>(tags[t]) >= u)
      throw DataError("crf: tag " + std::to_string(tags[t]) + " out of range at position " +
                      std::to_string(t));
}

// alpha[t*u + j]: log-sum of scores of all prefixes ending in tag j at t.
std::vector<double> forward_scores(const Tensor& e, const CrfParams& p) {
  const std::size_t n = e.rows(), u = p.classes;
  std::vector<double> alpha(n * u);
  std::vector<double> buf(u);
  for (std::size_t j = 0; j < u; ++j) alpha[j] = p.transition(p.start(), j) + e.at(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < u; ++j) {
      for (std::size_t i = 0; i < u; ++i) buf[i] = alpha[(t - 1) * u + i] + p.transition(i, j);
      alpha[t * u + j] = log_sum_exp(buf) + e.at(t, j);
    }
  }
  return alpha;
}

double finish_partition(std::span<const double> alpha, std::size_t n, const CrfParams& p) {
  const std::size_t u = p.classes;
  std::vector<double> buf(u);
  for (std::size_t j = 0; j < u; ++j) buf[j] = alpha[(n - 1) * u + j] + p.transition(j, p.stop());
  return log_sum_exp(buf);
}

}  // namespace

CrfParams CrfParams::init(std::size_t classes) {
  CrfParams p;
  p.classes = classes;
  p.transitions = Tensor::zeros({classes + 2, classes + 2}, true);
  p.enforce_masks();
  return p;
}

void CrfParams::enforce_masks() {
  const std::size_t w = classes + 2;
  auto d = transitions.mutable_data();
  for (std::size_t i = 0; i < w; ++i) {
    d[i * w + start()] = kCrfMask;
    d[stop() * w + i] = kCrfMask;
  }
}

double path_score(const Tensor& emissions, std::span<const int> tags, const CrfParams& p) {
  check_emissions(emissions, p);
  check_tags(tags, emissions, p.classes);
  double s = p.transition(p.start(), static_cast<std::size_t>(tags[0]));
  for (std::size_t t = 0; t < tags.size(); ++t) {
    s += emissions.at(t, static_cast<std::size_t>(tags[t]));
    if (t > 0) s += p.transition(static_cast<std::size_t>(tags[t - 1]), static_cast<std::size_t>(tags[t]));
  }
  return s + p.transition(static_cast<std::size_t>(tags.back()), p.stop());
}

double log_partition(const Tensor& emissions, const CrfParams& p) {
  check_emissions(emissions, p);
  return finish_partition(forward_scores(emissions, p), emissions.rows(), p);
}

Tensor crf_nll(const Tensor& emissions, std::span<const int> gold, const CrfParams& p) {
  check_emissions(emissions, p);
  check_tags(gold, emissions, p.classes);
  const std::size_t n = emissions.rows();
  auto alpha = forward_scores(emissions, p);
  const double log_z = finish_partition(alpha, n, p);
  const double nll = log_z - path_score(emissions, gold, p);
  std::vector<int> tags(gold.begin(), gold.end());
  Tensor out = make_result({1}, {nll}, {emissions, p.transitions});
  if (!out.requires_grad()) return out;
  active_tape()->record(out, [emissions, trans = p.transitions, p, alpha = std::move(alpha),
                              tags = std::move(tags), log_z, n](Tape& tape, const Tensor& c) {
    const double gc = tape.grad_buffer(c)[0];
    const std::size_t u = p.classes, w = u + 2;
    // beta[t*u + i]: log-sum of scores of all suffixes after tag i at t.
    std::vector<double> beta(n * u), buf(u);
    for (std::size_t i = 0; i < u; ++i) beta[(n - 1) * u + i] = p.transition(i, p.stop());
    for (std::size_t t = n - 1; t-- > 0;) {
      for (std::size_t i = 0; i < u; ++i) {
        for (std::size_t j = 0; j < u; ++j)
          buf[j] = p.transition(i, j) + emissions.at(t + 1, j) + beta[(t + 1) * u + j];
        beta[t * u + i] = log_sum_exp(buf);
      }
    }
    auto ge = tape.grad_buffer(emissions);
    auto gt = tape.grad_buffer(trans);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < u; ++j) {
        const double marginal = std::exp(alpha[t * u + j] + beta[t * u + j] - log_z);
        const double indicator = tags[t] == static_cast<int>(j) ? 1.0 : 0.0;
        if (!ge.empty()) ge[t * u + j] += gc * (marginal - indicator);
        if (!gt.empty()) {
          if (t == 0) gt[p.start() * w + j] += gc * (marginal - indicator);
          if (t == n - 1) gt[j * w + p.stop()] += gc * (marginal - indicator);
        }
      }
    }
    if (gt.empty()) return;
    for (std::size_t t = 1; t < n; ++t) {
      for (std::size_t i = 0; i < u; ++i)
        for (std::size_t j = 0; j < u; ++j) {
          const double pair = std::exp(alpha[(t - 1) * u + i] + p.transition(i, j) +
                                       emissions.at(t, j) + beta[t * u + j] - log_z);
          gt[i * w + j] += gc * pair;
        }
      gt[static_cast<std::size_t>(tags[t - 1]) * w + static_cast<std::size_t>(tags[t])] -= gc;
    }
  });
  return out;
}

std::vector<int> viterbi(const Tensor& emissions, const CrfParams& p) {
  check_emissions(emissions, p);
  const std::size_t n = emissions.rows(), u = p.classes;
  std::vector<double> delta(u), next(u);
  std::vector<std::size_t> back(n * u, 0);
  for (std::size_t j = 0; j < u; ++j) delta[j] = p.transition(p.start(), j) + emissions.at(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < u; ++j) {
      std::size_t best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < u; ++i) {
        const double s = delta[i] + p.transition(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      next[j] = best_score + emissions.at(t, j);
      back[t * u + j] = best;
    }
    std::swap(delta, next);
  }
  std::size_t last = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < u; ++j) {
    const double s = delta[j] + p.transition(j, p.stop());
    if (s > best_score) {
      best_score = s;
      last = j;
    }
  }
  std::vector<int> path(n);
  path[n - 1] = static_cast<int>(last);
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = static_cast<int>(back[t * u + static_cast<std::size_t>(path[t])]);
  return path;
}

}  // namespace gcm
