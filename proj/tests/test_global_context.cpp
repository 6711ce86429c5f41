#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gcm/error.hpp"
#include "gcm/global_context.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gcm;
using gcm::testing::check_gradients;
using gcm::testing::oracle_fuse;
using gcm::testing::random_bilstm;
using gcm::testing::random_gate;
using gcm::testing::random_tensor;
using gcm::testing::to_vec;

TEST_CASE("summarize: compositions") {
  std::mt19937_64 rng(1);
  const auto p = random_bilstm(3, 4, rng);

  // n = 1: first and last cell coincide, so both compositions read the same
  // two states; they differ only in block order.
  const auto one = encode(random_tensor({1, 3}, rng), p);
  auto one_cross = to_vec(summarize(one, Composition::cross).G);
  auto one_same = to_vec(summarize(one, Composition::same).G);
  auto expected = to_vec(one.backward_states);
  const auto fwd = to_vec(one.forward_states);
  expected.insert(expected.end(), fwd.begin(), fwd.end());
  CHECK(one_cross == expected);
  std::rotate(one_same.begin(), one_same.begin() + 4, one_same.end());
  CHECK(one_same == one_cross);

  const auto enc = encode(random_tensor({5, 3}, rng), p);
  const auto cross = to_vec(summarize(enc, Composition::cross).G);
  const auto same = to_vec(summarize(enc, Composition::same).G);
  REQUIRE(cross.size() == 8);
  // cross = backward[0] || forward[n-1]
  CHECK(std::vector<double>(cross.begin(), cross.begin() + 4) == to_vec(row(enc.backward_states, 0)));
  CHECK(std::vector<double>(cross.begin() + 4, cross.end()) == to_vec(row(enc.forward_states, 4)));
  std::vector<double> swapped(cross.begin() + 4, cross.end());
  swapped.insert(swapped.end(), cross.begin(), cross.begin() + 4);
  CHECK(swapped == same);

  const Tensor raw({3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  CHECK(to_vec(summarize(raw, Composition::endpoints).G) ==
        std::vector<double>{1, 2, 3, 4, 9, 10, 11, 12});
  CHECK_THROWS_AS(summarize(raw, Composition::cross), UsageError);
  CHECK_THROWS_AS(summarize(raw, Composition::same), UsageError);
}

TEST_CASE("gate_fuse: zero parameters halve everything") {
  std::mt19937_64 rng(2);
  const auto p = GateParams::zeros(4, 6, 3);
  const Tensor H = random_tensor({1, 4}, rng);
  const GlobalSummary G{random_tensor({1, 6}, rng), Composition::cross};
  const auto r = gate_fuse(H, G, p);
  CHECK(r.trace.i_H == std::vector<double>(4, 0.5));
  CHECK(r.trace.i_G == std::vector<double>(6, 0.5));
  auto expected = to_vec(H);
  const auto g = to_vec(G.G);
  expected.insert(expected.end(), g.begin(), g.end());
  for (auto& v : expected) v *= 0.5;
  CHECK(to_vec(r.fused) == expected);
}

TEST_CASE("gate_fuse: saturated biases reduce to pass-through or zero") {
  std::mt19937_64 rng(3);
  const Tensor H = random_tensor({1, 4}, rng);
  const GlobalSummary G{random_tensor({1, 4}, rng), Composition::cross};
  for (double B : {20.0, -20.0}) {
    auto p = GateParams::zeros(4, 4, 2);
    for (auto& v : p.b_H.mutable_data()) v = B;
    for (auto& v : p.b_G.mutable_data()) v = B;
    const auto r = gate_fuse(H, G, p);
    for (double v : r.trace.i_H) CHECK((B > 0 ? v > 1 - 1e-8 : v < 1e-8));
    auto limit = to_vec(H);
    const auto g = to_vec(G.G);
    limit.insert(limit.end(), g.begin(), g.end());
    if (B < 0) std::fill(limit.begin(), limit.end(), 0.0);
    const auto got = to_vec(r.fused);
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(std::abs(got[j] - limit[j]) < 1e-8);
  }
}

TEST_CASE("gate_fuse: straight-line oracle on random instances") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> dim(1, 7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dh = dim(rng), dg = dim(rng);
    const auto p = random_gate(dh, dg, 3, rng);
    const Tensor H = random_tensor({1, dh}, rng);
    const GlobalSummary G{random_tensor({1, dg}, rng), Composition::cross};
    const auto got = gate_fuse(H, G, p);
    const auto want = oracle_fuse(to_vec(H), to_vec(G.G), p);
    const auto fused = to_vec(got.fused);
    REQUIRE(fused.size() == want.fused.size());
    for (std::size_t j = 0; j < fused.size(); ++j) CHECK(std::abs(fused[j] - want.fused[j]) <= 1e-12);
    for (std::size_t j = 0; j < dh; ++j) CHECK(std::abs(got.trace.i_H[j] - want.i_h[j]) <= 1e-12);
    for (std::size_t j = 0; j < dg; ++j) CHECK(std::abs(got.trace.i_G[j] - want.i_g[j]) <= 1e-12);
  }
}

TEST_CASE("gate_fuse: dimension mismatch") {
  std::mt19937_64 rng(5);
  const auto p = random_gate(4, 4, 2, rng);
  const GlobalSummary G{random_tensor({1, 4}, rng), Composition::cross};
  CHECK_THROWS_AS(gate_fuse(random_tensor({1, 3}, rng), G, p), DimensionError);
}

TEST_CASE("gate_fuse_sequence agrees with per-position gate_fuse") {
  std::mt19937_64 rng(6);
  const auto p = random_gate(6, 6, 3, rng);
  const Tensor H = random_tensor({5, 6}, rng);
  const GlobalSummary G{random_tensor({1, 6}, rng), Composition::cross};
  const auto seq = gate_fuse_sequence(H, G, p);
  REQUIRE(seq.trace.size() == 5);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto single = gate_fuse(row(H, t), G, p);
    const auto a = to_vec(row(seq.fused, t));
    const auto b = to_vec(single.fused);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-13));
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(seq.trace[t].i_H[j] > 0.0);
      CHECK(seq.trace[t].i_H[j] < 1.0);
      CHECK(seq.trace[t].i_G[j] > 0.0);
      CHECK(seq.trace[t].i_G[j] < 1.0);
    }
  }
  CHECK(gate_fuse_sequence(H, G, p, false).trace.empty());
}

TEST_CASE("fuse_unweighted") {
  std::mt19937_64 rng(7);
  const Tensor H = random_tensor({3, 4}, rng);
  CHECK(to_vec(fuse_unweighted(H, Tensor::zeros({1, 4}))) == to_vec(H));
  const Tensor one_row = row(H, 1);
  const auto doubled = to_vec(fuse_unweighted(one_row, one_row));
  for (std::size_t j = 0; j < 4; ++j) CHECK(doubled[j] == 2 * one_row.at(0, j));
  const Tensor G = random_tensor({1, 4}, rng);
  const auto sum_rows = to_vec(fuse_unweighted(H, G));
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 4; ++j) CHECK(sum_rows[t * 4 + j] == H.at(t, j) + G.at(0, j));
  CHECK_THROWS_AS(fuse_unweighted(H, Tensor::zeros({1, 3})), UsageError);
}

TEST_CASE("classify: distribution properties") {
  std::mt19937_64 rng(8);
  const auto zero = GateParams::zeros(2, 2, 5);
  const auto uniform = to_vec(classify(Tensor::zeros({1, 4}), zero));
  for (double v : uniform) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

  const auto p = random_gate(3, 3, 5, rng);
  const Tensor x = random_tensor({4, 6}, rng);
  const Tensor probs = classify(x, p);
  const Tensor logits = classifier_logits(x, p.W_c, p.b_c);
  for (std::size_t t = 0; t < 4; ++t) {
    double s = 0;
    std::size_t best_p = 0, best_l = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      s += probs.at(t, c);
      if (probs.at(t, c) > probs.at(t, best_p)) best_p = c;
      if (logits.at(t, c) > logits.at(t, best_l)) best_l = c;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
    CHECK(best_p == best_l);
  }
}

TEST_CASE("summarize -> gate_fuse -> classify gradient check") {
  std::mt19937_64 rng(9);
  auto enc_p = random_bilstm(3, 2, rng, true);
  auto p = random_gate(4, 4, 3, rng, true);
  Tensor Z = random_tensor({4, 3}, rng, 1.0, true);
  const std::vector<int> gold{0, 2, 1, 2};
  auto r = check_gradients(
      [&] {
        const auto enc = encode(Z, enc_p);
        const auto G = summarize(enc, Composition::cross);
        const auto fused = gate_fuse_sequence(enc.H, G, p, false).fused;
        return softmax_cross_entropy(classifier_logits(fused, p.W_c, p.b_c), gold);
      },
      {{"W_H", p.W_H}, {"b_H", p.b_H}, {"W_G", p.W_G}, {"b_G", p.b_G}, {"W_c", p.W_c},
       {"b_c", p.b_c}, {"fW", enc_p.forward.W}, {"bU", enc_p.backward.U}, {"Z", Z}});
  CHECK_MESSAGE(r.max_rel_err < 1e-4, r.worst);

  // Per-position path as well.
  Tensor H = random_tensor({1, 4}, rng, 1.0, true);
  Tensor Gt = random_tensor({1, 4}, rng, 1.0, true);
  auto r2 = check_gradients(
      [&] {
        const auto f = gate_fuse(H, GlobalSummary{Gt, Composition::cross}, p);
        return sum(mul(classify(f.fused, p), Tensor({1, 3}, {1.0, -2.0, 0.5})));
      },
      {{"H", H}, {"G", Gt}, {"W_H", p.W_H}, {"W_G", p.W_G}, {"W_c", p.W_c}});
  CHECK_MESSAGE(r2.max_rel_err < 1e-4, r2.worst);
}
