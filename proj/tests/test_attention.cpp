#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gcm/attention.hpp"
#include "gcm/error.hpp"
#include "test_util.hpp"

using namespace gcm;
using gcm::testing::check_gradients;
using gcm::testing::random_tensor;
using gcm::testing::to_vec;

namespace {

AttentionParams random_attention(std::size_t dh, std::size_t m, std::size_t u,
                                 std::mt19937_64& rng, bool rg = false) {
  AttentionParams p;
  p.model_dim = dh;
  p.head_dim = dh / m;
  p.classes = u;
  for (std::size_t i = 0; i < m; ++i) {
    p.W_q.push_back(random_tensor({dh, dh / m}, rng, 0.7, rg));
    p.W_k.push_back(random_tensor({dh, dh / m}, rng, 0.7, rg));
    p.W_v.push_back(random_tensor({dh, dh / m}, rng, 0.7, rg));
  }
  p.W_c = random_tensor({dh, u}, rng, 0.7, rg);
  return p;
}

using Matrix = std::vector<std::vector<double>>;

Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

Matrix product(const Matrix& a, const Matrix& b) {
  Matrix out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

// Straight-line multi-head attention returning the concatenated context.
Matrix oracle_context(const Matrix& H, const AttentionParams& p) {
  const std::size_t n = H.size();
  Matrix C(n);
  for (std::size_t head = 0; head < p.heads(); ++head) {
    const Matrix Q = product(H, to_matrix(p.W_q[head]));
    const Matrix K = product(H, to_matrix(p.W_k[head]));
    const Matrix V = product(H, to_matrix(p.W_v[head]));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n);
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0;
        for (std::size_t k = 0; k < p.head_dim; ++k) dot += Q[i][k] * K[j][k];
        s[j] = dot / std::sqrt(static_cast<double>(p.head_dim));
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0;
      for (auto& v : s) z += (v = std::exp(v - mx));
      for (std::size_t k = 0; k < p.head_dim; ++k) {
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += s[j] / z * V[j][k];
        C[i].push_back(acc);
      }
    }
  }
  return C;
}

}  // namespace

TEST_CASE("attend: single token attends to itself") {
  std::mt19937_64 rng(1);
  const auto p = random_attention(4, 2, 3, rng);
  const Tensor H = random_tensor({1, 4}, rng);
  const auto out = attend(H, p);
  for (const auto& a : out.alpha) CHECK(to_vec(a) == std::vector<double>{1.0});
  const auto v0 = to_vec(matmul(H, p.W_v[0]));
  const auto v1 = to_vec(matmul(H, p.W_v[1]));
  CHECK(to_vec(out.C) == std::vector<double>{v0[0], v0[1], v1[0], v1[1]});
}

TEST_CASE("attend: identical rows give uniform attention") {
  std::mt19937_64 rng(2);
  const auto p = random_attention(6, 3, 2, rng);
  const Tensor r = random_tensor({1, 6}, rng);
  std::vector<Tensor> rows(5, r);
  const auto out = attend(concat_rows(rows), p);
  for (const auto& a : out.alpha)
    for (double v : a.data()) CHECK(std::abs(v - 0.2) <= 1e-12);
}

TEST_CASE("attend: straight-line oracle and stochastic rows") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_attention(4, 2, 3, rng);
    const Tensor H = random_tensor({3, 4}, rng);
    const auto out = attend(H, p);
    const Matrix want = oracle_context(to_matrix(H), p);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(out.C.at(i, k) - want[i][k]) <= 1e-12);
    for (const auto& a : out.alpha)
      for (std::size_t i = 0; i < 3; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < 3; ++j) s += a.at(i, j);
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
  }
}

TEST_CASE("attend: permutation equivariance") {
  std::mt19937_64 rng(4);
  const auto p = random_attention(8, 4, 3, rng);
  const std::size_t n = 6;
  const Tensor H = random_tensor({n, 8}, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Tensor> rows;
  for (std::size_t i : perm) rows.push_back(row(H, i));
  const auto base = attend(H, p).C;
  const auto moved = attend(concat_rows(rows), p).C;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 8; ++k)
      CHECK(moved.at(i, k) == doctest::Approx(base.at(perm[i], k)).epsilon(1e-12));
}

TEST_CASE("residual_classify: zero context reduces to a plain softmax head") {
  std::mt19937_64 rng(5);
  const auto p = random_attention(4, 2, 3, rng);
  const Tensor H = random_tensor({3, 4}, rng);
  const auto probs = residual_classify(H, Tensor::zeros({3, 4}), p);
  const auto plain = softmax_rows(matmul(H, p.W_c));
  CHECK(to_vec(probs) == to_vec(plain));
  const Tensor C = random_tensor({3, 4}, rng);
  const auto with_c = residual_classify(H, C, p);
  const auto oracle = product(to_matrix(add(H, C)), to_matrix(p.W_c));
  for (std::size_t t = 0; t < 3; ++t) {
    double z = 0, s = 0;
    for (double v : oracle[t]) z += std::exp(v);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(with_c.at(t, c) == doctest::Approx(std::exp(oracle[t][c]) / z).epsilon(1e-12));
      s += with_c.at(t, c);
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("attention: gradient check and configuration errors") {
  std::mt19937_64 rng(6);
  auto p = random_attention(4, 2, 3, rng, true);
  Tensor H = random_tensor({4, 4}, rng, 1.0, true);
  const std::vector<int> gold{2, 0, 1, 1};
  std::vector<std::pair<std::string, Tensor>> params{{"H", H}, {"W_c", p.W_c}};
  for (std::size_t i = 0; i < 2; ++i) {
    params.emplace_back("W_q" + std::to_string(i), p.W_q[i]);
    params.emplace_back("W_k" + std::to_string(i), p.W_k[i]);
    params.emplace_back("W_v" + std::to_string(i), p.W_v[i]);
  }
  auto r = check_gradients(
      [&] { return softmax_cross_entropy(residual_logits(H, attend(H, p).C, p), gold); }, params);
  CHECK_MESSAGE(r.max_rel_err < 1e-4, r.worst);

  Rng init_rng(7);
  CHECK_THROWS_AS(AttentionParams::init(10, 4, 3, 2, init_rng), ConfigError);
  const auto ok = AttentionParams::init(12, 4, 3, 2, init_rng);
  CHECK(ok.heads() == 4);
  CHECK(ok.W_q[0].shape() == Shape{12, 3});
  CHECK_THROWS_AS(attend(random_tensor({3, 5}, rng), ok), DimensionError);
}
