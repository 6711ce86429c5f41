#include "gcm/bilstm.hpp"

#include <cmath>
#include <vector>

#include "gcm/error.hpp"

namespace gcm {

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.W = uniform_param({input_dim, 4 * hidden}, bound, rng);
  p.U = uniform_param({hidden, 4 * hidden}, bound, rng);
  p.b = Tensor::zeros({4 * hidden}, true);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.b.mutable_data()[j] = 1.0;
  return p;
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.W = Tensor::zeros({input_dim, 4 * hidden}, true);
  p.U = Tensor::zeros({hidden, 4 * hidden}, true);
  p.b = Tensor::zeros({4 * hidden}, true);
  return p;
}

BiLstmParams BiLstmParams::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  BiLstmParams p;
  p.forward = LstmParams::init(input_dim, hidden, rng);
  p.backward = LstmParams::init(input_dim, hidden, rng);
  return p;
}

LstmState lstm_step(const Tensor& projected_input, const LstmState& prev, const LstmParams& p) {
  const std::size_t h = p.hidden;
  if (projected_input.cols() != 4 * h || prev.h.cols() != h || prev.c.cols() != h)
    throw DimensionError("lstm_step: state/projection widths do not match hidden size " +
                         std::to_string(h));
  Tensor pre = add(projected_input, matmul(prev.h, p.U));
  Tensor i = sigmoid(slice_cols(pre, 0, h));
  Tensor f = sigmoid(slice_cols(pre, h, h));
  Tensor g = tanh(slice_cols(pre, 2 * h, h));
  Tensor o = sigmoid(slice_cols(pre, 3 * h, h));
  Tensor c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

LstmState lstm_cell(const Tensor& x_t, const LstmState& prev, const LstmParams& p) {
  if (x_t.rank() != 2 || x_t.rows() != 1 || x_t.cols() != p.input_dim)
    throw DimensionError("lstm_cell: input " + shape_string(x_t.shape()) + " vs input dim " +
                         std::to_string(p.input_dim));
  return lstm_step(add_row_bias(matmul(x_t, p.W), p.b), prev, p);
}

Tensor run_lstm(const Tensor& Z, const LstmParams& p, bool reverse) {
  if (Z.rank() != 2 || Z.cols() != p.input_dim)
    throw DimensionError("lstm: input " + shape_string(Z.shape()) + " vs input dim " +
                         std::to_string(p.input_dim));
  const std::size_t n = Z.rows();
  Tensor projected = add_row_bias(matmul(Z, p.W), p.b);
  LstmState state{Tensor::zeros({1, p.hidden}), Tensor::zeros({1, p.hidden})};
  std::vector<Tensor> states(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    state = lstm_step(row(projected, t), state, p);
    states[t] = state.h;
  }
  return concat_rows(states);
}

BiLstmOutput encode(const Tensor& Z, const BiLstmParams& p) {
  if (!Z.defined() || Z.rank() != 2) throw UsageError("encode: expected an n x d_e matrix");
  BiLstmOutput out;
  out.forward_states = run_lstm(Z, p.forward, false);
  out.backward_states = run_lstm(Z, p.backward, true);
  out.H = concat(out.forward_states, out.backward_states);
  return out;
}

}  // namespace gcm
