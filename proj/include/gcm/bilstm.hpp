#pragma once

#include <cstddef>
#include <utility>

#include "gcm/random.hpp"
#include "gcm/tensor.hpp"

namespace gcm {

// One LSTM direction. The four gate maps are stored side by side as column
// blocks [input | forget | cell | output]: W is d_e x 4h, U is h x 4h and b has
// 4h entries. Forget-gate bias starts at 1.
struct LstmParams {
  Tensor W;
  Tensor U;
  Tensor b;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;

  static LstmParams init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  static LstmParams zeros(std::size_t input_dim, std::size_t hidden);
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  static BiLstmParams init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return forward.hidden; }
  std::size_t output_dim() const { return 2 * forward.hidden; }
};

struct LstmState {
  Tensor h;  // 1 x h
  Tensor c;  // 1 x h
};

struct BiLstmOutput {
  Tensor H;                // n x 2h, row t = forward_states[t] || backward_states[t]
  Tensor forward_states;   // n x h
  Tensor backward_states;  // n x h
};

// Standard cell: i, f, o sigmoid gates, tanh candidate g;
// c_t = f*c_prev + i*g, h_t = o*tanh(c_t). x_t is 1 x d_e.
LstmState lstm_cell(const Tensor& x_t, const LstmState& prev, const LstmParams& p);

// Same step given the precomputed input projection x_t W + b (1 x 4h).
LstmState lstm_step(const Tensor& projected_input, const LstmState& prev, const LstmParams& p);

// Left-to-right pass from a zero state; returns n x h hidden states.
Tensor run_lstm(const Tensor& Z, const LstmParams& p, bool reverse);

BiLstmOutput encode(const Tensor& Z, const BiLstmParams& p);

}  // namespace gcm
