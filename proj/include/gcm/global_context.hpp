#pragma once

#include <cstddef>
#include <vector>

#include "gcm/bilstm.hpp"
#include "gcm/random.hpp"
#include "gcm/tensor.hpp"

namespace gcm {

// How the whole-sentence summary G is assembled.
//   cross:     backward_states[0] || forward_states[n-1]  (default mechanism)
//   same:      forward_states[n-1] || backward_states[0]  (same-direction ablation)
//   endpoints: row 0 || row n-1 of a non-directional encoding
enum class Composition { cross, same, endpoints };

struct GlobalSummary {
  Tensor G;  // 1 x dim G
  Composition composition = Composition::cross;
};

GlobalSummary summarize(const BiLstmOutput& enc, Composition composition);
// Raw (non-directional) encodings only support the endpoints composition.
GlobalSummary summarize(const Tensor& encoding, Composition composition);

// Gate maps read O_t = G || H_t. W_H is (dimG+dimH) x dimH, W_G is
// (dimG+dimH) x dimG, and the classifier W_c is (dimH+dimG) x u, so every
// gate scales exactly the vector it is multiplied with.
struct GateParams {
  Tensor W_H, b_H;
  Tensor W_G, b_G;
  Tensor W_c, b_c;
  std::size_t dim_h = 0;
  std::size_t dim_g = 0;
  std::size_t classes = 0;

  static GateParams init(std::size_t dim_h, std::size_t dim_g, std::size_t classes, Rng& rng);
  static GateParams zeros(std::size_t dim_h, std::size_t dim_g, std::size_t classes);
};

struct GateTraceEntry {
  std::vector<double> i_H;
  std::vector<double> i_G;
};
using GateTrace = std::vector<GateTraceEntry>;

struct FusedPosition {
  Tensor fused;  // 1 x (dimH + dimG): (i_H * H_t) || (i_G * G)
  GateTraceEntry trace;
};

// Single position t; H_t is 1 x dimH.
FusedPosition gate_fuse(const Tensor& H_t, const GlobalSummary& G, const GateParams& p);

struct FusedSequence {
  Tensor fused;  // n x (dimH + dimG)
  GateTrace trace;  // empty unless requested
};

// All positions at once. G's share of the gate pre-activations is computed
// once per sentence and broadcast over rows.
FusedSequence gate_fuse_sequence(const Tensor& H, const GlobalSummary& G, const GateParams& p,
                                 bool with_trace = true);

// Unweighted fusion H_t + G (rows of H each get G added).
Tensor fuse_unweighted(const Tensor& H, const Tensor& G);

// Row-wise logits fused * W_c + b_c.
Tensor classifier_logits(const Tensor& fused, const Tensor& W_c, const Tensor& b_c);
// Row-wise softmax of the classifier logits.
Tensor classify(const Tensor& fused, const GateParams& p);

}  // namespace gcm
