#include "gcm/global_context.hpp"

#include <cmath>

#include "gcm/error.hpp"

namespace gcm {

namespace {

void check_width(const char* what, const Tensor& t, std::size_t want) {
  if (t.rank() != 2 || t.cols() != want)
    throw DimensionError(std::string(what) + ": expected width " + std::to_string(want) +
                         ", got " + shape_string(t.shape()));
}

GateTraceEntry trace_rows(const Tensor& i_H, const Tensor& i_G, std::size_t r) {
  GateTraceEntry e;
  const auto h = i_H.data().subspan(r * i_H.cols(), i_H.cols());
  const auto g = i_G.data().subspan(r * i_G.cols(), i_G.cols());
  e.i_H.assign(h.begin(), h.end());
  e.i_G.assign(g.begin(), g.end());
  return e;
}

}  // namespace

GlobalSummary summarize(const BiLstmOutput& enc, Composition composition) {
  const std::size_t n = enc.forward_states.rows();
  if (n == 0) throw UsageError("summarize: empty encoding");
  const Tensor first_backward = row(enc.backward_states, 0);
  const Tensor last_forward = row(enc.forward_states, n - 1);
  switch (composition) {
    case Composition::cross:
      return {concat(first_backward, last_forward), composition};
    case Composition::same:
      return {concat(last_forward, first_backward), composition};
    case Composition::endpoints:
      return summarize(enc.H, composition);
  }
  throw InternalError("summarize: unknown composition");
}

GlobalSummary summarize(const Tensor& encoding, Composition composition) {
  if (composition != Composition::endpoints)
    throw UsageError("summarize: cross/same compositions need a bidirectional encoding");
  if (encoding.rank() != 2) throw UsageError("summarize: expected an n x d encoding");
  const std::size_t n = encoding.rows();
  return {concat(row(encoding, 0), row(encoding, n - 1)), composition};
}

GateParams GateParams::init(std::size_t dim_h, std::size_t dim_g, std::size_t classes, Rng& rng) {
  GateParams p;
  p.dim_h = dim_h;
  p.dim_g = dim_g;
  p.classes = classes;
  const double gate_bound = 1.0 / std::sqrt(static_cast<double>(dim_h + dim_g));
  p.W_H = uniform_param({dim_g + dim_h, dim_h}, gate_bound, rng);
  p.b_H = Tensor::zeros({dim_h}, true);
  p.W_G = uniform_param({dim_g + dim_h, dim_g}, gate_bound, rng);
  p.b_G = Tensor::zeros({dim_g}, true);
  p.W_c = uniform_param({dim_h + dim_g, classes}, gate_bound, rng);
  p.b_c = Tensor::zeros({classes}, true);
  return p;
}

GateParams GateParams::zeros(std::size_t dim_h, std::size_t dim_g, std::size_t classes) {
  GateParams p;
  p.dim_h = dim_h;
  p.dim_g = dim_g;
  p.classes = classes;
  p.W_H = Tensor::zeros({dim_g + dim_h, dim_h}, true);
  p.b_H = Tensor::zeros({dim_h}, true);
  p.W_G = Tensor::zeros({dim_g + dim_h, dim_g}, true);
  p.b_G = Tensor::zeros({dim_g}, true);
  p.W_c = Tensor::zeros({dim_h + dim_g, classes}, true);
  p.b_c = Tensor::zeros({classes}, true);
  return p;
}

FusedPosition gate_fuse(const Tensor& H_t, const GlobalSummary& G, const GateParams& p) {
  check_width("gate_fuse H_t", H_t, p.dim_h);
  check_width("gate_fuse G", G.G, p.dim_g);
  if (H_t.rows() != 1) throw DimensionError("gate_fuse: H_t must be a single row");
  const Tensor O = concat(G.G, H_t);
  const Tensor i_H = sigmoid(add_row_bias(matmul(O, p.W_H), p.b_H));
  const Tensor i_G = sigmoid(add_row_bias(matmul(O, p.W_G), p.b_G));
  return {concat(mul(i_H, H_t), mul(i_G, G.G)), trace_rows(i_H, i_G, 0)};
}

FusedSequence gate_fuse_sequence(const Tensor& H, const GlobalSummary& G, const GateParams& p,
                                 bool with_trace) {
  check_width("gate_fuse H", H, p.dim_h);
  check_width("gate_fuse G", G.G, p.dim_g);
  const std::size_t n = H.rows();
  // O_t W = G W[:dimG] + H_t W[dimG:]
  const Tensor g_part_H = add_row_bias(matmul_row_block(G.G, p.W_H, 0), p.b_H);
  const Tensor g_part_G = add_row_bias(matmul_row_block(G.G, p.W_G, 0), p.b_G);
  const Tensor i_H = sigmoid(add_row_bias(matmul_row_block(H, p.W_H, p.dim_g), g_part_H));
  const Tensor i_G = sigmoid(add_row_bias(matmul_row_block(H, p.W_G, p.dim_g), g_part_G));
  const std::vector<Tensor> g_rows(n, G.G);
  FusedSequence out;
  out.fused = concat(mul(i_H, H), mul(i_G, concat_rows(g_rows)));
  if (!with_trace) return out;
  out.trace.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.trace.push_back(trace_rows(i_H, i_G, t));
  return out;
}

Tensor fuse_unweighted(const Tensor& H, const Tensor& G) {
  if (H.cols() != G.size())
    throw UsageError("fuse_unweighted: dim H (" + std::to_string(H.cols()) + ") != dim G (" +
                     std::to_string(G.size()) + ")");
  return add_row_bias(H, G);
}

Tensor classifier_logits(const Tensor& fused, const Tensor& W_c, const Tensor& b_c) {
  return add_row_bias(matmul(fused, W_c), b_c);
}

Tensor classify(const Tensor& fused, const GateParams& p) {
  return softmax_rows(classifier_logits(fused, p.W_c, p.b_c));
}

}  // namespace gcm
