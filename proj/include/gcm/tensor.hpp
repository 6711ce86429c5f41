#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace gcm {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& s);

class Tape;

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass reaches the node
  bool requires_grad = false;
  Tape* producer = nullptr;  // tape that recorded this node as an op output
};
}  // namespace detail

// Dense row-major array of doubles with optional participation in
// reverse-mode differentiation. Copies share the underlying storage; use
// clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value);
  // 1 x k matrix.
  static Tensor row_vector(std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  // Rank-2 extents; a rank-1 tensor reads as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }
  double operator[](std::size_t i) const { return node_->data[i]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();
  void zero_grad() { node_->grad.clear(); }

  // Deep copy of shape and data; no gradient, not on any tape.
  Tensor clone() const;

  const detail::Node* id() const { return node_.get(); }

 private:
  friend class Tape;
  friend Tensor make_result(Shape, std::vector<double>, std::span<const Tensor>);
  friend void backward(const Tensor& loss);
  std::shared_ptr<detail::Node> node_;
};

// Ordered record of differentiable operations executed while the tape is
// active on the current thread. Gradients of tensors the tape produced are
// written in place; gradients of leaves (parameters) are buffered inside the
// tape and added to the leaves by deposit(). That split lets several tapes run
// on different threads against shared parameters and be deposited in a fixed
// order afterwards.
class Tape {
 public:
  // Receives the tape and the op output; reads the output gradient through
  // grad_buffer(output) and accumulates into grad_buffer(input).
  using BackwardFn = std::function<void(Tape&, const Tensor&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  // Appends an op. `output` must have been created by make_result() while
  // this tape was active.
  void record(const Tensor& output, BackwardFn fn);

  // Reverse pass over the recorded ops, in exact reverse recording order.
  // Resets intermediate gradients and buffered leaf gradients first.
  void compute_gradients(const Tensor& loss);
  // Adds buffered leaf gradients into each leaf's grad (accumulating).
  void deposit();

  // Gradient accumulator for `t` during the reverse pass. Empty span when `t`
  // does not require grad.
  std::span<double> grad_buffer(const Tensor& t);
  // Gradient of `t` as seen by the last reverse pass (leaf or intermediate).
  std::span<const double> gradient(const Tensor& t) const;

  std::size_t size() const { return ops_.size(); }

 private:
  struct Op {
    Tensor output;
    BackwardFn fn;
  };
  std::vector<Op> ops_;
  std::unordered_map<const detail::Node*, std::vector<double>> leaf_grads_;
  std::vector<std::shared_ptr<detail::Node>> leaves_;
};

// Makes `tape` the active tape of the calling thread for the scope lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Creates an op output. It requires grad (and the caller must record a
// backward rule) iff a tape is active and any input requires grad.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::span<const Tensor> inputs);
inline Tensor make_result(Shape shape, std::vector<double> values,
                          std::initializer_list<Tensor> inputs) {
  return make_result(std::move(shape), std::move(values),
                     std::span<const Tensor>(inputs.begin(), inputs.size()));
}

// Runs the reverse pass on the tape that produced `loss` and deposits leaf
// gradients. Repeated calls accumulate into leaf grads until zero_grad().
void backward(const Tensor& loss);

// ---- differentiable operations -------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b[offset : offset + a.cols(), :] without materializing the row block.
Tensor matmul_row_block(const Tensor& a, const Tensor& b, std::size_t offset);

enum class ElementwiseOp { add, mul, sigmoid, tanh };
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b = {});

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor scale(const Tensor& a, double factor);

// a[m x n] + bias broadcast over rows; bias has n elements.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);

// Concatenation along the last axis; leading dims must agree.
Tensor concat(const Tensor& a, const Tensor& b);
// Vertical stack of rank-2 tensors with equal column counts.
Tensor concat_rows(std::span<const Tensor> parts);

Tensor slice_cols(const Tensor& a, std::size_t offset, std::size_t count);
Tensor slice_rows(const Tensor& a, std::size_t offset, std::size_t count);
inline Tensor row(const Tensor& a, std::size_t i) { return slice_rows(a, i, 1); }

Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor sum(const Tensor& a);

// Mean over rows of -log softmax(logits)[gold], max-shifted.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> gold);

}  // namespace gcm
