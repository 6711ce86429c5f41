#include "gcm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gcm/error.hpp"
#include "gcm/kernels.hpp"

namespace gcm {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t element_count(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

void require_rank2(const char* op, const Tensor& a) {
  if (a.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         shape_string(a.shape()));
}

// Records `fn` when `out` is on a tape.
Tensor finish(Tensor out, Tape::BackwardFn fn) {
  if (Tape* t = out.requires_grad() ? active_tape() : nullptr) t->record(out, std::move(fn));
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

// ---- Tensor ---------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : node_(std::make_shared<detail::Node>()) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor shape has a zero extent: " + shape_string(shape));
  if (element_count(shape) != values.size())
    throw DimensionError("tensor shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  node_->shape = std::move(shape);
  node_->data = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::row_vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({1, n}, std::move(values));
}

std::size_t Tensor::rows() const {
  const auto& s = node_->shape;
  if (s.size() <= 1) return 1;
  return element_count(s) / s.back();
}

std::size_t Tensor::cols() const {
  const auto& s = node_->shape;
  return s.empty() ? 1 : s.back();
}

double Tensor::item() const {
  if (size() != 1)
    throw UsageError("item() on non-scalar tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

Tensor Tensor::clone() const { return Tensor(node_->shape, node_->data, false); }

// ---- Tape -----------------------------------------------------------------

Tape::~Tape() {
  for (auto& op : ops_)
    if (op.output.node_->producer == this) op.output.node_->producer = nullptr;
}

void Tape::record(const Tensor& output, BackwardFn fn) {
  if (output.node_->producer != this)
    throw InternalError("tape: recording an output produced elsewhere");
  ops_.push_back({output, std::move(fn)});
}

std::span<double> Tape::grad_buffer(const Tensor& t) {
  if (!t.requires_grad()) return {};
  detail::Node* node = t.node_.get();
  if (node->producer == this) {
    if (node->grad.empty()) node->grad.assign(node->data.size(), 0.0);
    return node->grad;
  }
  auto [it, inserted] = leaf_grads_.try_emplace(node);
  if (inserted) {
    it->second.assign(node->data.size(), 0.0);
    leaves_.push_back(t.node_);
  }
  return it->second;
}

std::span<const double> Tape::gradient(const Tensor& t) const {
  const detail::Node* node = t.node_.get();
  if (node->producer == this) return node->grad;
  auto it = leaf_grads_.find(node);
  if (it == leaf_grads_.end()) return {};
  return it->second;
}

void Tape::compute_gradients(const Tensor& loss) {
  if (loss.size() != 1)
    throw UsageError("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
  if (loss.node_->producer != this)
    throw UsageError("backward: loss was not produced on this tape");
  for (auto& op : ops_) op.output.node_->grad.clear();
  leaf_grads_.clear();
  leaves_.clear();
  grad_buffer(loss)[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (it->output.node_->grad.empty()) continue;  // not reachable from loss
    it->fn(*this, it->output);
  }
}

void Tape::deposit() {
  for (auto& leaf : leaves_) {
    const auto& g = leaf_grads_.at(leaf.get());
    if (leaf->grad.empty()) leaf->grad.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) leaf->grad[i] += g[i];
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

Tensor make_result(Shape shape, std::vector<double> values,
                   std::span<const Tensor> inputs) {
  Tensor out(std::move(shape), std::move(values));
  if (Tape* t = active_tape()) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        out.node_->requires_grad = true;
        out.node_->producer = t;
        break;
      }
    }
  }
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw UsageError("backward: loss must be a scalar tensor");
  Tape* tape = loss.node_->producer;
  if (tape == nullptr) throw UsageError("backward: loss is not on an active tape");
  tape->compute_gradients(loss);
  tape->deposit();
}

// ---- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k)
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  std::vector<double> out(m * n);
  kernels::gemm({m, k, n}, kernels::Trans::no, kernels::Trans::no, a.data(), b.data(), out,
                false);
  return finish(make_result({m, n}, std::move(out), {a, b}),
                [a, b, m, k, n](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  if (auto ga = t.grad_buffer(a); !ga.empty())
                    kernels::gemm({m, n, k}, kernels::Trans::no, kernels::Trans::yes, gc,
                                  b.data(), ga, true);
                  if (auto gb = t.grad_buffer(b); !gb.empty())
                    kernels::gemm({k, m, n}, kernels::Trans::yes, kernels::Trans::no,
                                  a.data(), gc, gb, true);
                });
}

Tensor matmul_row_block(const Tensor& a, const Tensor& b, std::size_t offset) {
  require_rank2("matmul_row_block", a);
  require_rank2("matmul_row_block", b);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (offset + k > b.shape()[0])
    throw DimensionError("matmul_row_block: rows [" + std::to_string(offset) + ", " +
                         std::to_string(offset + k) + ") out of range for " +
                         shape_string(b.shape()));
  const auto block = b.data().subspan(offset * n, k * n);
  std::vector<double> out(m * n);
  kernels::gemm({m, k, n}, kernels::Trans::no, kernels::Trans::no, a.data(), block, out, false);
  return finish(make_result({m, n}, std::move(out), {a, b}),
                [a, b, m, k, n, offset](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  if (auto ga = t.grad_buffer(a); !ga.empty())
                    kernels::gemm({m, n, k}, kernels::Trans::no, kernels::Trans::yes, gc,
                                  b.data().subspan(offset * n, k * n), ga, true);
                  if (auto gb = t.grad_buffer(b); !gb.empty())
                    kernels::gemm({k, m, n}, kernels::Trans::yes, kernels::Trans::no,
                                  a.data(), gc, gb.subspan(offset * n, k * n), true);
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return finish(make_result(a.shape(), std::move(out), {a, b}),
                [a, b](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  for (const Tensor* in : {&a, &b})
                    if (auto g = t.grad_buffer(*in); !g.empty())
                      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i];
                });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return finish(make_result(a.shape(), std::move(out), {a, b}),
                [a, b](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  if (auto g = t.grad_buffer(a); !g.empty())
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i];
                  if (auto g = t.grad_buffer(b); !g.empty())
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gc[i];
                });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return finish(make_result(a.shape(), std::move(out), {a, b}),
                [a, b](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  if (auto g = t.grad_buffer(a); !g.empty())
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i] * b[i];
                  if (auto g = t.grad_buffer(b); !g.empty())
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i] * a[i];
                });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(a[i]);
  return finish(make_result(a.shape(), std::move(out), {a}), [a](Tape& t, const Tensor& c) {
    auto gc = t.grad_buffer(c);
    auto g = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i] * c[i] * (1.0 - c[i]);
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a[i]);
  return finish(make_result(a.shape(), std::move(out), {a}), [a](Tape& t, const Tensor& c) {
    auto gc = t.grad_buffer(c);
    auto g = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i] * (1.0 - c[i] * c[i]);
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return finish(make_result(a.shape(), std::move(out), {a}),
                [a, factor](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  auto g = t.grad_buffer(a);
                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i] * factor;
                });
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  switch (op) {
    case ElementwiseOp::add:
      if (!b.defined()) throw UsageError("elementwise add needs two operands");
      return add(a, b);
    case ElementwiseOp::mul:
      if (!b.defined()) throw UsageError("elementwise mul needs two operands");
      return mul(a, b);
    case ElementwiseOp::sigmoid:
      return sigmoid(a);
    case ElementwiseOp::tanh:
      return tanh(a);
  }
  throw InternalError("elementwise: unknown op");
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.size() != n)
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) +
                         " does not match rows of " + shape_string(a.shape()));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] + bias[j];
  return finish(make_result(a.shape(), std::move(out), {a, bias}),
                [a, bias, m, n](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  if (auto g = t.grad_buffer(a); !g.empty())
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i];
                  if (auto g = t.grad_buffer(bias); !g.empty())
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j) g[j] += gc[i * n + j];
                });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin()))
    throw DimensionError("concat: leading dimensions differ, " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  const std::size_t rows = a.rows(), p = a.cols(), q = b.cols();
  std::vector<double> out(rows * (p + q));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().begin() + r * p, p, out.begin() + r * (p + q));
    std::copy_n(b.data().begin() + r * q, q, out.begin() + r * (p + q) + p);
  }
  Shape shape = a.shape();
  shape.back() = p + q;
  return finish(make_result(std::move(shape), std::move(out), {a, b}),
                [a, b, rows, p, q](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  if (auto g = t.grad_buffer(a); !g.empty())
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t j = 0; j < p; ++j) g[r * p + j] += gc[r * (p + q) + j];
                  if (auto g = t.grad_buffer(b); !g.empty())
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t j = 0; j < q; ++j)
                        g[r * q + j] += gc[r * (p + q) + p + j];
                });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.cols() != cols)
      throw DimensionError("concat_rows: expected matrices with " + std::to_string(cols) +
                           " columns, got " + shape_string(p.shape()));
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor result = make_result({rows, cols}, std::move(out), parts);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return finish(std::move(result), [inputs = std::move(inputs)](Tape& t, const Tensor& c) {
    auto gc = t.grad_buffer(c);
    std::size_t offset = 0;
    for (const auto& p : inputs) {
      if (auto g = t.grad_buffer(p); !g.empty())
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[offset + i];
      offset += p.size();
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t offset, std::size_t count) {
  const std::size_t rows = a.rows(), n = a.cols();
  if (count == 0 || offset + count > n)
    throw DimensionError("slice_cols: [" + std::to_string(offset) + ", " +
                         std::to_string(offset + count) + ") out of range for " +
                         shape_string(a.shape()));
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(a.data().begin() + r * n + offset, count, out.begin() + r * count);
  Shape shape = a.shape();
  shape.back() = count;
  return finish(make_result(std::move(shape), std::move(out), {a}),
                [a, rows, n, offset, count](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  auto g = t.grad_buffer(a);
                  for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < count; ++j)
                      g[r * n + offset + j] += gc[r * count + j];
                });
}

Tensor slice_rows(const Tensor& a, std::size_t offset, std::size_t count) {
  require_rank2("slice_rows", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || offset + count > m)
    throw DimensionError("slice_rows: [" + std::to_string(offset) + ", " +
                         std::to_string(offset + count) + ") out of range for " +
                         shape_string(a.shape()));
  std::vector<double> out(a.data().begin() + offset * n,
                          a.data().begin() + (offset + count) * n);
  return finish(make_result({count, n}, std::move(out), {a}),
                [a, n, offset](Tape& t, const Tensor& c) {
                  auto gc = t.grad_buffer(c);
                  auto g = t.grad_buffer(a);
                  for (std::size_t i = 0; i < gc.size(); ++i) g[offset * n + i] += gc[i];
                });
}

Tensor transpose(const Tensor& a) {
  require_rank2("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return finish(make_result({n, m}, std::move(out), {a}), [a, m, n](Tape& t, const Tensor& c) {
    auto gc = t.grad_buffer(c);
    auto g = t.grad_buffer(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += gc[j * m + i];
  });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.data().data() + i * n;
    double* y = out.data() + i * n;
    const double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  return finish(make_result(a.shape(), std::move(out), {a}), [a, m, n](Tape& t, const Tensor& c) {
    auto gc = t.grad_buffer(c);
    auto g = t.grad_buffer(a);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gc[i * n + j] * c[i * n + j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += c[i * n + j] * (gc[i * n + j] - dot);
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return finish(make_result({1}, {s}, {a}), [a](Tape& t, const Tensor& c) {
    const double gc = t.grad_buffer(c)[0];
    auto g = t.grad_buffer(a);
    for (auto& v : g) v += gc;
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> gold) {
  const std::size_t n = logits.rows(), u = logits.cols();
  if (gold.size() != n)
    throw DimensionError("softmax_cross_entropy: " + std::to_string(gold.size()) +
                         " gold tags for " + std::to_string(n) + " rows");
  std::vector<double> probs(n * u);
  double loss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (gold[t] < 0 || static_cast<std::size_t>(gold[t]) >= u)
      throw DataError("softmax_cross_entropy: gold index " + std::to_string(gold[t]) +
                      " out of range [0," + std::to_string(u) + ") at position " +
                      std::to_string(t));
    const double* x = logits.data().data() + t * u;
    double* p = probs.data() + t * u;
    const double mx = *std::max_element(x, x + u);
    double z = 0.0;
    for (std::size_t j = 0; j < u; ++j) z += (p[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < u; ++j) p[j] /= z;
    loss += -(x[gold[t]] - mx - std::log(z));
  }
  loss /= static_cast<double>(n);
  std::vector<int> gold_copy(gold.begin(), gold.end());
  return finish(make_result({1}, {loss}, {logits}),
                [logits, probs = std::move(probs), gold_copy = std::move(gold_copy), n, u](
                    Tape& t, const Tensor& c) {
                  const double gc = t.grad_buffer(c)[0] / static_cast<double>(n);
                  auto g = t.grad_buffer(logits);
                  for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t j = 0; j < u; ++j)
                      g[r * u + j] += gc * (probs[r * u + j] - (static_cast<int>(j) == gold_copy[r]));
                });
}

}  // namespace gcm
