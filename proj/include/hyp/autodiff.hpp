#pragma once

// Dense double-precision tensors with tape-based reverse-mode differentiation.
//
// Operations record themselves on the thread's active Tape (see TapeScope)
// whenever one of their inputs requires a gradient. Without an active tape
// every operation is a plain forward evaluation. Gradients accumulate (+=)
// into leaf tensors; intermediate gradients are reset by each backward pass,
// so replaying a tape twice doubles leaf gradients exactly.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hyp/sparse.hpp"

namespace hyp::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;

  std::vector<double>& grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  /// Writable storage; meant for leaves (parameters, inputs under test).
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t flat) const { return node_->value.at(flat); }

  bool requires_grad() const { return node_->requires_grad; }
  /// Gradient buffer; all zeros when nothing has been accumulated.
  std::vector<double> grad() const;
  void zero_grad();

  /// Same values, no gradient tracking, independent storage.
  Tensor detach() const;

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Ordered record of differentiable operations.
class Tape {
 public:
  using BackwardFn = std::function<void(const std::vector<double>&)>;

  void record(std::vector<std::shared_ptr<Node>> inputs, std::shared_ptr<Node> output,
              BackwardFn backward);

  /// Propagates d(loss)/d(.) to every reachable requires_grad leaf.
  /// Throws UsageError when loss is not a single element.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::vector<std::shared_ptr<Node>> inputs;
    std::shared_ptr<Node> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

/// Makes `tape` the active tape of the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording on the current thread for the scope's lifetime.
class NoRecordScope {
 public:
  NoRecordScope();
  ~NoRecordScope();
  NoRecordScope(const NoRecordScope&) = delete;
  NoRecordScope& operator=(const NoRecordScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape() noexcept;

/// Builds an output tensor and, when recording applies, appends its backward
/// rule to the active tape. The rule receives d(loss)/d(output).
Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                   std::function<void(const std::vector<double>&)> backward);
Tensor make_result(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs,
                   std::function<void(const std::vector<double>&)> backward);

// Elementwise binary operations with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double s);
Tensor operator+(double s, const Tensor& a);
Tensor operator-(const Tensor& a, double s);
Tensor operator-(double s, const Tensor& a);
Tensor operator*(const Tensor& a, double s);
Tensor operator*(double s, const Tensor& a);
Tensor operator/(const Tensor& a, double s);
Tensor operator/(double s, const Tensor& a);

// Elementwise unary operations.
Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor tanh(const Tensor& x);
/// artanh with the argument clamped to [-1 + 1e-5, 1 - 1e-5].
Tensor artanh(const Tensor& x);
Tensor asinh(const Tensor& x);
Tensor sinh(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
Tensor relu(const Tensor& x);
/// Clamp to [lo, hi]; gradient passes only strictly inside or at the bounds.
Tensor clamp(const Tensor& x, double lo, double hi);

/// Stretches x to `shape` following broadcasting rules.
Tensor broadcast_to(const Tensor& x, const Shape& shape);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sum over one axis; the axis is kept with extent 1.
Tensor sum_axis(const Tensor& x, std::size_t axis);
Tensor mean_axis(const Tensor& x, std::size_t axis);
/// Sum over the last axis, kept with extent 1.
Tensor sum_last(const Tensor& x);
/// Euclidean norm over the last axis, kept with extent 1. The gradient at a
/// zero vector is taken as zero.
Tensor norm_last(const Tensor& x);

/// (m x k) times (k x n).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Rows x[idx[i]] of a 2-D tensor.
Tensor gather_rows(const Tensor& x, std::vector<std::size_t> idx);
/// out[idx[i]] += x[i]; output has `rows` rows.
Tensor scatter_add_rows(const Tensor& x, std::vector<std::size_t> idx, std::size_t rows);

/// S X for a fixed sparse S and 2-D X.
Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x);

/// Cross-correlation of an NHWC input with a (kh, kw, c_in, c_out) kernel,
/// zero padding on every side.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);

/// Channel-wise maximum over k x k windows of an NHWC input. Ties go to the
/// first element in row-major window order.
Tensor max_pool2d(const Tensor& input, std::size_t window, std::size_t stride);

/// Channel-wise sum over k x k windows of an NHWC input.
Tensor sum_pool2d(const Tensor& input, std::size_t window, std::size_t stride);

/// Mean over `rows` (or all rows when empty) of -log softmax(logits)[label].
/// Labels must lie in [0, K).
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<std::size_t>& rows = {});

}  // namespace hyp::ad
