#include "hyp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hyp/errors.hpp"

namespace hyp::ad {

namespace {

thread_local Tape* g_active_tape = nullptr;

constexpr double kArtanhBound = 1.0 - 1e-5;

std::vector<double>* grad_of(const std::shared_ptr<Node>& n) {
  return n->requires_grad ? &n->grad_buffer() : nullptr;
}

// Right-aligned broadcast of two shapes.
Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw UsageError("broadcast: incompatible shapes " + shape_string(a) + " and " +
                       shape_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `in` viewed inside `out` (zero on broadcast axes).
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t axis_in = in.size() - 1 - k;
    const std::size_t axis_out = out.size() - 1 - k;
    strides[axis_out] = in[axis_in] == 1 ? 0 : stride;
    stride *= in[axis_in];
  }
  return strides;
}

// Calls f(out_index, a_index, b_index) over every element of `out`.
template <typename F>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& f) {
  const std::size_t total = numel(out);
  if (total == 0) return;
  if (out.empty()) {
    f(0, 0, 0);
    return;
  }
  const std::size_t rank = out.size();
  const std::size_t inner = out[rank - 1];
  const std::size_t ia_step = sa[rank - 1];
  const std::size_t ib_step = sb[rank - 1];
  std::vector<std::size_t> counter(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t base = 0; base < total; base += inner) {
    for (std::size_t j = 0; j < inner; ++j) f(base + j, ia + j * ia_step, ib + j * ib_step);
    for (std::size_t axis = rank - 1; axis-- > 0;) {
      ++counter[axis];
      ia += sa[axis];
      ib += sb[axis];
      if (counter[axis] < out[axis]) break;
      ia -= sa[axis] * out[axis];
      ib -= sb[axis] * out[axis];
      counter[axis] = 0;
    }
  }
}

template <typename Fwd, typename DA, typename DB>
Tensor binary(const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  const auto& an = a.node();
  const auto& bn = b.node();
  if (an->shape == bn->shape) {
    const std::size_t n = an->value.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(an->value[i], bn->value[i]);
    return make_result(an->shape, std::move(out), {a, b},
                       [an, bn, da, db](const std::vector<double>& g) {
                         auto* ga = grad_of(an);
                         auto* gb = grad_of(bn);
                         for (std::size_t i = 0; i < g.size(); ++i) {
                           if (ga) (*ga)[i] += g[i] * da(an->value[i], bn->value[i]);
                           if (gb) (*gb)[i] += g[i] * db(an->value[i], bn->value[i]);
                         }
                       });
  }
  Shape shape = broadcast_shape(an->shape, bn->shape);
  auto sa = broadcast_strides(an->shape, shape);
  auto sb = broadcast_strides(bn->shape, shape);
  std::vector<double> out(numel(shape));
  for_each_broadcast(shape, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
    out[i] = fwd(an->value[ia], bn->value[ib]);
  });
  Shape out_shape = shape;
  return make_result(
      std::move(out_shape), std::move(out), {a, b},
      [an, bn, da, db, shape, sa, sb](const std::vector<double>& g) {
        auto* ga = grad_of(an);
        auto* gb = grad_of(bn);
        for_each_broadcast(shape, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          if (ga) (*ga)[ia] += g[i] * da(an->value[ia], bn->value[ib]);
          if (gb) (*gb)[ib] += g[i] * db(an->value[ia], bn->value[ib]);
        });
      });
}

// Derivative callback receives (x, y) with y = f(x).
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto& xn = x.node();
  const std::size_t n = xn->value.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xn->value[i]);
  auto result = make_result(xn->shape, std::move(out), {x}, nullptr);
  if (!result.requires_grad()) return result;
  // The backward rule needs the output values; re-record with access to them.
  std::weak_ptr<Node> out_weak = result.node();
  active_tape()->record({xn}, result.node(), [xn, out_weak, deriv](const std::vector<double>& g) {
    auto* gx = grad_of(xn);
    if (!gx) return;
    auto outn = out_weak.lock();
    for (std::size_t i = 0; i < g.size(); ++i) {
      (*gx)[i] += g[i] * deriv(xn->value[i], outn->value[i]);
    }
  });
  return result;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw UsageError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

std::vector<double>& Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw UsageError("tensor: " + std::to_string(values.size()) + " values for shape " +
                     shape_string(shape));
  }
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item: tensor has " + std::to_string(size()) + " elements");
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.size() != node_->value.size()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

void Tape::record(std::vector<std::shared_ptr<Node>> inputs, std::shared_ptr<Node> output,
                  BackwardFn backward) {
  entries_.push_back({std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) throw UsageError("backward: loss must be a scalar");
  for (auto& e : entries_) {
    e.output->grad.assign(e.output->value.size(), 0.0);
    for (auto& in : e.inputs) {
      if (in->requires_grad) in->grad_buffer();
    }
  }
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->backward) it->backward(it->output->grad);
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoRecordScope::NoRecordScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoRecordScope::~NoRecordScope() { g_active_tape = previous_; }

Tape* active_tape() noexcept { return g_active_tape; }

Tensor make_result(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs,
                   std::function<void(const std::vector<double>&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  Tape* tape = active_tape();
  bool track = false;
  if (tape) {
    for (const auto& in : inputs) track = track || in.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    if (backward) {
      std::vector<std::shared_ptr<Node>> in_nodes;
      in_nodes.reserve(inputs.size());
      for (const auto& in : inputs) in_nodes.push_back(in.node());
      tape->record(std::move(in_nodes), node, std::move(backward));
    }
  }
  return Tensor(std::move(node));
}

Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                   std::function<void(const std::vector<double>&)> backward) {
  return make_result(std::move(shape), std::move(value), std::vector<Tensor>(inputs),
                     std::move(backward));
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator-(const Tensor& a) { return neg(a); }
Tensor operator+(const Tensor& a, double s) { return add(a, Tensor::scalar(s)); }
Tensor operator+(double s, const Tensor& a) { return add(Tensor::scalar(s), a); }
Tensor operator-(const Tensor& a, double s) { return sub(a, Tensor::scalar(s)); }
Tensor operator-(double s, const Tensor& a) { return sub(Tensor::scalar(s), a); }
Tensor operator*(const Tensor& a, double s) { return mul(a, Tensor::scalar(s)); }
Tensor operator*(double s, const Tensor& a) { return mul(Tensor::scalar(s), a); }
Tensor operator/(const Tensor& a, double s) { return div(a, Tensor::scalar(s)); }
Tensor operator/(double s, const Tensor& a) { return div(Tensor::scalar(s), a); }

Tensor neg(const Tensor& x) {
  return unary(x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor artanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::atanh(std::clamp(v, -kArtanhBound, kArtanhBound)); },
      [](double v, double) {
        if (v > kArtanhBound || v < -kArtanhBound) return 0.0;
        return 1.0 / (1.0 - v * v);
      });
}

Tensor asinh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::asinh(v); },
      [](double v, double) { return 1.0 / std::sqrt(1.0 + v * v); });
}

Tensor sinh(const Tensor& x) {
  return unary(x, [](double v) { return std::sinh(v); }, [](double v, double) { return std::cosh(v); });
}

Tensor sqrt(const Tensor& x) {
  return unary(
      x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor relu(const Tensor& x) {
  // At 0 the subgradient is 1, favoring the input branch of max(x, 0).
  return unary(
      x, [](double v) { return v >= 0.0 ? v : 0.0; },
      [](double v, double) { return v >= 0.0 ? 1.0 : 0.0; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  const auto& xn = x.node();
  if (broadcast_shape(xn->shape, shape) != shape) {
    throw UsageError("broadcast_to: cannot stretch " + shape_string(xn->shape) + " to " +
                     shape_string(shape));
  }
  auto sx = broadcast_strides(xn->shape, shape);
  std::vector<double> out(numel(shape));
  for_each_broadcast(shape, sx, sx, [&](std::size_t i, std::size_t ix, std::size_t) {
    out[i] = xn->value[ix];
  });
  return make_result(shape, std::move(out), {x}, [xn, shape, sx](const std::vector<double>& g) {
    auto* gx = grad_of(xn);
    if (!gx) return;
    for_each_broadcast(shape, sx, sx,
                       [&](std::size_t i, std::size_t ix, std::size_t) { (*gx)[ix] += g[i]; });
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw UsageError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  const auto& xn = x.node();
  return make_result(std::move(shape), xn->value, {x}, [xn](const std::vector<double>& g) {
    auto* gx = grad_of(xn);
    if (!gx) return;
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Tensor sum(const Tensor& x) {
  const auto& xn = x.node();
  double s = 0.0;
  for (double v : xn->value) s += v;
  return make_result(Shape{}, {s}, {x}, [xn](const std::vector<double>& g) {
    auto* gx = grad_of(xn);
    if (!gx) return;
    for (double& v : *gx) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw UsageError("mean: empty tensor");
  return sum(x) / static_cast<double>(x.size());
}

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  const auto& xn = x.node();
  if (axis >= xn->shape.size()) throw UsageError("sum_axis: axis out of range");
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xn->shape[i];
  for (std::size_t i = axis + 1; i < xn->shape.size(); ++i) inner *= xn->shape[i];
  const std::size_t len = xn->shape[axis];
  Shape shape = xn->shape;
  shape[axis] = 1;
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < len; ++k) {
      const double* src = &xn->value[(o * len + k) * inner];
      double* dst = &out[o * inner];
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return make_result(std::move(shape), std::move(out), {x},
                     [xn, outer, inner, len](const std::vector<double>& g) {
                       auto* gx = grad_of(xn);
                       if (!gx) return;
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t k = 0; k < len; ++k) {
                           double* dst = &(*gx)[(o * len + k) * inner];
                           const double* src = &g[o * inner];
                           for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
                         }
                       }
                     });
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank() || x.dim(axis) == 0) throw UsageError("mean_axis: empty axis");
  return sum_axis(x, axis) / static_cast<double>(x.dim(axis));
}

Tensor sum_last(const Tensor& x) {
  if (x.rank() == 0) throw UsageError("sum_last: scalar input");
  return sum_axis(x, x.rank() - 1);
}

Tensor norm_last(const Tensor& x) {
  if (x.rank() == 0) throw UsageError("norm_last: scalar input");
  const auto& xn = x.node();
  const std::size_t d = xn->shape.back();
  const std::size_t rows = d == 0 ? 0 : xn->value.size() / d;
  Shape shape = xn->shape;
  shape.back() = 1;
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += xn->value[r * d + j] * xn->value[r * d + j];
    out[r] = std::sqrt(s);
  }
  auto result = make_result(std::move(shape), std::move(out), {x}, nullptr);
  if (!result.requires_grad()) return result;
  std::weak_ptr<Node> out_weak = result.node();
  active_tape()->record({xn}, result.node(), [xn, out_weak, d, rows](const std::vector<double>& g) {
    auto* gx = grad_of(xn);
    if (!gx) return;
    auto outn = out_weak.lock();
    for (std::size_t r = 0; r < rows; ++r) {
      const double n = outn->value[r];
      if (n == 0.0) continue;
      const double s = g[r] / n;
      for (std::size_t j = 0; j < d; ++j) (*gx)[r * d + j] += s * xn->value[r * d + j];
    }
  });
  return result;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(1);
  if (b.dim(0) != k) {
    throw UsageError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const auto& an = a.node();
  const auto& bn = b.node();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = an->value[i * k + p];
      if (av == 0.0) continue;
      const double* brow = &bn->value[p * n];
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](const std::vector<double>& g) {
    if (auto* ga = grad_of(an)) {
      // dA = G B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* grow = &g[i * n];
          const double* brow = &bn->value[p * n];
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          (*ga)[i * k + p] += s;
        }
      }
    }
    if (auto* gb = grad_of(bn)) {
      // dB = A^T G
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &g[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double av = an->value[i * k + p];
          if (av == 0.0) continue;
          double* dst = &(*gb)[p * n];
          for (std::size_t j = 0; j < n; ++j) dst[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0);
  const std::size_t n = a.dim(1);
  const auto& an = a.node();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = an->value[i * n + j];
  }
  return make_result({n, m}, std::move(out), {a}, [an, m, n](const std::vector<double>& g) {
    auto* ga = grad_of(an);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) (*ga)[i * n + j] += g[j * m + i];
    }
  });
}

Tensor gather_rows(const Tensor& x, std::vector<std::size_t> idx) {
  require_rank(x, 2, "gather_rows");
  const std::size_t rows = x.dim(0);
  const std::size_t d = x.dim(1);
  for (std::size_t i : idx) {
    if (i >= rows) throw UsageError("gather_rows: index out of range");
  }
  const auto& xn = x.node();
  std::vector<double> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(&xn->value[idx[r] * d], d, &out[r * d]);
  }
  const std::size_t count = idx.size();
  return make_result({count, d}, std::move(out), {x},
                     [xn, idx = std::move(idx), d](const std::vector<double>& g) {
                       auto* gx = grad_of(xn);
                       if (!gx) return;
                       for (std::size_t r = 0; r < idx.size(); ++r) {
                         for (std::size_t j = 0; j < d; ++j) (*gx)[idx[r] * d + j] += g[r * d + j];
                       }
                     });
}

Tensor scatter_add_rows(const Tensor& x, std::vector<std::size_t> idx, std::size_t rows) {
  require_rank(x, 2, "scatter_add_rows");
  if (idx.size() != x.dim(0)) throw UsageError("scatter_add_rows: index count mismatch");
  const std::size_t d = x.dim(1);
  for (std::size_t i : idx) {
    if (i >= rows) throw UsageError("scatter_add_rows: index out of range");
  }
  const auto& xn = x.node();
  std::vector<double> out(rows * d, 0.0);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t j = 0; j < d; ++j) out[idx[r] * d + j] += xn->value[r * d + j];
  }
  return make_result({rows, d}, std::move(out), {x},
                     [xn, idx = std::move(idx), d](const std::vector<double>& g) {
                       auto* gx = grad_of(xn);
                       if (!gx) return;
                       for (std::size_t r = 0; r < idx.size(); ++r) {
                         for (std::size_t j = 0; j < d; ++j) (*gx)[r * d + j] += g[idx[r] * d + j];
                       }
                     });
}

namespace {

void spmm_into(const SparseMatrix& s, const std::vector<double>& x, std::size_t d,
               std::vector<double>& out) {
  for (std::size_t r = 0; r < s.rows; ++r) {
    double* dst = &out[r * d];
    for (std::size_t p = s.row_ptr[r]; p < s.row_ptr[r + 1]; ++p) {
      const double w = s.values[p];
      const double* src = &x[s.col_idx[p] * d];
      for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
    }
  }
}

}  // namespace

Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x) {
  require_rank(x, 2, "spmm");
  if (!s || s->cols != x.dim(0) || s->row_ptr.size() != s->rows + 1) {
    throw UsageError("spmm: sparse matrix does not match " + shape_string(x.shape()));
  }
  const std::size_t d = x.dim(1);
  const auto& xn = x.node();
  std::vector<double> out(s->rows * d, 0.0);
  spmm_into(*s, xn->value, d, out);
  return make_result({s->rows, d}, std::move(out), {x}, [s, xn, d](const std::vector<double>& g) {
    auto* gx = grad_of(xn);
    if (!gx) return;
    const SparseMatrix t = s->transposed();
    spmm_into(t, g, d, *gx);
  });
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  require_rank(input, 4, "conv2d");
  require_rank(kernel, 4, "conv2d");
  const std::size_t batch = input.dim(0), h = input.dim(1), w = input.dim(2), ci = input.dim(3);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), co = kernel.dim(3);
  if (kernel.dim(2) != ci) throw UsageError("conv2d: channel mismatch");
  if (stride == 0) throw UsageError("conv2d: stride must be positive");
  if (h + 2 * padding < kh || w + 2 * padding < kw) throw UsageError("conv2d: kernel larger than input");
  const std::size_t ho = (h + 2 * padding - kh) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kw) / stride + 1;
  const auto& in = input.node();
  const auto& kn = kernel.node();

  // Visits every (output pixel, kernel tap) pair that lands inside the input.
  auto visit = [=](auto&& f) {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          const std::size_t out_base = ((b * ho + oy) * wo + ox) * co;
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              const std::size_t in_base = ((b * h + iy) * w + ix) * ci;
              const std::size_t k_base = (ky * kw + kx) * ci * co;
              f(out_base, in_base, k_base);
            }
          }
        }
      }
    }
  };

  std::vector<double> out(batch * ho * wo * co, 0.0);
  visit([&](std::size_t ob, std::size_t ib, std::size_t kb) {
    for (std::size_t c = 0; c < ci; ++c) {
      const double v = in->value[ib + c];
      const double* krow = &kn->value[kb + c * co];
      for (std::size_t o = 0; o < co; ++o) out[ob + o] += v * krow[o];
    }
  });
  return make_result({batch, ho, wo, co}, std::move(out), {input, kernel},
                     [in, kn, visit, ci, co](const std::vector<double>& g) {
                       auto* gi = grad_of(in);
                       auto* gk = grad_of(kn);
                       visit([&](std::size_t ob, std::size_t ib, std::size_t kb) {
                         for (std::size_t c = 0; c < ci; ++c) {
                           const double* krow = &kn->value[kb + c * co];
                           const double v = in->value[ib + c];
                           double acc = 0.0;
                           for (std::size_t o = 0; o < co; ++o) {
                             acc += g[ob + o] * krow[o];
                             if (gk) (*gk)[kb + c * co + o] += v * g[ob + o];
                           }
                           if (gi) (*gi)[ib + c] += acc;
                         }
                       });
                     });
}

Tensor max_pool2d(const Tensor& input, std::size_t window, std::size_t stride) {
  require_rank(input, 4, "max_pool2d");
  const std::size_t batch = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  if (window == 0 || stride == 0) throw UsageError("max_pool2d: window and stride must be positive");
  if (window > h || window > w) throw UsageError("max_pool2d: window larger than field");
  const std::size_t ho = (h - window) / stride + 1;
  const std::size_t wo = (w - window) / stride + 1;
  const auto& in = input.node();
  std::vector<double> out(batch * ho * wo * c);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t ky = 0; ky < window; ++ky) {
            for (std::size_t kx = 0; kx < window; ++kx) {
              const std::size_t idx = ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
              if (in->value[idx] > best) {
                best = in->value[idx];
                best_idx = idx;
              }
            }
          }
          const std::size_t o = ((b * ho + oy) * wo + ox) * c + ch;
          out[o] = best;
          argmax[o] = best_idx;
        }
      }
    }
  }
  return make_result({batch, ho, wo, c}, std::move(out), {input},
                     [in, argmax = std::move(argmax)](const std::vector<double>& g) {
                       auto* gi = grad_of(in);
                       if (!gi) return;
                       for (std::size_t o = 0; o < g.size(); ++o) (*gi)[argmax[o]] += g[o];
                     });
}

Tensor sum_pool2d(const Tensor& input, std::size_t window, std::size_t stride) {
  require_rank(input, 4, "sum_pool2d");
  const std::size_t batch = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  if (window == 0 || stride == 0) throw UsageError("sum_pool2d: window and stride must be positive");
  if (window > h || window > w) throw UsageError("sum_pool2d: window larger than field");
  const std::size_t ho = (h - window) / stride + 1;
  const std::size_t wo = (w - window) / stride + 1;
  const auto& in = input.node();
  auto visit = [=](auto&& f) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t oy = 0; oy < ho; ++oy)
        for (std::size_t ox = 0; ox < wo; ++ox)
          for (std::size_t ky = 0; ky < window; ++ky)
            for (std::size_t kx = 0; kx < window; ++kx)
              f(((b * ho + oy) * wo + ox) * c, ((b * h + oy * stride + ky) * w + ox * stride + kx) * c);
  };
  std::vector<double> out(batch * ho * wo * c, 0.0);
  visit([&](std::size_t o, std::size_t i) {
    for (std::size_t ch = 0; ch < c; ++ch) out[o + ch] += in->value[i + ch];
  });
  return make_result({batch, ho, wo, c}, std::move(out), {input},
                     [in, visit, c](const std::vector<double>& g) {
                       auto* gi = grad_of(in);
                       if (!gi) return;
                       visit([&](std::size_t o, std::size_t i) {
                         for (std::size_t ch = 0; ch < c; ++ch) (*gi)[i + ch] += g[o + ch];
                       });
                     });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<std::size_t>& rows) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  if (labels.size() != n) throw UsageError("cross_entropy: label count mismatch");
  std::vector<std::size_t> selected = rows;
  if (selected.empty()) {
    selected.resize(n);
    std::iota(selected.begin(), selected.end(), std::size_t{0});
  }
  const auto& ln = logits.node();
  std::vector<double> probs(selected.size() * k);
  double loss = 0.0;
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const std::size_t r = selected[s];
    if (r >= n) throw UsageError("cross_entropy: row out of range");
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw UsageError("cross_entropy: label " + std::to_string(label) + " out of range");
    }
    const double* row = &ln->value[r * k];
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) probs[s * k + j] = std::exp(row[j] - lse);
    loss += lse - row[label];
  }
  const double count = static_cast<double>(selected.size());
  loss /= count;
  return make_result(Shape{}, {loss}, {logits},
                     [ln, labels, selected, probs = std::move(probs), k, count](const std::vector<double>& g) {
                       auto* gl = grad_of(ln);
                       if (!gl) return;
                       const double scale = g[0] / count;
                       for (std::size_t s = 0; s < selected.size(); ++s) {
                         const std::size_t r = selected[s];
                         for (std::size_t j = 0; j < k; ++j) {
                           double d = probs[s * k + j];
                           if (static_cast<int>(j) == labels[r]) d -= 1.0;
                           (*gl)[r * k + j] += scale * d;
                         }
                       }
                     });
}

}  // namespace hyp::ad
