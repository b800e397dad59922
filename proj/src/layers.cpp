#include "hyp/layers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "hyp/ball_tensor.hpp"
#include "hyp/errors.hpp"
#include "hyp/graph.hpp"

namespace hyp::nn {

using ad::Shape;

namespace {

template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};
};

template <std::size_t N>
Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v + b.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v - b.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v * b.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v / b.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) / b.v;
  return r;
}
template <std::size_t N>
Dual<N> operator*(double s, const Dual<N>& a) {
  Dual<N> r{s * a.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator+(double s, const Dual<N>& a) {
  Dual<N> r = a;
  r.v += s;
  return r;
}
template <std::size_t N>
Dual<N> asinh(const Dual<N>& a) {
  const double k = 1.0 / std::sqrt(1.0 + a.v * a.v);
  Dual<N> r{std::asinh(a.v), {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = k * a.d[i];
  return r;
}

// Inputs: <x,p>, <x,a>, |x|^2, |p|^2, <p,a>, |a|. With y = -p, expands
// y ⊕ x through inner products so no (N x K x d) tensor is formed.
using D6 = Dual<6>;

D6 mlr_logit(const std::array<double, 6>& in, Curvature c) {
  std::array<D6, 6> v;
  for (std::size_t i = 0; i < 6; ++i) {
    v[i].v = in[i];
    v[i].d[i] = 1.0;
  }
  const auto& [xp, xa, x2, p2, pa, an] = v;
  const double k = c.value();
  const D6 a = 1.0 + (-2.0 * k) * xp + k * x2;
  const D6 b = 1.0 + (-k) * p2;
  const D6 den = 1.0 + (-2.0 * k) * xp + (k * k) * (p2 * x2);
  const D6 za = (b * xa - a * pa) / den;
  const D6 lambda = D6{2.0, {}} / b;
  if (c.euclidean()) return 2.0 * (lambda * za);
  const D6 z2 = (a * a * p2 + (-2.0) * (a * b * xp) + b * b * x2) / (den * den);
  D6 room = 1.0 + (-k) * z2;
  if (room.v < ball::kBallEps) room = D6{ball::kBallEps, {}};
  return (1.0 / c.sqrt()) * (lambda * an * asinh((2.0 * c.sqrt()) * za / (room * an)));
}

Tensor mlr_kernel(const Tensor& xp, const Tensor& xa, const Tensor& x2, const Tensor& p2,
                  const Tensor& pa, const Tensor& an, Curvature c) {
  const std::size_t n = xp.dim(0);
  const std::size_t k = xp.dim(1);
  std::array<std::shared_ptr<ad::Node>, 6> nodes{xp.node(), xa.node(), x2.node(),
                                                  p2.node(), pa.node(), an.node()};
  auto gather = [nodes, k](std::size_t i, std::size_t j) {
    return std::array<double, 6>{nodes[0]->value[i * k + j], nodes[1]->value[i * k + j],
                                 nodes[2]->value[i],         nodes[3]->value[j],
                                 nodes[4]->value[j],         nodes[5]->value[j]};
  };
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = mlr_logit(gather(i, j), c).v;
  }
  return ad::make_result({n, k}, std::move(out), {xp, xa, x2, p2, pa, an},
                         [nodes, gather, c, n, k](const std::vector<double>& g) {
                           std::array<std::vector<double>*, 6> grads{};
                           for (std::size_t t = 0; t < 6; ++t) {
                             if (nodes[t]->requires_grad) grads[t] = &nodes[t]->grad_buffer();
                           }
                           for (std::size_t i = 0; i < n; ++i) {
                             for (std::size_t j = 0; j < k; ++j) {
                               const D6 r = mlr_logit(gather(i, j), c);
                               const double gij = g[i * k + j];
                               const std::array<std::size_t, 6> at{i * k + j, i * k + j, i, j, j, j};
                               for (std::size_t t = 0; t < 6; ++t) {
                                 if (grads[t]) (*grads[t])[at[t]] += gij * r.d[t];
                               }
                             }
                           }
                         });
}

void require_matrix(const Tensor& t, const char* op, const char* what) {
  if (t.rank() != 2) {
    throw UsageError(std::string(op) + ": " + what + " must be a matrix, got " +
                     ad::shape_string(t.shape()));
  }
}

Tensor check_denominator(const Tensor& den) {
  double worst = std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (double v : den.data()) {
    if (std::abs(v) < worst) {
      worst = std::abs(v);
      value = v;
    }
  }
  if (worst < ball::kDenEps) throw DegenerateMidpoint(value);
  return den;
}

Parameter make_param(const std::string& name, Tensor value) {
  return Parameter(name, Tensor(value.shape(), std::vector<double>(value.data().begin(), value.data().end()), true));
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "none") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  throw UsageError("unknown activation '" + name + "'");
}

Tensor activate(const Tensor& x, Activation f) {
  switch (f) {
    case Activation::Identity: return x;
    case Activation::ReLU: return ad::relu(x);
    case Activation::Tanh: return ad::tanh(x);
  }
  return x;
}

Tensor glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(ad::numel(shape));
  for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * a;
  return Tensor(shape, std::move(v));
}

Tensor hyp_linear(const Tensor& x, const Tensor& w, const Tensor& b, Curvature c) {
  require_matrix(x, "hyp_linear", "input");
  require_matrix(w, "hyp_linear", "weight");
  Tensor y = bt::mobius_matvec(w, x, c);
  if (!b.defined()) return y;
  if (b.size() != w.dim(0)) throw UsageError("hyp_linear: bias size mismatch");
  return bt::mobius_add(y, bt::exp0(ad::reshape(b, {1, w.dim(0)}), c), c);
}

Tensor hyp_mlr(const Tensor& x, const Tensor& p_raw, const Tensor& a_raw, Curvature c,
               std::size_t* clamp_count) {
  require_matrix(x, "hyp_mlr", "input");
  require_matrix(p_raw, "hyp_mlr", "offsets");
  require_matrix(a_raw, "hyp_mlr", "normals");
  const std::size_t k = p_raw.dim(0);
  const std::size_t d = x.dim(1);
  if (k < 2) throw UsageError("hyp_mlr: need at least two classes");
  if (p_raw.dim(1) != d || a_raw.shape() != p_raw.shape()) {
    throw UsageError("hyp_mlr: parameter shapes " + ad::shape_string(p_raw.shape()) + ", " +
                     ad::shape_string(a_raw.shape()) + " do not match input dim " +
                     std::to_string(d));
  }

  Tensor normals = a_raw;
  std::vector<double> keep(k, 1.0);
  std::vector<double> fill(k * d, 0.0);
  bool clamped = false;
  for (std::size_t r = 0; r < k; ++r) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) n2 += a_raw.at(r * d + j) * a_raw.at(r * d + j);
    const double n = std::sqrt(n2);
    if (n >= ball::kZeroEps) continue;
    clamped = true;
    keep[r] = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      fill[r * d + j] = n > 0.0 ? a_raw.at(r * d + j) * ball::kZeroEps / n : (j == 0 ? ball::kZeroEps : 0.0);
    }
    if (clamp_count) ++*clamp_count;
  }
  if (clamped) normals = a_raw * Tensor({k, 1}, keep) + Tensor({k, d}, fill);

  const Tensor p = bt::exp0(p_raw, c);
  const Tensor p2 = bt::sq_norm(p);
  const Tensor a = (1.0 - c.value() * p2) * normals;
  const Tensor an = ad::norm_last(a);
  const Tensor pa = ad::sum_last(p * a);
  return mlr_kernel(ad::matmul(x, ad::transpose(p)), ad::matmul(x, ad::transpose(a)),
                    bt::sq_norm(x), ad::transpose(p2), ad::transpose(pa), ad::transpose(an), c);
}

Tensor hyp_conv2d(const Tensor& f, const Tensor& kernel, std::size_t stride, std::size_t padding,
                  Curvature c) {
  return bt::exp0(ad::conv2d(bt::log0(f, c), kernel, stride, padding), c);
}

Tensor hyp_avg_pool(const Tensor& f, std::size_t window, std::size_t stride, Curvature c) {
  if (f.rank() != 4) throw UsageError("hyp_avg_pool: expected an NHWC field");
  const Tensor w = 2.0 * bt::lorentz_sq(f, c);
  const Tensor num = ad::sum_pool2d(w * f, window, stride);
  const Tensor den = check_denominator(ad::sum_pool2d(w, window, stride) -
                                       static_cast<double>(window * window));
  return bt::mobius_scalar(Tensor::scalar(0.5), bt::project(num / den, c), c);
}

Tensor hyp_max_pool(const Tensor& f, std::size_t window, std::size_t stride, Curvature c) {
  return bt::exp0(ad::max_pool2d(bt::log0(f, c), window, stride), c);
}

Tensor dropout(const Tensor& x, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError("dropout: p must lie in [0, 1)");
  if (mode == Mode::Eval || p == 0.0) return x;
  std::vector<double> mask(x.size());
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.bernoulli(p) ? 0.0 : keep;
  return x * Tensor(x.shape(), std::move(mask));
}

Tensor hyp_dropout(const Tensor& x, double p, Curvature c, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError("hyp_dropout: p must lie in [0, 1)");
  if (mode == Mode::Eval || p == 0.0) return x;
  return bt::exp0(dropout(bt::log0(x, c), p, mode, rng), c);
}

GraphOperator GraphOperator::from_graph(const graphs::Graph& g) {
  auto coeffs = std::make_shared<SparseMatrix>(graphs::sym_norm_coeffs(g));
  auto normalized = std::make_shared<SparseMatrix>(*coeffs);
  std::vector<double> sizes(g.num_nodes());
  for (std::size_t r = 0; r < normalized->rows; ++r) {
    double s = 0.0;
    for (std::size_t p = normalized->row_ptr[r]; p < normalized->row_ptr[r + 1]; ++p) s += normalized->values[p];
    for (std::size_t p = normalized->row_ptr[r]; p < normalized->row_ptr[r + 1]; ++p) normalized->values[p] /= s;
    sizes[r] = static_cast<double>(g.degree(r) + 1);
  }
  GraphOperator op;
  op.coeffs = std::move(coeffs);
  op.row_normalized = std::move(normalized);
  op.neighborhood_size = Tensor({g.num_nodes(), 1}, std::move(sizes));
  return op;
}

Tensor gcn_conv(const Tensor& x, const GraphOperator& op, const Tensor& w, const Tensor& b) {
  require_matrix(x, "gcn_conv", "input");
  if (x.dim(0) != op.num_nodes()) throw UsageError("gcn_conv: feature rows do not match node count");
  Tensor y = ad::spmm(op.coeffs, ad::matmul(x, ad::transpose(w)));
  return b.defined() ? y + b : y;
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "paper") return Aggregation::Paper;
  if (name == "normalized") return Aggregation::Normalized;
  throw UsageError("unknown aggregation mode '" + name + "' (expected paper or normalized)");
}

Tensor hyp_gcn_conv(const Tensor& h, const GraphOperator& op, const Tensor& w,
                    const Tensor& alpha, Curvature c, Aggregation mode, Activation f) {
  require_matrix(h, "hyp_gcn_conv", "input");
  if (h.dim(0) != op.num_nodes()) throw UsageError("hyp_gcn_conv: feature rows do not match node count");
  const Tensor m = bt::mobius_matvec(w, h, c);
  const Tensor g2 = bt::lorentz_sq(m, c);
  const auto& s = mode == Aggregation::Paper ? op.coeffs : op.row_normalized;
  const Tensor num = ad::spmm(s, (2.0 * g2) * m);
  const Tensor den = mode == Aggregation::Paper ? 2.0 * ad::spmm(s, g2) - op.neighborhood_size
                                                : 2.0 * ad::spmm(s, g2) - 1.0;
  check_denominator(den);
  Tensor out = bt::mobius_scalar(0.5 * alpha, bt::project(num / den, c), c);
  if (f != Activation::Identity) out = bt::exp0(activate(bt::log0(out, c), f), c);
  return out;
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias)
    : weight(make_param("weight", glorot({out, in}, in, out, rng))) {
  if (with_bias) bias = Parameter("bias", Tensor::zeros({out}, true));
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = ad::matmul(x, ad::transpose(weight.value));
  return bias.value.defined() ? y + bias.value : y;
}

std::vector<Parameter*> Linear::parameters() {
  std::vector<Parameter*> out{&weight};
  if (bias.value.defined()) out.push_back(&bias);
  return out;
}

HypLinear::HypLinear(std::size_t in, std::size_t out, Rng& rng)
    : weight(make_param("weight", glorot({out, in}, in, out, rng))),
      bias("bias", Tensor::zeros({out}, true)) {}

Tensor HypLinear::forward(const Tensor& x, Curvature c) const {
  return hyp_linear(x, weight.value, bias.value, c);
}

std::vector<Parameter*> HypLinear::parameters() { return {&weight, &bias}; }

HypMLR::HypMLR(std::size_t dim, std::size_t classes, Rng& rng)
    : offsets("offsets", Tensor::zeros({classes, dim}, true)),
      normals(make_param("normals", glorot({classes, dim}, dim, classes, rng))) {}

Tensor HypMLR::forward(const Tensor& x, Curvature c) {
  return hyp_mlr(x, offsets.value, normals.value, c, &clamp_count);
}

std::vector<Parameter*> HypMLR::parameters() { return {&offsets, &normals}; }

GCNConv::GCNConv(std::size_t in, std::size_t out, Rng& rng)
    : weight(make_param("weight", glorot({out, in}, in, out, rng))),
      bias("bias", Tensor::zeros({out}, true)) {}

Tensor GCNConv::forward(const Tensor& x, const GraphOperator& op) const {
  return gcn_conv(x, op, weight.value, bias.value);
}

std::vector<Parameter*> GCNConv::parameters() { return {&weight, &bias}; }

HypGCNConv::HypGCNConv(std::size_t in, std::size_t out, Rng& rng, Aggregation mode_,
                       Activation f)
    : weight(make_param("weight", glorot({out, in}, in, out, rng))),
      alpha("alpha", Tensor::full({1}, 1.0, true)),
      mode(mode_),
      activation(f) {}

Tensor HypGCNConv::forward(const Tensor& h, const GraphOperator& op, Curvature c) const {
  return hyp_gcn_conv(h, op, weight.value, alpha.value, c, mode, activation);
}

std::vector<Parameter*> HypGCNConv::parameters() { return {&weight, &alpha}; }

HypConv2d::HypConv2d(std::size_t in_channels, std::size_t out_channels, std::size_t k, Rng& rng,
                     std::size_t stride_, std::size_t padding_)
    : kernel(make_param("kernel", glorot({k, k, in_channels, out_channels}, k * k * in_channels,
                                         k * k * out_channels, rng))),
      stride(stride_),
      padding(padding_) {}

Tensor HypConv2d::forward(const Tensor& f, Curvature c) const {
  return hyp_conv2d(f, kernel.value, stride, padding, c);
}

std::vector<Parameter*> HypConv2d::parameters() { return {&kernel}; }

HypBatchNorm::HypBatchNorm(std::size_t dim, BatchNormConfig cfg_)
    : log_gamma("log_gamma", Tensor::zeros({1}, true)),
      beta("beta", Tensor::zeros({dim}, true)),
      running_mean(dim, 0.0),
      cfg(cfg_) {}

Tensor HypBatchNorm::forward(const Tensor& x, Curvature c, Mode mode) {
  const std::size_t d = running_mean.size();
  if (x.rank() == 0 || x.shape().back() != d) throw UsageError("hyp_batch_norm: channel mismatch");
  const std::size_t m = x.size() / d;
  if (m == 0) throw UsageError("hyp_batch_norm: empty batch");
  const Tensor flat = ad::reshape(x, {m, d});

  Tensor mu;
  if (mode == Mode::Train) {
    mu = bt::midpoint(flat, c);
  } else {
    mu = bt::exp0(Tensor({1, d}, running_mean), c);
  }
  const Tensor z = cfg.centering == Centering::FromMean ? bt::mobius_add(-mu, flat, c)
                                                        : bt::mobius_add(-flat, mu, c);
  Tensor sigma;
  if (mode == Mode::Train) {
    const Tensor n = ad::norm_last(z);
    const Tensor dist = c.euclidean() ? 2.0 * n : (2.0 / c.sqrt()) * ad::artanh(c.sqrt() * n);
    sigma = cfg.dispersion == Dispersion::MeanDistance ? ad::mean(dist)
                                                       : ad::sqrt(ad::mean(ad::square(dist)));
    const Tensor mu_tangent = [&] {
      ad::NoRecordScope quiet;
      return bt::log0(mu, c);
    }();
    for (std::size_t j = 0; j < d; ++j) {
      running_mean[j] = (1.0 - cfg.momentum) * running_mean[j] + cfg.momentum * mu_tangent.at(j);
    }
    running_sigma = (1.0 - cfg.momentum) * running_sigma + cfg.momentum * sigma.item();
  } else {
    sigma = Tensor::scalar(running_sigma);
  }
  const Tensor scale = ad::exp(log_gamma.value) / ad::sqrt(ad::square(sigma) + cfg.eps);
  Tensor y = bt::mobius_scalar(scale, z, c);
  y = bt::mobius_add(y, bt::exp0(ad::reshape(beta.value, {1, d}), c), c);
  return ad::reshape(y, x.shape());
}

std::vector<Parameter*> HypBatchNorm::parameters() { return {&log_gamma, &beta}; }

EuclidBatchNorm::EuclidBatchNorm(std::size_t dim, double momentum_, double eps_)
    : gamma("gamma", Tensor::full({dim}, 1.0, true)),
      beta("beta", Tensor::zeros({dim}, true)),
      running_mean(dim, 0.0),
      running_var(dim, 1.0),
      momentum(momentum_),
      eps(eps_) {}

Tensor EuclidBatchNorm::forward(const Tensor& x, Mode mode) {
  const std::size_t d = running_mean.size();
  if (x.rank() == 0 || x.shape().back() != d) throw UsageError("euclid_batch_norm: channel mismatch");
  const std::size_t m = x.size() / d;
  if (m == 0) throw UsageError("euclid_batch_norm: empty batch");
  const Tensor flat = ad::reshape(x, {m, d});
  Tensor mu;
  Tensor var;
  if (mode == Mode::Train) {
    mu = ad::mean_axis(flat, 0);
    var = ad::mean_axis(ad::square(flat - mu), 0);
    for (std::size_t j = 0; j < d; ++j) {
      running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mu.at(j);
      running_var[j] = (1.0 - momentum) * running_var[j] + momentum * var.at(j);
    }
  } else {
    mu = Tensor({1, d}, running_mean);
    var = Tensor({1, d}, running_var);
  }
  const Tensor y = (flat - mu) / ad::sqrt(var + eps) * gamma.value + beta.value;
  return ad::reshape(y, x.shape());
}

std::vector<Parameter*> EuclidBatchNorm::parameters() { return {&gamma, &beta}; }

Tensor featurize_euclidean(const std::vector<double>& x, std::size_t rows, std::size_t cols) {
  if (x.size() != rows * cols) throw UsageError("featurize: size mismatch");
  std::vector<double> out = x;
  for (std::size_t j = 0; j < cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mean += x[i * cols + j];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t i = 0; i < rows; ++i) var += (x[i * cols + j] - mean) * (x[i * cols + j] - mean);
    const double sd = std::sqrt(var / static_cast<double>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
      out[i * cols + j] = sd > 0.0 ? (x[i * cols + j] - mean) / sd : 0.0;
    }
  }
  return Tensor({rows, cols}, std::move(out));
}

Tensor featurize_hyperbolic(const std::vector<double>& x, std::size_t rows, std::size_t cols,
                            Curvature c) {
  ad::NoRecordScope quiet;
  Tensor t = featurize_euclidean(x, rows, cols);
  if (!c.euclidean()) {
    double max_norm = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += t.at(i * cols + j) * t.at(i * cols + j);
      max_norm = std::max(max_norm, std::sqrt(s));
    }
    if (max_norm > 0.0) t = t * (0.9 / (c.sqrt() * max_norm));
  }
  return bt::exp0(t, c);
}

}  // namespace hyp::nn
