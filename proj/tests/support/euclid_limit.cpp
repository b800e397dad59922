#include <algorithm>
#include <chrono>
#include <cmath>

#include "hyp/ball.hpp"
#include "hyp/ball_tensor.hpp"
#include "hyp/generators.hpp"
#include "hyp/graph.hpp"
#include "hyp/layers.hpp"
#include "oracles.hpp"
#include "suites.hpp"

namespace suites {

namespace b = hyp::ball;
namespace bt = hyp::bt;
namespace nn = hyp::nn;
using b::Vec;
using hyp::ad::Tensor;

namespace {

double diff(std::span<const double> a, std::span<const double> x) {
  if (a.size() != x.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - x[i]));
  return m;
}

Tensor random_points(std::size_t rows, std::size_t dim, hyp::Rng& rng, double radius) {
  std::vector<double> v;
  for (std::size_t i = 0; i < rows; ++i) {
    const Vec p = oracle::random_point(dim, rng, 1.0, radius);
    v.insert(v.end(), p.begin(), p.end());
  }
  return Tensor({rows, dim}, std::move(v));
}

Tensor random_tensor(hyp::ad::Shape shape, hyp::Rng& rng, double scale) {
  std::vector<double> v(hyp::ad::numel(shape));
  for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return Tensor(std::move(shape), std::move(v));
}

std::vector<double> matmul_t(const Tensor& x, const Tensor& w) {
  const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(0);
  std::vector<double> y(n * out, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < out; ++o)
      for (std::size_t j = 0; j < in; ++j) y[i * out + o] += w.at(o * in + j) * x.at(i * in + j);
  return y;
}

std::vector<double> naive_max_pool(const Tensor& f, std::size_t k, std::size_t s) {
  const std::size_t bn = f.dim(0), h = f.dim(1), w = f.dim(2), ch = f.dim(3);
  const std::size_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  std::vector<double> out(bn * oh * ow * ch, -INFINITY);
  for (std::size_t n = 0; n < bn; ++n)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x)
        for (std::size_t dy = 0; dy < k; ++dy)
          for (std::size_t dx = 0; dx < k; ++dx)
            for (std::size_t cc = 0; cc < ch; ++cc) {
              double& o = out[((n * oh + y) * ow + x) * ch + cc];
              o = std::max(o, f.at(((n * h + y * s + dy) * w + x * s + dx) * ch + cc));
            }
  return out;
}

std::vector<double> naive_avg_pool(const Tensor& f, std::size_t k, std::size_t s) {
  const std::size_t bn = f.dim(0), h = f.dim(1), w = f.dim(2), ch = f.dim(3);
  const std::size_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  std::vector<double> out(bn * oh * ow * ch, 0.0);
  for (std::size_t n = 0; n < bn; ++n)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x)
        for (std::size_t dy = 0; dy < k; ++dy)
          for (std::size_t dx = 0; dx < k; ++dx)
            for (std::size_t cc = 0; cc < ch; ++cc)
              out[((n * oh + y) * ow + x) * ch + cc] +=
                  f.at(((n * h + y * s + dy) * w + x * s + dx) * ch + cc) / static_cast<double>(k * k);
  return out;
}

Tensor random_field(std::size_t bn, std::size_t h, std::size_t w, std::size_t ch, hyp::Rng& rng,
                    double radius) {
  return hyp::ad::reshape(random_points(bn * h * w, ch, rng, radius), {bn, h, w, ch});
}

}  // namespace

SuiteResult euclidean_limit(std::size_t instances, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult out;
  const double tol = 1e-5;
  const double radius = 0.3;
  Recorder add(out, "ball.mobius_add", tol);
  Recorder scalar(out, "ball.mobius_scalar", tol);
  Recorder dist(out, "ball.distance", tol);
  Recorder gyr(out, "ball.gyration", tol);
  Recorder expmap(out, "ball.exp_map", tol);
  Recorder logmap(out, "ball.log_map", tol);
  Recorder origin_maps(out, "ball.exp0_log0", tol);
  Recorder transport(out, "ball.transport_from_origin", tol);
  Recorder mid(out, "ball.midpoint", tol);
  Recorder matvec(out, "ball.mobius_matvec", tol);
  Recorder pointwise(out, "ball.mobius_pointwise", tol);
  Recorder t_add(out, "tensor.mobius_add", tol);
  Recorder t_scalar(out, "tensor.mobius_scalar", tol);
  Recorder t_matvec(out, "tensor.mobius_matvec", tol);
  Recorder t_dist(out, "tensor.distance", tol);
  Recorder t_mid(out, "tensor.midpoint", tol);
  Recorder linear(out, "layer.hyp_linear", tol);
  Recorder mlr(out, "layer.hyp_mlr", tol);
  Recorder mlr_argmax(out, "layer.hyp_mlr_argmax", 0.0);
  Recorder conv(out, "layer.hyp_conv2d", tol);
  Recorder maxpool(out, "layer.hyp_max_pool", tol);
  Recorder avgpool(out, "layer.hyp_avg_pool", tol);
  Recorder drop_eval(out, "layer.hyp_dropout_eval", tol);
  Recorder drop_train(out, "layer.hyp_dropout_train", tol);
  Recorder gcn_paper(out, "layer.hyp_gcn_conv_paper", tol);
  Recorder gcn_norm(out, "layer.hyp_gcn_conv_normalized", tol);
  Recorder bn(out, "layer.hyp_batch_norm", tol);

  const b::Curvature c(1e-10);
  hyp::Rng rng(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t dim = 2 + i % 7;
    const Vec u = oracle::random_point(dim, rng, 1.0, radius);
    const Vec v = oracle::random_point(dim, rng, 1.0, radius);
    const Vec w = oracle::random_point(dim, rng, 1.0, radius);
    const double r = 2.0 * rng.uniform() - 1.0;

    add.observe(diff(b::mobius_add(u, v, c), b::add(u, v)));
    scalar.observe(diff(b::mobius_scalar(r, u, c), b::scaled(u, r)));
    dist.observe(std::abs(b::distance(u, v, c) - 2.0 * b::norm(b::add(u, b::negated(v)))));
    gyr.observe(diff(b::gyration(u, v, w, c), w));
    expmap.observe(diff(b::exp_map(u, v, c), b::add(u, v)));
    logmap.observe(diff(b::log_map(u, v, c), b::add(v, b::negated(u))));
    origin_maps.observe(std::max(diff(b::exp0(u, c), u), diff(b::log0(u, c), u)));
    transport.observe(diff(b::transport_from_origin(u, v, c), v));
    {
      const std::vector<Vec> pts{u, v, w};
      const std::vector<double> wt{0.5 + rng.uniform(), 0.5 + rng.uniform(), 0.5 + rng.uniform()};
      Vec expect(dim, 0.0);
      const double den = 2.0 * (wt[0] + wt[1] + wt[2]) - 3.0;
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < dim; ++j) expect[j] += wt[k] * pts[k][j] / den;
      mid.observe(diff(b::midpoint(pts, wt, c), expect));
    }
    {
      b::Matrix m{dim, dim, oracle::random_vector(dim * dim, rng, 0.3)};
      matvec.observe(diff(b::mobius_matvec(m, u, c), m.apply(u)));
      Vec su = u;
      for (double& x : su) x = std::sin(x);
      pointwise.observe(diff(b::mobius_pointwise([](double x) { return std::sin(x); }, u, c), su));
    }

    const std::size_t rows = 4;
    const Tensor x = random_points(rows, dim, rng, radius);
    const Tensor y = random_points(rows, dim, rng, radius);
    t_add.observe(diff(bt::mobius_add(x, y, c).data(), (x + y).data()));
    t_scalar.observe(diff(bt::mobius_scalar(Tensor::scalar(r), x, c).data(), (x * r).data()));
    {
      const Tensor dd = bt::distance(x, y, c);
      const Tensor expect = 2.0 * hyp::ad::norm_last(x - y);
      t_dist.observe(diff(dd.data(), expect.data()));
      const Tensor mp = bt::midpoint(x, c);
      t_mid.observe(diff(mp.data(), hyp::ad::mean_axis(x, 0).data()));
    }

    const std::size_t out_dim = 1 + i % 5;
    const Tensor wmat = random_tensor({out_dim, dim}, rng, 0.5);
    t_matvec.observe(diff(bt::mobius_matvec(wmat, x, c).data(), matmul_t(x, wmat)));
    {
      const Tensor bias = random_tensor({out_dim}, rng, 0.3);
      std::vector<double> expect = matmul_t(x, wmat);
      for (std::size_t k = 0; k < expect.size(); ++k) expect[k] += bias.at(k % out_dim);
      linear.observe(diff(nn::hyp_linear(x, wmat, bias, c).data(), expect));
    }
    {
      const std::size_t classes = 2 + i % 4;
      const Tensor p = random_tensor({classes, dim}, rng, 0.1);
      const Tensor a = random_tensor({classes, dim}, rng, 1.0);
      const Tensor logits = nn::hyp_mlr(x, p, a, c);
      double worst = 0.0;
      double argmax_mismatch = 0.0;
      for (std::size_t n = 0; n < rows; ++n) {
        std::size_t best_h = 0, best_e = 0;
        std::vector<double> e(classes);
        for (std::size_t k = 0; k < classes; ++k) {
          for (std::size_t j = 0; j < dim; ++j)
            e[k] += 4.0 * (x.at(n * dim + j) - p.at(k * dim + j)) * a.at(k * dim + j);
          worst = std::max(worst, std::abs(logits.at(n * classes + k) - e[k]));
          if (logits.at(n * classes + k) > logits.at(n * classes + best_h)) best_h = k;
          if (e[k] > e[best_e]) best_e = k;
        }
        if (best_h != best_e) argmax_mismatch = 1.0;
      }
      mlr.observe(worst);
      mlr_argmax.observe(argmax_mismatch);
    }
    {
      const std::size_t ci = 1 + i % 3, co = 1 + (i / 3) % 3, k = 1 + 2 * (i % 2);
      const std::size_t stride = 1 + i % 2, pad = i % 2;
      const Tensor f = random_field(2, 5, 5, ci, rng, radius);
      const Tensor kernel = random_tensor({k, k, ci, co}, rng, 0.4);
      std::vector<double> fin(f.data().begin(), f.data().end());
      std::vector<double> kin(kernel.data().begin(), kernel.data().end());
      conv.observe(diff(nn::hyp_conv2d(f, kernel, stride, pad, c).data(),
                        oracle::naive_conv2d(fin, 2, 5, 5, ci, kin, k, k, co, stride, pad)));
      maxpool.observe(diff(nn::hyp_max_pool(f, 2, stride, c).data(), naive_max_pool(f, 2, stride)));
      avgpool.observe(diff(nn::hyp_avg_pool(f, 2, stride, c).data(), naive_avg_pool(f, 2, stride)));
    }
    {
      hyp::Rng r1(seed + i), r2(seed + i);
      drop_eval.observe(diff(nn::hyp_dropout(x, 0.5, c, nn::Mode::Eval, r1).data(), x.data()));
      drop_train.observe(diff(nn::hyp_dropout(x, 0.3, c, nn::Mode::Train, r1).data(),
                              nn::dropout(x, 0.3, nn::Mode::Train, r2).data()));
    }
    {
      const std::size_t n = 6 + i % 5;
      const auto g = hyp::graphs::generate(hyp::graphs::GraphKind::BA, n, {.m = 2}, seed + i);
      const auto op = nn::GraphOperator::from_graph(g);
      const Tensor h = random_points(n, dim, rng, radius);
      const Tensor alpha = Tensor({1}, {0.5 + 2.0 * rng.uniform()});
      const std::vector<double> m = matmul_t(h, wmat);
      const auto dense = op.coeffs->dense();
      std::vector<double> paper(n * out_dim, 0.0), normalized(n * out_dim, 0.0);
      for (std::size_t row = 0; row < n; ++row) {
        double sum_c = 0.0, den = 0.0;
        for (std::size_t col = 0; col < n; ++col) {
          if (row != col && !g.has_edge(row, col)) continue;
          sum_c += dense[row * n + col];
          den += 2.0 * dense[row * n + col] - 1.0;
        }
        for (std::size_t col = 0; col < n; ++col) {
          const double cw = dense[row * n + col];
          for (std::size_t j = 0; j < out_dim; ++j) {
            paper[row * out_dim + j] += alpha.at(0) / 2.0 * 2.0 * cw * m[col * out_dim + j] / den;
            normalized[row * out_dim + j] += alpha.at(0) * cw / sum_c * m[col * out_dim + j];
          }
        }
      }
      gcn_paper.observe(
          diff(nn::hyp_gcn_conv(h, op, wmat, alpha, c, nn::Aggregation::Paper).data(), paper));
      gcn_norm.observe(
          diff(nn::hyp_gcn_conv(h, op, wmat, alpha, c, nn::Aggregation::Normalized).data(), normalized));
    }
    {
      const std::size_t m = 3 + i % 6;
      const Tensor batch = random_points(m, dim, rng, radius);
      nn::HypBatchNorm layer(dim);
      const Tensor got = layer.forward(batch, c, nn::Mode::Train);
      std::vector<double> mu(dim, 0.0);
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < dim; ++j) mu[j] += batch.at(k * dim + j) / static_cast<double>(m);
      double sigma = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += std::pow(batch.at(k * dim + j) - mu[j], 2);
        sigma += 2.0 * std::sqrt(s) / static_cast<double>(m);
      }
      std::vector<double> expect(m * dim);
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < dim; ++j)
          expect[k * dim + j] = (batch.at(k * dim + j) - mu[j]) / std::sqrt(sigma * sigma + layer.cfg.eps);
      bn.observe(diff(got.data(), expect));
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace suites
