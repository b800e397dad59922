#include "hyp/ball_tensor.hpp"

#include <algorithm>
#include <cmath>

#include "hyp/errors.hpp"

namespace hyp::bt {

using ad::Node;
using ad::Shape;

namespace {

constexpr double kArtanhBound = 1.0 - ball::kBallEps;

struct RowLayout {
  std::size_t count;
  std::size_t dim;
};

RowLayout rows_of(const Tensor& x, const char* op) {
  if (x.rank() == 0) throw UsageError(std::string(op) + ": scalar input");
  const std::size_t d = x.shape().back();
  return {d == 0 ? 0 : x.size() / d, d};
}

double row_dot(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += a[j] * b[j];
  return s;
}

void require_finite(const double* y, std::size_t d, const char* op) {
  for (std::size_t j = 0; j < d; ++j) {
    if (!std::isfinite(y[j])) throw NumericalError(std::string(op) + ": non-finite value");
  }
}

// Scales y into the ball when needed; returns the factor applied.
double clip_row(double* y, std::size_t d, Curvature c) {
  if (c.euclidean()) return 1.0;
  const double n = std::sqrt(row_dot(y, y, d));
  const double max_norm = (1.0 - ball::kBallEps) / c.sqrt();
  if (n < max_norm) return 1.0;
  const double r = max_norm / n;
  for (std::size_t j = 0; j < d; ++j) y[j] *= r;
  return r;
}

// Pulls g back through y = r * y_pre with r = max_norm / |y_pre|.
void clip_backward(const double* y_pre, double* g, std::size_t d, double r) {
  if (r == 1.0) return;
  const double n2 = row_dot(y_pre, y_pre, d);
  const double gy = row_dot(g, y_pre, d);
  for (std::size_t j = 0; j < d; ++j) g[j] = r * (g[j] - gy * y_pre[j] / n2);
}

// exp0 and log0 are v -> f(|v|) v; the Jacobian is f I + k v v^T.
struct RadialCoef {
  double f;
  double k;
};

RadialCoef exp0_coef(double n, double s) {
  const double x = s * n;
  if (x < 1e-3) return {1.0 - x * x / 3.0, s * s * (-2.0 / 3.0 + 8.0 * x * x / 15.0)};
  const double t = std::tanh(x);
  const double f = t / x;
  return {f, (1.0 - t * t - f) / (n * n)};
}

RadialCoef log0_coef(double n, double s) {
  const double x = s * n;
  if (x < 1e-3) return {1.0 + x * x / 3.0, s * s * (2.0 / 3.0 + 4.0 * x * x / 5.0)};
  if (x > kArtanhBound) {
    const double f = std::atanh(kArtanhBound) / x;
    return {f, -f / (n * n)};
  }
  const double f = std::atanh(x) / x;
  return {f, (1.0 / (1.0 - x * x) - f) / (n * n)};
}

template <typename CoefFn>
Tensor radial(const Tensor& v, Curvature c, CoefFn coef, bool clip, const char* op) {
  const auto [count, d] = rows_of(v, op);
  const auto& vn = v.node();
  const double s = c.sqrt();
  std::vector<double> out(vn->value.size());
  for (std::size_t r = 0; r < count; ++r) {
    const double* x = &vn->value[r * d];
    double* y = &out[r * d];
    const RadialCoef k = coef(std::sqrt(row_dot(x, x, d)), s);
    for (std::size_t j = 0; j < d; ++j) y[j] = k.f * x[j];
    require_finite(y, d, op);
    if (clip) clip_row(y, d, c);
  }
  return ad::make_result(vn->shape, std::move(out), {v},
                         [vn, c, coef, clip, count, d](const std::vector<double>& g) {
                           if (!vn->requires_grad) return;
                           auto& gx = vn->grad_buffer();
                           const double s = c.sqrt();
                           std::vector<double> gr(d);
                           std::vector<double> y(d);
                           for (std::size_t r = 0; r < count; ++r) {
                             const double* x = &vn->value[r * d];
                             const RadialCoef k = coef(std::sqrt(row_dot(x, x, d)), s);
                             for (std::size_t j = 0; j < d; ++j) {
                               gr[j] = g[r * d + j];
                               y[j] = k.f * x[j];
                             }
                             if (clip) {
                               std::vector<double> yc = y;
                               clip_backward(y.data(), gr.data(), d, clip_row(yc.data(), d, c));
                             }
                             const double gv = k.k * row_dot(gr.data(), x, d);
                             for (std::size_t j = 0; j < d; ++j) {
                               gx[r * d + j] += k.f * gr[j] + gv * x[j];
                             }
                           }
                         });
}

}  // namespace

Tensor project(const Tensor& x, Curvature c) {
  const auto [count, d] = rows_of(x, "project");
  const auto& xn = x.node();
  std::vector<double> out = xn->value;
  std::vector<double> scale(count, 1.0);
  for (std::size_t r = 0; r < count; ++r) {
    require_finite(&out[r * d], d, "project");
    scale[r] = clip_row(&out[r * d], d, c);
  }
  return ad::make_result(xn->shape, std::move(out), {x},
                         [xn, scale, count, d](const std::vector<double>& g) {
                           if (!xn->requires_grad) return;
                           auto& gx = xn->grad_buffer();
                           std::vector<double> gr(d);
                           for (std::size_t r = 0; r < count; ++r) {
                             for (std::size_t j = 0; j < d; ++j) gr[j] = g[r * d + j];
                             clip_backward(&xn->value[r * d], gr.data(), d, scale[r]);
                             for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += gr[j];
                           }
                         });
}

Tensor exp0(const Tensor& v, Curvature c) { return radial(v, c, exp0_coef, true, "exp0"); }

Tensor log0(const Tensor& x, Curvature c) { return radial(x, c, log0_coef, false, "log0"); }

Tensor mobius_add(const Tensor& x, const Tensor& y, Curvature c) {
  const auto [xcount, d] = rows_of(x, "mobius_add");
  const auto [ycount, yd] = rows_of(y, "mobius_add");
  if (yd != d || (xcount != ycount && xcount != 1 && ycount != 1)) {
    throw UsageError("mobius_add: shapes " + ad::shape_string(x.shape()) + " and " +
                     ad::shape_string(y.shape()) + " do not match");
  }
  const std::size_t count = std::max(xcount, ycount);
  const std::size_t xstep = xcount == 1 ? 0 : d;
  const std::size_t ystep = ycount == 1 ? 0 : d;
  const auto& xn = x.node();
  const auto& yn = y.node();
  const double k = c.value();
  std::vector<double> out(count * d);
  for (std::size_t r = 0; r < count; ++r) {
    const double* u = &xn->value[r * xstep];
    const double* v = &yn->value[r * ystep];
    const double uv = row_dot(u, v, d);
    const double u2 = row_dot(u, u, d);
    const double v2 = row_dot(v, v, d);
    const double a = 1.0 + 2.0 * k * uv + k * v2;
    const double b = 1.0 - k * u2;
    const double den = 1.0 + 2.0 * k * uv + k * k * u2 * v2;
    double* o = &out[r * d];
    for (std::size_t j = 0; j < d; ++j) o[j] = (a * u[j] + b * v[j]) / den;
    require_finite(o, d, "mobius_add");
    clip_row(o, d, c);
  }
  Shape shape = xcount >= ycount ? xn->shape : yn->shape;
  return ad::make_result(
      std::move(shape), std::move(out), {x, y},
      [xn, yn, c, k, count, d, xstep, ystep](const std::vector<double>& g) {
        std::vector<double>* gx = xn->requires_grad ? &xn->grad_buffer() : nullptr;
        std::vector<double>* gy = yn->requires_grad ? &yn->grad_buffer() : nullptr;
        std::vector<double> gr(d);
        std::vector<double> o(d);
        for (std::size_t r = 0; r < count; ++r) {
          const double* u = &xn->value[r * xstep];
          const double* v = &yn->value[r * ystep];
          const double uv = row_dot(u, v, d);
          const double u2 = row_dot(u, u, d);
          const double v2 = row_dot(v, v, d);
          const double a = 1.0 + 2.0 * k * uv + k * v2;
          const double b = 1.0 - k * u2;
          const double den = 1.0 + 2.0 * k * uv + k * k * u2 * v2;
          for (std::size_t j = 0; j < d; ++j) {
            o[j] = (a * u[j] + b * v[j]) / den;
            gr[j] = g[r * d + j];
          }
          std::vector<double> oc = o;
          clip_backward(o.data(), gr.data(), d, clip_row(oc.data(), d, c));
          const double gu = row_dot(gr.data(), u, d);
          const double gv = row_dot(gr.data(), v, d);
          // (g . numerator) / den^2 with numerator = a u + b v.
          const double gn = row_dot(gr.data(), o.data(), d) / den;
          if (gx) {
            double* dst = &(*gx)[r * xstep];
            for (std::size_t j = 0; j < d; ++j) {
              dst[j] += (a * gr[j] + 2.0 * k * gu * v[j] - 2.0 * k * gv * u[j]) / den -
                        gn * (2.0 * k * v[j] + 2.0 * k * k * v2 * u[j]);
            }
          }
          if (gy) {
            double* dst = &(*gy)[r * ystep];
            for (std::size_t j = 0; j < d; ++j) {
              dst[j] += (2.0 * k * gu * (u[j] + v[j]) + b * gr[j]) / den -
                        gn * (2.0 * k * u[j] + 2.0 * k * k * u2 * v[j]);
            }
          }
        }
      });
}

Tensor mobius_scalar(const Tensor& r, const Tensor& x, Curvature c) {
  return exp0(r * log0(x, c), c);
}

Tensor mobius_matvec(const Tensor& w, const Tensor& x, Curvature c) {
  if (w.rank() != 2 || x.rank() != 2 || w.dim(1) != x.dim(1)) {
    throw UsageError("mobius_matvec: weight " + ad::shape_string(w.shape()) + " vs input " +
                     ad::shape_string(x.shape()));
  }
  return exp0(ad::matmul(log0(x, c), ad::transpose(w)), c);
}

Tensor lorentz_sq(const Tensor& x, Curvature c) {
  const auto [count, d] = rows_of(x, "lorentz_sq");
  const auto& xn = x.node();
  const double k = c.value();
  Shape shape = xn->shape;
  shape.back() = 1;
  std::vector<double> out(count);
  for (std::size_t r = 0; r < count; ++r) {
    const double* p = &xn->value[r * d];
    out[r] = 1.0 / (1.0 - k * row_dot(p, p, d));
  }
  auto result = ad::make_result(std::move(shape), std::move(out), {x}, nullptr);
  if (!result.requires_grad()) return result;
  std::weak_ptr<Node> out_weak = result.node();
  ad::active_tape()->record({xn}, result.node(),
                            [xn, out_weak, k, count, d](const std::vector<double>& g) {
                              if (!xn->requires_grad) return;
                              auto& gx = xn->grad_buffer();
                              auto on = out_weak.lock();
                              for (std::size_t r = 0; r < count; ++r) {
                                const double g2 = on->value[r];
                                const double s = g[r] * 2.0 * k * g2 * g2;
                                for (std::size_t j = 0; j < d; ++j) {
                                  gx[r * d + j] += s * xn->value[r * d + j];
                                }
                              }
                            });
  return result;
}

Tensor sq_norm(const Tensor& x) { return ad::sum_last(ad::square(x)); }

Tensor distance(const Tensor& x, const Tensor& y, Curvature c) {
  const Tensor n = ad::norm_last(mobius_add(-x, y, c));
  if (c.euclidean()) return 2.0 * n;
  return (2.0 / c.sqrt()) * ad::artanh(c.sqrt() * n);
}

Tensor midpoint(const Tensor& x, const Tensor& weights, Curvature c) {
  if (x.rank() != 2 || x.dim(0) == 0) throw UsageError("midpoint: expected a non-empty (m x d) tensor");
  const double m = static_cast<double>(x.dim(0));
  Tensor w2 = 2.0 * lorentz_sq(x, c);
  if (weights.defined()) {
    if (weights.shape() != Shape{x.dim(0), 1}) throw UsageError("midpoint: weights must be (m x 1)");
    w2 = w2 * weights;
  }
  const Tensor num = ad::sum_axis(w2 * x, 0);
  const Tensor den = ad::sum_axis(w2, 0) - m;
  if (std::abs(den.item()) < ball::kDenEps) throw DegenerateMidpoint(den.item());
  return mobius_scalar(Tensor::scalar(0.5), project(num / den, c), c);
}

Tensor midpoint(const Tensor& x, Curvature c) { return midpoint(x, Tensor(), c); }

}  // namespace hyp::bt
