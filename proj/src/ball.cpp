#include "hyp/ball.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyp/errors.hpp"

namespace hyp::ball {

namespace {

void require_same_dim(VecView a, VecView b, const char* op) {
  if (a.size() != b.size()) {
    throw UsageError(std::string(op) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

Curvature::Curvature(double c) : c_(c), sqrt_c_(std::sqrt(c)) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw UsageError("curvature must be finite and non-negative, got " + std::to_string(c));
  }
}

double dot(VecView a, VecView b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sq_norm(VecView a) { return dot(a, a); }
double norm(VecView a) { return std::sqrt(sq_norm(a)); }

Vec scaled(VecView a, double r) {
  Vec out(a.begin(), a.end());
  for (double& v : out) v *= r;
  return out;
}

Vec add(VecView a, VecView b) {
  require_same_dim(a, b, "add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec negated(VecView a) { return scaled(a, -1.0); }

double tanh_ratio(double s) {
  if (std::abs(s) < 1e-8) return 1.0 - s * s / 3.0;
  return std::tanh(s) / s;
}

double artanh_ratio(double s) {
  if (std::abs(s) < 1e-8) return 1.0 + s * s / 3.0;
  const double clamped = std::clamp(s, -1.0 + kBallEps, 1.0 - kBallEps);
  return std::atanh(clamped) / s;
}

double conformal_factor(VecView x, Curvature c) { return 2.0 / (1.0 - c.value() * sq_norm(x)); }

double lorentz_factor(VecView x, Curvature c) {
  return 1.0 / std::sqrt(1.0 - c.value() * sq_norm(x));
}

Vec project(VecView x, Curvature c, double eps) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericalError("project: non-finite coordinate");
  }
  Vec out(x.begin(), x.end());
  if (c.euclidean()) return out;
  const double n = norm(x);
  const double max_norm = (1.0 - eps) / c.sqrt();
  if (n >= max_norm) {
    const double r = max_norm / n;
    for (double& v : out) v *= r;
  }
  return out;
}

bool in_ball(VecView x, Curvature c) { return c.value() * sq_norm(x) < 1.0; }

Vec mobius_add(VecView u, VecView v, Curvature c) {
  require_same_dim(u, v, "mobius_add");
  const double k = c.value();
  const double uv = dot(u, v);
  const double u2 = sq_norm(u);
  const double v2 = sq_norm(v);
  const double a = 1.0 + 2.0 * k * uv + k * v2;
  const double b = 1.0 - k * u2;
  const double den = 1.0 + 2.0 * k * uv + k * k * u2 * v2;
  Vec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = (a * u[i] + b * v[i]) / den;
  return project(out, c);
}

Vec mobius_scalar(double r, VecView u, Curvature c) {
  const double n = norm(u);
  if (r == 0.0 || n < kZeroEps) return Vec(u.size(), 0.0);
  const double s = c.sqrt() * n;
  const double ar = artanh_ratio(s);
  const double factor = r * ar * tanh_ratio(r * s * ar);
  return project(scaled(u, factor), c);
}

Vec gyration(VecView a, VecView b, VecView x, Curvature c) {
  require_same_dim(a, b, "gyration");
  require_same_dim(a, x, "gyration");
  const double k = c.value();
  const double aa = sq_norm(a), bb = sq_norm(b), ab = dot(a, b), ax = dot(a, x), bx = dot(b, x);
  const double ca = -k * k * ax * bb + k * bx + 2.0 * k * k * ab * bx;
  const double cb = -k * k * bx * aa - k * ax;
  const double den = 1.0 + 2.0 * k * ab + k * k * aa * bb;
  Vec out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += 2.0 * (ca * a[i] + cb * b[i]) / den;
  return out;
}

double distance(VecView u, VecView v, Curvature c) {
  require_same_dim(u, v, "distance");
  const Vec z = mobius_add(negated(u), v, c);
  const double n = norm(z);
  return 2.0 * n * artanh_ratio(c.sqrt() * n);
}

Vec exp0(VecView v, Curvature c) {
  const double n = norm(v);
  if (n < kZeroEps) return Vec(v.size(), 0.0);
  return project(scaled(v, tanh_ratio(c.sqrt() * n)), c);
}

Vec log0(VecView x, Curvature c) {
  const double n = norm(x);
  if (n < kZeroEps) return Vec(x.size(), 0.0);
  return scaled(x, artanh_ratio(c.sqrt() * n));
}

Vec exp_map(VecView base, VecView v, Curvature c) {
  require_same_dim(base, v, "exp_map");
  const double n = norm(v);
  if (n < kZeroEps) return Vec(base.begin(), base.end());
  if (norm(base) < kZeroEps) return exp0(v, c);
  const double lambda = conformal_factor(base, c);
  const double half = 0.5 * lambda;
  const Vec step = scaled(v, half * tanh_ratio(c.sqrt() * half * n));
  return mobius_add(base, step, c);
}

Vec log_map(VecView base, VecView x, Curvature c) {
  require_same_dim(base, x, "log_map");
  if (norm(base) < kZeroEps) return log0(x, c);
  const Vec z = mobius_add(negated(base), x, c);
  const double n = norm(z);
  if (2.0 * n * artanh_ratio(c.sqrt() * n) < kZeroEps) return Vec(x.size(), 0.0);
  const double lambda = conformal_factor(base, c);
  return scaled(z, 2.0 / lambda * artanh_ratio(c.sqrt() * n));
}

Vec transport_from_origin(VecView u, VecView v, Curvature c) {
  require_same_dim(u, v, "transport_from_origin");
  return scaled(v, 1.0 - c.value() * sq_norm(u));
}

Vec midpoint(std::span<const Vec> points, std::span<const double> weights, Curvature c) {
  if (points.empty()) throw UsageError("midpoint: no points");
  if (points.size() != weights.size()) throw UsageError("midpoint: weight count mismatch");
  const std::size_t dim = points.front().size();
  Vec num(dim, 0.0);
  double den = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) throw UsageError("midpoint: dimension mismatch");
    const double g2 = 1.0 / (1.0 - c.value() * sq_norm(points[i]));
    const double w = 2.0 * weights[i] * g2;
    for (std::size_t j = 0; j < dim; ++j) num[j] += w * points[i][j];
    den += w - 1.0;
  }
  if (std::abs(den) < kDenEps) throw DegenerateMidpoint(den);
  for (double& v : num) v /= den;
  return mobius_scalar(0.5, project(num, c), c);
}

Vec midpoint(std::span<const Vec> points, Curvature c) {
  const std::vector<double> ones(points.size(), 1.0);
  return midpoint(points, ones, c);
}

Vec Matrix::apply(VecView x) const {
  if (x.size() != cols) throw UsageError("matrix apply: shape mismatch");
  Vec out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += data[i * cols + j] * x[j];
    out[i] = s;
  }
  return out;
}

Vec mobius_matvec(const Matrix& m, VecView x, Curvature c) {
  if (m.data.size() != m.rows * m.cols) throw UsageError("mobius_matvec: malformed matrix");
  const Vec mx = m.apply(x);
  const double mx_norm = norm(mx);
  if (mx_norm < kZeroEps) return Vec(m.rows, 0.0);
  // exp0(M log0(x)) with log0(x) = artanh_ratio(s) x, s = sqrt(c)|x|.
  const double ar = artanh_ratio(c.sqrt() * norm(x));
  return exp0(scaled(mx, ar), c);
}

Vec mobius_pointwise(const std::function<double(double)>& f, VecView x, Curvature c) {
  Vec t = log0(x, c);
  for (double& v : t) v = f(v);
  return exp0(t, c);
}

}  // namespace hyp::ball
