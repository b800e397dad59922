#pragma once

// Reference implementations used only by tests: extended-precision Möbius
// arithmetic, Floyd-Warshall distances, a brute-force four-point search, a
// naive convolution and a golden-section minimizer.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hyp/graph.hpp"
#include "hyp/rng.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;
using BigVec = std::vector<Big>;

inline BigVec big(const std::vector<double>& v) { return BigVec(v.begin(), v.end()); }

inline std::vector<double> small(const BigVec& v) {
  std::vector<double> out;
  for (const Big& x : v) out.push_back(static_cast<double>(x));
  return out;
}

inline Big dot(const BigVec& a, const BigVec& b) {
  Big s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline BigVec mobius_add(const BigVec& u, const BigVec& v, const Big& c) {
  const Big uv = dot(u, v), u2 = dot(u, u), v2 = dot(v, v);
  const Big a = 1 + 2 * c * uv + c * v2;
  const Big b = 1 - c * u2;
  const Big den = 1 + 2 * c * uv + c * c * u2 * v2;
  BigVec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = (a * u[i] + b * v[i]) / den;
  return out;
}

inline BigVec neg(BigVec v) {
  for (Big& x : v) x = -x;
  return v;
}

inline BigVec scale(BigVec v, const Big& r) {
  for (Big& x : v) x *= r;
  return v;
}

inline BigVec mobius_scalar(const Big& r, const BigVec& u, const Big& c) {
  const Big n = sqrt(dot(u, u));
  if (n == 0) return u;
  const Big sc = sqrt(c);
  return scale(u, tanh(r * atanh(sc * n)) / (sc * n));
}

inline Big distance(const BigVec& u, const BigVec& v, const Big& c) {
  const BigVec z = mobius_add(neg(u), v, c);
  const Big sc = sqrt(c);
  return 2 / sc * atanh(sc * sqrt(dot(z, z)));
}

inline BigVec exp0(const BigVec& v, const Big& c) {
  const Big n = sqrt(dot(v, v));
  if (n == 0) return v;
  const Big sc = sqrt(c);
  return scale(v, tanh(sc * n) / (sc * n));
}

inline BigVec log0(const BigVec& x, const Big& c) {
  const Big n = sqrt(dot(x, x));
  if (n == 0) return x;
  const Big sc = sqrt(c);
  return scale(x, atanh(sc * n) / (sc * n));
}

/// Random point with sqrt(c)|x| uniform in [0, max_radius).
inline std::vector<double> random_point(std::size_t dim, hyp::Rng& rng, double c,
                                        double max_radius = 0.9) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  for (double& x : v) {
    x = rng.normal();
    n2 += x * x;
  }
  const double r = max_radius * rng.uniform() / std::sqrt(c);
  const double n = std::sqrt(n2);
  for (double& x : v) x *= r / n;
  return v;
}

inline std::vector<double> random_vector(std::size_t dim, hyp::Rng& rng, double scale = 1.0) {
  std::vector<double> v(dim);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// All-pairs hop distances; unreachable pairs hold `inf`.
inline std::vector<int> floyd_warshall(const hyp::graphs::Graph& g, int inf = 1 << 20) {
  const std::size_t n = g.num_nodes();
  std::vector<int> d(n * n, inf);
  for (std::size_t i = 0; i < n; ++i) {
    d[i * n + i] = 0;
    for (std::size_t j : g.neighbors(i)) d[i * n + j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  return d;
}

/// Four-point delta of a connected graph over all ordered quadruples.
inline double brute_force_delta(const hyp::graphs::Graph& g) {
  const auto d = floyd_warshall(g);
  const std::size_t n = g.num_nodes();
  auto D = [&](std::size_t a, std::size_t b) { return d[a * n + b]; };
  int best = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t e = 0; e < n; ++e) {
          int s[3] = {D(a, b) + D(c, e), D(a, c) + D(b, e), D(a, e) + D(b, c)};
          std::sort(s, s + 3);
          best = std::max(best, s[2] - s[1]);
        }
  return best / 2.0;
}

/// Cross-correlation of an NHWC field with a (kh, kw, ci, co) kernel, zero padded.
inline std::vector<double> naive_conv2d(const std::vector<double>& in, std::size_t b, std::size_t h,
                                        std::size_t w, std::size_t ci, const std::vector<double>& k,
                                        std::size_t kh, std::size_t kw, std::size_t co,
                                        std::size_t stride, std::size_t pad) {
  const std::size_t ho = (h + 2 * pad - kh) / stride + 1;
  const std::size_t wo = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> out(b * ho * wo * co, 0.0);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t x = 0; x < wo; ++x)
        for (std::size_t o = 0; o < co; ++o) {
          double s = 0.0;
          for (std::size_t dy = 0; dy < kh; ++dy)
            for (std::size_t dx = 0; dx < kw; ++dx) {
              const long iy = static_cast<long>(y * stride + dy) - static_cast<long>(pad);
              const long ix = static_cast<long>(x * stride + dx) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
              for (std::size_t c = 0; c < ci; ++c)
                s += in[((n * h + iy) * w + ix) * ci + c] * k[((dy * kw + dx) * ci + c) * co + o];
            }
          out[((n * ho + y) * wo + x) * co + o] = s;
        }
  return out;
}

/// Minimizer of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double tol = 1e-13) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace oracle
