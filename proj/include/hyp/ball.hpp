#pragma once

// Möbius gyrovector-space operations on the Poincaré ball
//   D_c^n = { x in R^n : c |x|^2 < 1 }.
// Every operation is a pure function of its arguments. Results of mobius_add,
// mobius_scalar, exp_map and the derived maps are projected back into the ball
// with margin kBallEps.

#include <functional>
#include <span>
#include <vector>

namespace hyp::ball {

using Vec = std::vector<double>;
using VecView = std::span<const double>;

inline constexpr double kBallEps = 1e-5;
inline constexpr double kZeroEps = 1e-15;
inline constexpr double kDenEps = 1e-12;

/// Curvature parameter c >= 0 (c = 0 is the Euclidean limit).
class Curvature {
 public:
  Curvature() = default;
  explicit Curvature(double c);

  double value() const noexcept { return c_; }
  double sqrt() const noexcept { return sqrt_c_; }
  bool euclidean() const noexcept { return c_ == 0.0; }

 private:
  double c_ = 1.0;
  double sqrt_c_ = 1.0;
};

// Elementary vector helpers.
double dot(VecView a, VecView b);
double sq_norm(VecView a);
double norm(VecView a);
Vec scaled(VecView a, double r);
Vec add(VecView a, VecView b);
Vec negated(VecView a);

/// tanh(s)/s and artanh(s)/s with their s -> 0 limits. artanh_ratio clamps s
/// to 1 - kBallEps.
double tanh_ratio(double s);
double artanh_ratio(double s);

/// Conformal factor 2 / (1 - c|x|^2).
double conformal_factor(VecView x, Curvature c);
/// Lorentz factor 1 / sqrt(1 - c|x|^2).
double lorentz_factor(VecView x, Curvature c);

/// Rescales x to norm (1 - eps)/sqrt(c) when sqrt(c)|x| >= 1 - eps.
/// Throws NumericalError on non-finite input.
Vec project(VecView x, Curvature c, double eps = kBallEps);
bool in_ball(VecView x, Curvature c);

Vec mobius_add(VecView u, VecView v, Curvature c);
Vec mobius_scalar(double r, VecView u, Curvature c);
/// gyr[a, b] x = -(a + b) + (a + (b + x)), with + the Möbius addition,
/// evaluated in closed form.
Vec gyration(VecView a, VecView b, VecView x, Curvature c);
double distance(VecView u, VecView v, Curvature c);

Vec exp_map(VecView base, VecView v, Curvature c);
Vec log_map(VecView base, VecView x, Curvature c);
Vec exp0(VecView v, Curvature c);
Vec log0(VecView x, Curvature c);
/// P_{0 -> u}(v) = (lambda_0 / lambda_u) v.
Vec transport_from_origin(VecView u, VecView v, Curvature c);

/// Weighted Möbius midpoint
///   (1/2) (x) [ sum 2 w_i g_i^2 x_i / sum (2 w_i g_i^2 - 1) ],
/// g_i the Lorentz factor of x_i. The bracketed quotient is projected into
/// the ball before halving. Throws DegenerateMidpoint when the denominator
/// magnitude drops below kDenEps, UsageError on empty or mismatched input.
Vec midpoint(std::span<const Vec> points, std::span<const double> weights, Curvature c);
Vec midpoint(std::span<const Vec> points, Curvature c);

/// Row-major m x n matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  Vec apply(VecView x) const;
};

/// M (x)_c x = exp0(M log0(x)); the origin when M x = 0.
Vec mobius_matvec(const Matrix& m, VecView x, Curvature c);

/// f^(x)(x) = exp0(f applied elementwise to log0(x)).
Vec mobius_pointwise(const std::function<double(double)>& f, VecView x, Curvature c);

}  // namespace hyp::ball
