#include <chrono>
#include <cmath>

#include "hyp/ball.hpp"
#include "oracles.hpp"
#include "suites.hpp"

namespace suites {

namespace b = hyp::ball;
using b::Vec;

namespace {

double diff(const Vec& a, const Vec& x) { return oracle::max_abs_diff(a, x); }

// One-dimensional Möbius addition on signed norms.
double add1(double a, double x, double c) { return (a + x) / (1.0 + c * a * x); }

// One-dimensional scalar multiplication on a signed norm.
double scalar1(double r, double a, double c) {
  return std::tanh(r * std::atanh(std::sqrt(c) * a)) / std::sqrt(c);
}

}  // namespace

SuiteResult gyrovector_axioms(std::size_t instances, const std::vector<std::size_t>& dims,
                              std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult out;
  const double tol = 1e-9;
  Recorder left_identity(out, "gyrogroup.left_identity", tol);
  Recorder left_inverse(out, "gyrogroup.left_inverse", tol);
  Recorder gyroassoc(out, "gyrogroup.left_gyroassociativity", tol);
  Recorder automorphism(out, "gyrogroup.gyration_automorphism", tol);
  Recorder left_loop(out, "gyrogroup.left_loop", tol);
  Recorder gyrocomm(out, "gyrogroup.gyrocommutativity", tol);
  Recorder inner(out, "gyrovector.gyration_inner_product", tol);
  Recorder identity_scalar(out, "gyrovector.identity_scalar", tol);
  Recorder distributive(out, "gyrovector.scalar_distributive", tol);
  Recorder associative(out, "gyrovector.scalar_associative", tol);
  Recorder scaling(out, "gyrovector.scaling_property", tol);
  Recorder gyr_scalar(out, "gyrovector.gyroautomorphism_scalar", tol);
  Recorder identity_gyr(out, "gyrovector.identity_gyroautomorphism", tol);
  Recorder homogeneity(out, "gyrovector.homogeneity", tol);
  Recorder triangle(out, "gyrovector.gyrotriangle", tol);
  Recorder t1(out, "scalar.zero_scalar", tol);
  Recorder t2(out, "scalar.integer_scalar", tol);
  Recorder t3(out, "scalar.negative_scalar", tol);
  Recorder t4(out, "scalar.scalar_of_origin", tol);
  Recorder t5(out, "scalar.scalar_of_inverse", tol);
  Recorder t6(out, "scalar.inverse_norm", tol);
  Recorder t7(out, "scalar.identity_is_zero_vector", tol);
  Recorder t8(out, "scalar.zero_product", tol);
  Recorder maps_scalar(out, "maps.scalar_via_maps", tol);
  Recorder maps_line(out, "maps.gyroline_via_maps", tol);
  Recorder maps_transport(out, "maps.parallel_transport", tol);
  Recorder gyromid(out, "midpoint.two_point_gyroline", tol);
  Recorder covariance(out, "midpoint.gyrocovariance", 1e-8);

  const b::Curvature c(1.0);
  hyp::Rng rng(seed);
  for (std::size_t dim : dims) {
    const Vec zero(dim, 0.0);
    for (std::size_t i = 0; i < instances; ++i) {
      const Vec a = oracle::random_point(dim, rng, 1.0);
      const Vec bb = oracle::random_point(dim, rng, 1.0);
      const Vec x = oracle::random_point(dim, rng, 1.0);
      const Vec y = oracle::random_point(dim, rng, 1.0);
      const double r1 = 4.0 * rng.uniform() - 2.0;
      const double r2 = 4.0 * rng.uniform() - 2.0;

      left_identity.observe(diff(b::mobius_add(zero, a, c), a));
      left_inverse.observe(diff(b::mobius_add(b::negated(a), a, c), zero));
      const Vec gx = b::gyration(a, bb, x, c);
      gyroassoc.observe(
          diff(b::mobius_add(a, b::mobius_add(bb, x, c), c), b::mobius_add(b::mobius_add(a, bb, c), gx, c)));
      automorphism.observe(diff(b::gyration(a, bb, b::mobius_add(x, y, c), c),
                                b::mobius_add(gx, b::gyration(a, bb, y, c), c)));
      left_loop.observe(diff(gx, b::gyration(b::mobius_add(a, bb, c), bb, x, c)));
      gyrocomm.observe(diff(b::mobius_add(a, bb, c), b::gyration(a, bb, b::mobius_add(bb, a, c), c)));

      inner.observe(std::abs(b::dot(gx, b::gyration(a, bb, y, c)) - b::dot(x, y)));
      identity_scalar.observe(diff(b::mobius_scalar(1.0, a, c), a));
      distributive.observe(diff(b::mobius_scalar(r1 + r2, a, c),
                                b::mobius_add(b::mobius_scalar(r1, a, c), b::mobius_scalar(r2, a, c), c)));
      associative.observe(
          diff(b::mobius_scalar(r1 * r2, a, c), b::mobius_scalar(r1, b::mobius_scalar(r2, a, c), c)));
      if (b::norm(a) > 1e-6) {
        const Vec ra = b::mobius_scalar(std::abs(r1), a, c);
        scaling.observe(diff(b::scaled(ra, 1.0 / b::norm(b::mobius_scalar(r1, a, c))),
                             b::scaled(a, 1.0 / b::norm(a))));
      }
      gyr_scalar.observe(diff(b::gyration(a, bb, b::mobius_scalar(r1, x, c), c),
                              b::mobius_scalar(r1, gx, c)));
      identity_gyr.observe(
          diff(b::gyration(b::mobius_scalar(r1, bb, c), b::mobius_scalar(r2, bb, c), x, c), x));
      homogeneity.observe(
          std::abs(b::norm(b::mobius_scalar(r1, a, c)) - scalar1(std::abs(r1), b::norm(a), 1.0)));
      triangle.observe(std::max(
          0.0, b::norm(b::mobius_add(a, bb, c)) - add1(b::norm(a), b::norm(bb), 1.0)));

      t1.observe(diff(b::mobius_scalar(0.0, a, c), zero));
      Vec sum = a;
      const std::size_t n = 2 + i % 4;
      for (std::size_t k = 1; k < n; ++k) sum = b::mobius_add(sum, a, c);
      // Repeated addition of points close to the boundary loses digits.
      t2.observe(diff(b::mobius_scalar(static_cast<double>(n), a, c), sum) *
                 (1.0 - b::sq_norm(sum)));
      t3.observe(diff(b::mobius_scalar(-r1, a, c), b::negated(b::mobius_scalar(r1, a, c))));
      t4.observe(diff(b::mobius_scalar(r1, zero, c), zero));
      t5.observe(diff(b::mobius_scalar(r1, b::negated(a), c), b::negated(b::mobius_scalar(r1, a, c))));
      t6.observe(std::abs(b::norm(b::negated(a)) - b::norm(a)));
      t7.observe(std::max(diff(b::mobius_add(a, zero, c), a), diff(b::mobius_add(zero, a, c), a)));
      {
        const bool nonzero = r1 != 0.0 && b::norm(a) > 0.0;
        const bool product_zero = b::norm(b::mobius_scalar(r1, a, c)) == 0.0;
        const bool zero_cases = b::norm(b::mobius_scalar(0.0, a, c)) == 0.0 &&
                                b::norm(b::mobius_scalar(r1, zero, c)) == 0.0;
        t8.observe((nonzero == !product_zero && zero_cases) ? 0.0 : 1.0);
      }

      maps_scalar.observe(diff(b::mobius_scalar(r1, a, c), b::exp0(b::scaled(b::log0(a, c), r1), c)));
      {
        const double t = rng.uniform() * 2.0 - 0.5;
        const Vec line = b::mobius_add(a, b::mobius_scalar(t, b::mobius_add(b::negated(a), bb, c), c), c);
        maps_line.observe(diff(line, b::exp_map(a, b::scaled(b::log_map(a, bb, c), t), c)));
      }
      {
        const Vec v = oracle::random_vector(dim, rng, 0.5);
        const Vec direct = b::scaled(v, b::conformal_factor(zero, c) / b::conformal_factor(a, c));
        maps_transport.observe(std::max(
            diff(b::transport_from_origin(a, v, c), direct),
            diff(b::log_map(a, b::mobius_add(a, b::exp0(v, c), c), c), direct)));
      }

      {
        const std::vector<Vec> pair{a, bb};
        const Vec line = b::mobius_add(a, b::mobius_scalar(0.5, b::mobius_add(b::negated(a), bb, c), c), c);
        gyromid.observe(diff(b::midpoint(pair, c), line));
      }
      {
        std::vector<Vec> pts;
        std::vector<Vec> moved;
        const std::size_t m = 2 + i % 5;
        for (std::size_t k = 0; k < m; ++k) {
          pts.push_back(oracle::random_point(dim, rng, 1.0, 0.7));
          moved.push_back(b::mobius_add(y, pts.back(), c));
        }
        covariance.observe(diff(b::midpoint(moved, c), b::mobius_add(y, b::midpoint(pts, c), c)));
      }
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace suites
