#pragma once

// Ball operations on autodiff tensors. Points are the rows of the last axis;
// every other axis is batch. Ops that leave the ball project back to radius
// (1 - 1e-5) / sqrt(c), like their vector counterparts in hyp/ball.hpp.

#include "hyp/autodiff.hpp"
#include "hyp/ball.hpp"

namespace hyp::bt {

using ad::Tensor;
using ball::Curvature;

Tensor project(const Tensor& x, Curvature c);
Tensor exp0(const Tensor& v, Curvature c);
Tensor log0(const Tensor& x, Curvature c);

/// x ⊕ y row by row. Either operand may be a single row shared by all rows.
Tensor mobius_add(const Tensor& x, const Tensor& y, Curvature c);

/// r ⊗ x for a scalar or per-row (..., 1) tensor r.
Tensor mobius_scalar(const Tensor& r, const Tensor& x, Curvature c);

/// Rows of x mapped by W (out x in): exp0(log0(x) W^T).
Tensor mobius_matvec(const Tensor& w, const Tensor& x, Curvature c);

/// exp0(f(log0(x))) for an elementwise tensor map f.
template <typename F>
Tensor mobius_pointwise(F&& f, const Tensor& x, Curvature c) {
  return exp0(f(log0(x, c)), c);
}

/// gamma^2 = 1 / (1 - c|x|^2), shape (..., 1).
Tensor lorentz_sq(const Tensor& x, Curvature c);

/// Squared norm over the last axis, shape (..., 1).
Tensor sq_norm(const Tensor& x);

/// Geodesic distance between matching rows, shape (..., 1).
Tensor distance(const Tensor& x, const Tensor& y, Curvature c);

/// Weighted gyromidpoint of the rows of an (m x d) tensor, result (1 x d).
/// `weights` is (m x 1) or undefined for equal weights. Throws
/// DegenerateMidpoint when the denominator magnitude is below 1e-12.
Tensor midpoint(const Tensor& x, const Tensor& weights, Curvature c);
Tensor midpoint(const Tensor& x, Curvature c);

}  // namespace hyp::bt
