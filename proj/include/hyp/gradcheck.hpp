#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hyp/autodiff.hpp"

namespace hyp::ad {

struct GradCheckReport {
  /// Per input: max over entries of |tape - numeric| / max(|tape|, |numeric|, floor).
  std::vector<double> max_rel_error;
  double tolerance = 0.0;
  bool passed = false;

  double worst() const;
};

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Compares tape gradients of a scalar-valued `fn` against central differences
/// with step `h`. Inputs are copied; the caller's tensors are not modified.
/// `floor` keeps the relative error finite for near-zero gradients.
GradCheckReport grad_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double tol,
                           double h = 1e-5, double floor = 1e-3);

}  // namespace hyp::ad
