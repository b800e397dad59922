#pragma once

// Named finite-difference checks for every autodiff primitive, tensor ball
// operation and layer. Shared by the test suite and `hypnn gradcheck`.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hyp/gradcheck.hpp"
#include "hyp/rng.hpp"

namespace hyp::ad {

struct GradInstance {
  ScalarFn fn;
  std::vector<Tensor> inputs;
};

struct GradCase {
  std::string name;
  std::string group;  // primitive | ball | layer
  std::function<GradInstance(Rng&)> make;
};

const std::vector<GradCase>& grad_cases();

struct GradCaseResult {
  std::string name;
  std::string group;
  std::size_t instances = 0;
  double worst = 0.0;
  bool passed = false;
};

/// Runs every case whose name or group equals `filter` (all when empty) on
/// `instances` draws. Throws UsageError when nothing matches.
std::vector<GradCaseResult> run_grad_cases(std::size_t instances, std::uint64_t seed, double tol,
                                           const std::string& filter = "");

}  // namespace hyp::ad
