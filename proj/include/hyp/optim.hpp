#pragma once

#include <string>
#include <vector>

#include "hyp/autodiff.hpp"

namespace hyp::ad {

/// Trainable tensor with its Adam moment buffers.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;  // requires_grad leaf
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t steps = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 penalty added to the gradient before the moment updates.
  double weight_decay = 0.0;
};

/// One Adam update of every parameter, then zeroes their gradients.
void adam_step(std::vector<Parameter*>& params, const AdamConfig& cfg);

}  // namespace hyp::ad
