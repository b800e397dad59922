#include "hyp/optim.hpp"

#include <cmath>

#include "hyp/errors.hpp"

namespace hyp::ad {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)) {
  if (!value.requires_grad()) throw UsageError("parameter '" + name + "' must require grad");
  first_moment.assign(value.size(), 0.0);
  second_moment.assign(value.size(), 0.0);
}

void adam_step(std::vector<Parameter*>& params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    auto& node = *p->value.node();
    auto& grad = node.grad_buffer();
    ++p->steps;
    const double t = static_cast<double>(p->steps);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < node.value.size(); ++i) {
      const double g = grad[i] + cfg.weight_decay * node.value[i];
      double& m = p->first_moment[i];
      double& v = p->second_moment[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m / bias1;
      const double v_hat = v / bias2;
      node.value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
  }
}

}  // namespace hyp::ad
