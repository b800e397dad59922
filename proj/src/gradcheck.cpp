#include "hyp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "hyp/errors.hpp"

namespace hyp::ad {

double GradCheckReport::worst() const {
  return max_rel_error.empty() ? 0.0 : *std::max_element(max_rel_error.begin(), max_rel_error.end());
}

GradCheckReport grad_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double tol,
                           double h, double floor) {
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const auto& in : inputs) {
    leaves.emplace_back(in.shape(), std::vector<double>(in.data().begin(), in.data().end()), true);
  }

  Tape tape;
  {
    TapeScope scope(tape);
    Tensor out = fn(leaves);
    if (out.size() != 1) throw UsageError("grad_check: function must be scalar-valued");
    tape.backward(out);
  }

  auto evaluate = [&]() {
    NoRecordScope no_record;
    return fn(leaves).item();
  };

  GradCheckReport report;
  report.tolerance = tol;
  for (auto& leaf : leaves) {
    const std::vector<double> analytic = leaf.grad();
    double worst = 0.0;
    auto data = leaf.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      const double up = evaluate();
      data[i] = orig - h;
      const double down = evaluate();
      data[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
    report.max_rel_error.push_back(worst);
  }
  report.passed = report.worst() <= tol;
  return report;
}

}  // namespace hyp::ad
