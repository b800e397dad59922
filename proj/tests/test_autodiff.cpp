#include <gtest/gtest.h>

#include <cmath>

#include "hyp/autodiff.hpp"
#include "hyp/ball_tensor.hpp"
#include "hyp/errors.hpp"
#include "hyp/gradcheck.hpp"
#include "hyp/layers.hpp"
#include "hyp/optim.hpp"
#include "suites.hpp"

using namespace hyp;
using namespace hyp::ad;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Tensor, ShapeContract) {
  EXPECT_THROW(Tensor({2, 3}, {1.0, 2.0}), UsageError);
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b({3, 2}, {1, 0, 0, 1, 1, 1});
  const Tensor c = matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  EXPECT_EQ(values(c), (std::vector<double>{4, 5, 10, 11}));
  EXPECT_THROW(matmul(a, a), UsageError);
  EXPECT_THROW(add(a, Tensor({4}, {1, 2, 3, 4})), UsageError);
}

TEST(Tensor, BroadcastingArithmetic) {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor row({1, 2}, {10, 20});
  EXPECT_EQ(values(a + row), (std::vector<double>{11, 22, 13, 24}));
  EXPECT_EQ(values(a * Tensor::scalar(2.0)), (std::vector<double>{2, 4, 6, 8}));
  EXPECT_EQ(values(sum_axis(a, 0)), (std::vector<double>{4, 6}));
  EXPECT_EQ(values(sum_last(a)), (std::vector<double>{3, 7}));
}

TEST(Backward, TanhAtZero) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::scalar(0.0, true);
  Tensor y = tanh(x);
  EXPECT_EQ(y.item(), 0.0);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 1.0);
}

TEST(Backward, ArtanhDerivativeMatchesCentralDifference) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::scalar(0.5, true);
  tape.backward(artanh(x));
  const double h = 1e-6;
  const double numeric = (std::atanh(0.5 + h) - std::atanh(0.5 - h)) / (2.0 * h);
  EXPECT_NEAR(x.grad()[0], 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(x.grad()[0], numeric, 1e-8);
}

TEST(Backward, SumAndSquaredNorm) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x({3}, {1.0, -2.0, 0.5}, true);
  tape.backward(sum(x));
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 1, 1}));
  x.zero_grad();
  Tape t2;
  TapeScope s2(t2);
  t2.backward(sum(square(x)));
  EXPECT_EQ(x.grad(), (std::vector<double>{2.0, -4.0, 1.0}));
}

TEST(Backward, NonScalarLossThrows) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x({2}, {1.0, 2.0}, true);
  EXPECT_THROW(tape.backward(x * 2.0), UsageError);
}

TEST(Backward, ReplayAccumulatesTwice) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x({2}, {0.3, -0.7}, true);
  Tensor loss = sum(tanh(x) * x);
  tape.backward(loss);
  const auto once = x.grad();
  tape.backward(loss);
  const auto twice = x.grad();
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(twice[i], 2.0 * once[i]);
}

TEST(Backward, NothingRecordedWithoutTape) {
  Tensor x({2}, {0.3, -0.7}, true);
  Tape tape;
  {
    NoRecordScope quiet;
    Tensor y = tanh(x);
  }
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Backward, Deterministic) {
  auto run = [] {
    Tape tape;
    TapeScope scope(tape);
    Tensor x({2, 3}, {0.1, 0.2, -0.3, 0.4, -0.1, 0.05}, true);
    Tensor loss = sum(bt::distance(x, bt::mobius_add(x, x, ball::Curvature(1.0)), ball::Curvature(1.0)));
    tape.backward(loss);
    return std::make_pair(loss.item(), x.grad());
  };
  EXPECT_EQ(run(), run());
}

TEST(MaxPool, TieGoesToFirstElement) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x({1, 2, 2, 1}, {1.0, 1.0, 1.0, 1.0}, true);
  tape.backward(sum(max_pool2d(x, 2, 2)));
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 0, 0, 0}));
}

TEST(CrossEntropy, KnownValues) {
  EXPECT_NEAR(cross_entropy(Tensor({1, 4}, {0, 0, 0, 0}), {2}).item(), std::log(4.0), 1e-15);
  EXPECT_NEAR(cross_entropy(Tensor({1, 3}, {0, 800, 0}), {1}).item(), 0.0, 1e-15);
  const double want = -3.0 + std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  EXPECT_NEAR(cross_entropy(Tensor({1, 3}, {1, 2, 3}), {2}).item(), want, 1e-15);
  EXPECT_NEAR(want, 0.40761, 1e-5);
  EXPECT_THROW(cross_entropy(Tensor({1, 3}, {1, 2, 3}), {3}), UsageError);
  EXPECT_THROW(cross_entropy(Tensor({1, 3}, {1, 2, 3}), {-1}), UsageError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter p("p", Tensor({2}, {1.0, -1.0}, true));
  p.value.node()->grad_buffer();
  std::vector<Parameter*> ps{&p};
  adam_step(ps, AdamConfig{.lr = 0.1});
  EXPECT_EQ(values(p.value), (std::vector<double>{1.0, -1.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("p", Tensor({1}, {1.0}, true));
  p.value.node()->grad_buffer()[0] = 1.0;
  std::vector<Parameter*> ps{&p};
  adam_step(ps, AdamConfig{.lr = 0.1});
  EXPECT_NEAR(p.value.at(0), 0.9, 1e-8);
  EXPECT_EQ(p.value.grad()[0], 0.0);
}

TEST(Adam, ConvergesOnQuadraticBowl) {
  Parameter p("p", Tensor({1}, {1.0}, true));
  std::vector<Parameter*> ps{&p};
  for (int i = 0; i < 200; ++i) {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(square(p.value)));
    adam_step(ps, AdamConfig{.lr = 0.05});
  }
  EXPECT_LT(std::abs(p.value.at(0)), 1e-2);
}

TEST(Adam, WeightDecayAddsToGradient) {
  Parameter p("p", Tensor({1}, {2.0}, true));
  p.value.node()->grad_buffer()[0] = 0.0;
  std::vector<Parameter*> ps{&p};
  adam_step(ps, AdamConfig{.lr = 0.1, .weight_decay = 0.5});
  EXPECT_NEAR(p.value.at(0), 1.9, 1e-8);
}

TEST(GradCheck, MobiusAddDistanceAndMlrLoss) {
  const ball::Curvature c(1.0);
  const Tensor u({3, 2}, {0.1, 0.5, -0.4, 0.2, 0.3, -0.3});
  const Tensor v({3, 2}, {-0.2, 0.1, 0.5, 0.4, 0.0, 0.6});
  EXPECT_TRUE(grad_check([&](const auto& in) { return sum(bt::mobius_add(in[0], in[1], c)); }, {u, v}, 1e-4)
                  .passed);
  EXPECT_TRUE(grad_check([&](const auto& in) { return sum(bt::distance(in[0], in[1], c)); }, {u, v}, 1e-4)
                  .passed);
  const Tensor p({2, 2}, {0.1, -0.1, 0.0, 0.2});
  const Tensor a({2, 2}, {1.0, 0.3, -0.5, 0.8});
  const auto rep = grad_check(
      [&](const auto& in) { return cross_entropy(nn::hyp_mlr(in[0], in[1], in[2], c), {0, 1, 1}); }, {u, p, a},
      1e-4);
  EXPECT_TRUE(rep.passed) << rep.worst();
}

TEST(GradCheck, DetectsWrongGradient) {
  // A primitive with a deliberately wrong backward rule must fail.
  auto broken = [](const Tensor& x) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v = v * v;
    Tensor xi = x;
    return make_result(x.shape(), std::move(out), {x}, [xi](const std::vector<double>& g) {
      auto& gx = xi.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * xi.at(i);
    });
  };
  const auto rep = grad_check([&](const auto& in) { return sum(broken(in[0])); }, {Tensor({2}, {1.0, 2.0})}, 1e-4);
  EXPECT_FALSE(rep.passed);
}

TEST(Suites, Gradients) {
  const auto result = suites::gradients(20, 7);
  EXPECT_TRUE(result.passed()) << result.failures();
  EXPECT_LT(result.seconds, 60.0);
  EXPECT_GE(result.checks.size(), 40u);
}
