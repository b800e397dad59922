#include "hyp/grad_cases.hpp"

#include <cmath>
#include <memory>

#include "hyp/ball_tensor.hpp"
#include "hyp/errors.hpp"
#include "hyp/generators.hpp"
#include "hyp/graph.hpp"
#include "hyp/layers.hpp"

namespace hyp::ad {

namespace {

using ball::Curvature;

// Fixed non-uniform weighting so that every output entry contributes.
Tensor probe(const Tensor& t) {
  std::vector<double> w(t.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::cos(0.37 * static_cast<double>(i) + 0.1);
  return sum(t * Tensor(t.shape(), std::move(w)));
}

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return Tensor(std::move(shape), std::move(v));
}

// Entries with magnitude in [0.1, hi], random sign: keeps relu and abs away from 0.
Tensor off_zero(Shape shape, Rng& rng, double hi) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = (rng.bernoulli(0.5) ? -1.0 : 1.0) * (0.1 + (hi - 0.1) * rng.uniform());
  return Tensor(std::move(shape), std::move(v));
}

// Rows inside the ball with sqrt(c)|x| in [lo, hi].
Tensor points(std::size_t rows, std::size_t dim, Rng& rng, Curvature c, double lo = 0.05,
              double hi = 0.8) {
  std::vector<double> v;
  v.reserve(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> p(dim);
    double n2 = 0.0;
    for (double& x : p) {
      x = rng.normal();
      n2 += x * x;
    }
    const double radius = (lo + (hi - lo) * rng.uniform()) / c.sqrt();
    for (double x : p) v.push_back(x * radius / std::sqrt(n2));
  }
  return Tensor({rows, dim}, std::move(v));
}

Tensor field(std::size_t b, std::size_t h, std::size_t w, std::size_t ch, Rng& rng, Curvature c) {
  return reshape(points(b * h * w, ch, rng, c, 0.05, 0.7), {b, h, w, ch});
}

Curvature draw_curvature(Rng& rng) { return Curvature(0.5 + 1.5 * rng.uniform()); }

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

std::vector<GradCase> build_cases() {
  std::vector<GradCase> cases;
  auto prim = [&](std::string name, std::function<GradInstance(Rng&)> make) {
    cases.push_back({std::move(name), "primitive", std::move(make)});
  };
  auto bop = [&](std::string name, std::function<GradInstance(Rng&)> make) {
    cases.push_back({std::move(name), "ball", std::move(make)});
  };
  auto layer = [&](std::string name, std::function<GradInstance(Rng&)> make) {
    cases.push_back({std::move(name), "layer", std::move(make)});
  };

  // ---- primitives ----
  auto binary = [&](std::string name, Tensor (*op)(const Tensor&, const Tensor&), bool positive_rhs) {
    prim(std::move(name), [op, positive_rhs](Rng& rng) {
      const std::size_t r = draw(rng, 1, 4), k = draw(rng, 1, 5);
      Tensor a = uniform({r, k}, rng, -1.0, 1.0);
      // Broadcast the right operand along rows half of the time.
      Tensor b = positive_rhs ? uniform({rng.bernoulli(0.5) ? r : 1, k}, rng, 0.5, 2.0)
                              : uniform({rng.bernoulli(0.5) ? r : 1, k}, rng, -1.0, 1.0);
      return GradInstance{[op](const std::vector<Tensor>& in) { return probe(op(in[0], in[1])); }, {a, b}};
    });
  };
  binary("add", &add, false);
  binary("sub", &sub, false);
  binary("mul", &mul, false);
  binary("div", &div, true);

  auto unary = [&](std::string name, Tensor (*op)(const Tensor&), double lo, double hi, bool avoid_zero) {
    prim(std::move(name), [op, lo, hi, avoid_zero](Rng& rng) {
      const std::size_t n = draw(rng, 1, 8);
      Tensor x = avoid_zero ? off_zero({n}, rng, hi) : uniform({n}, rng, lo, hi);
      return GradInstance{[op](const std::vector<Tensor>& in) { return probe(op(in[0])); }, {x}};
    });
  };
  unary("neg", &neg, -2.0, 2.0, false);
  unary("exp", &exp, -2.0, 2.0, false);
  unary("log", &log, 0.2, 3.0, false);
  unary("tanh", &tanh, -2.0, 2.0, false);
  unary("artanh", &artanh, -0.9, 0.9, false);
  unary("asinh", &asinh, -3.0, 3.0, false);
  unary("sinh", &sinh, -2.0, 2.0, false);
  unary("sqrt", &sqrt, 0.2, 3.0, false);
  unary("square", &square, -2.0, 2.0, false);
  unary("relu", &relu, 0.0, 2.0, true);

  prim("clamp", [](Rng& rng) {
    Tensor x = off_zero({draw(rng, 1, 8)}, rng, 2.0);
    for (double& v : x.mutable_data())
      if (std::abs(std::abs(v) - 1.0) < 0.05) v *= 1.2;
    return GradInstance{[](const std::vector<Tensor>& in) { return probe(clamp(in[0], -1.0, 1.0)); }, {x}};
  });
  prim("broadcast_to", [](Rng& rng) {
    const std::size_t r = draw(rng, 2, 4), k = draw(rng, 1, 4);
    return GradInstance{[r, k](const std::vector<Tensor>& in) { return probe(broadcast_to(in[0], {r, k})); },
                        {uniform({1, k}, rng, -1.0, 1.0)}};
  });
  prim("reshape", [](Rng& rng) {
    const std::size_t r = draw(rng, 1, 4), k = draw(rng, 1, 4);
    return GradInstance{[r, k](const std::vector<Tensor>& in) { return probe(reshape(in[0], {k, r})); },
                        {uniform({r, k}, rng, -1.0, 1.0)}};
  });
  prim("sum_mean", [](Rng& rng) {
    return GradInstance{[](const std::vector<Tensor>& in) { return square(sum(in[0])) + 3.0 * mean(in[0]); },
                        {uniform({draw(rng, 1, 4), draw(rng, 1, 4)}, rng, -1.0, 1.0)}};
  });
  prim("sum_axis", [](Rng& rng) {
    const std::size_t axis = rng.below(3);
    return GradInstance{
        [axis](const std::vector<Tensor>& in) { return probe(sum_axis(in[0], axis)); },
        {uniform({draw(rng, 1, 3), draw(rng, 1, 3), draw(rng, 1, 3)}, rng, -1.0, 1.0)}};
  });
  prim("mean_axis", [](Rng& rng) {
    const std::size_t axis = rng.below(2);
    return GradInstance{[axis](const std::vector<Tensor>& in) { return probe(mean_axis(in[0], axis)); },
                        {uniform({draw(rng, 1, 4), draw(rng, 1, 4)}, rng, -1.0, 1.0)}};
  });
  prim("sum_last", [](Rng& rng) {
    return GradInstance{[](const std::vector<Tensor>& in) { return probe(sum_last(in[0])); },
                        {uniform({draw(rng, 1, 4), draw(rng, 1, 4)}, rng, -1.0, 1.0)}};
  });
  prim("norm_last", [](Rng& rng) {
    return GradInstance{[](const std::vector<Tensor>& in) { return probe(norm_last(in[0])); },
                        {off_zero({draw(rng, 1, 4), draw(rng, 1, 4)}, rng, 1.0)}};
  });
  prim("matmul", [](Rng& rng) {
    const std::size_t m = draw(rng, 1, 4), k = draw(rng, 1, 4), n = draw(rng, 1, 4);
    return GradInstance{[](const std::vector<Tensor>& in) { return probe(matmul(in[0], in[1])); },
                        {uniform({m, k}, rng, -1.0, 1.0), uniform({k, n}, rng, -1.0, 1.0)}};
  });
  prim("transpose", [](Rng& rng) {
    return GradInstance{[](const std::vector<Tensor>& in) { return probe(transpose(in[0])); },
                        {uniform({draw(rng, 1, 4), draw(rng, 1, 4)}, rng, -1.0, 1.0)}};
  });
  prim("gather_scatter_rows", [](Rng& rng) {
    const std::size_t rows = draw(rng, 2, 5), k = draw(rng, 1, 3), picks = draw(rng, 1, 6);
    std::vector<std::size_t> idx(picks);
    for (auto& i : idx) i = rng.below(rows);
    return GradInstance{[idx, rows](const std::vector<Tensor>& in) {
                          const Tensor g = gather_rows(in[0], idx);
                          return probe(scatter_add_rows(square(g), idx, rows + 1));
                        },
                        {uniform({rows, k}, rng, -1.0, 1.0)}};
  });
  prim("spmm", [](Rng& rng) {
    const auto g = graphs::random_tree(draw(rng, 3, 8), rng.next());
    auto s = std::make_shared<SparseMatrix>(graphs::sym_norm_coeffs(g));
    return GradInstance{[s](const std::vector<Tensor>& in) { return probe(spmm(s, in[0])); },
                        {uniform({g.num_nodes(), draw(rng, 1, 3)}, rng, -1.0, 1.0)}};
  });
  prim("conv2d", [](Rng& rng) {
    const std::size_t ci = draw(rng, 1, 2), co = draw(rng, 1, 2), k = draw(rng, 1, 3);
    const std::size_t stride = draw(rng, 1, 2), pad = rng.below(2);
    return GradInstance{
        [stride, pad](const std::vector<Tensor>& in) { return probe(conv2d(in[0], in[1], stride, pad)); },
        {uniform({2, 4, 4, ci}, rng, -1.0, 1.0), uniform({k, k, ci, co}, rng, -1.0, 1.0)}};
  });
  prim("max_pool2d", [](Rng& rng) {
    // Distinct, well separated values keep the argmax fixed under perturbation.
    Tensor x = uniform({1, 4, 4, 2}, rng, 0.0, 1.0);
    auto d = x.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.1 * static_cast<double>((i * 7) % d.size()) + 0.01 * d[i];
    return GradInstance{[](const std::vector<Tensor>& in) { return probe(max_pool2d(in[0], 2, 2)); }, {x}};
  });
  prim("sum_pool2d", [](Rng& rng) {
    const std::size_t stride = draw(rng, 1, 2);
    return GradInstance{
        [stride](const std::vector<Tensor>& in) { return probe(sum_pool2d(in[0], 2, stride)); },
        {uniform({2, 4, 4, 2}, rng, -1.0, 1.0)}};
  });
  prim("cross_entropy", [](Rng& rng) {
    const std::size_t n = draw(rng, 1, 5), k = draw(rng, 2, 5);
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.below(k));
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(0.7)) rows.push_back(i);
    return GradInstance{
        [labels, rows](const std::vector<Tensor>& in) { return cross_entropy(in[0], labels, rows); },
        {uniform({n, k}, rng, -2.0, 2.0)}};
  });

  // ---- tensor ball operations ----
  bop("project", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    // Half the rows lie well outside the ball and get rescaled.
    Tensor x = points(4, draw(rng, 1, 4), rng, c, 0.1, 0.8);
    auto d = x.mutable_data();
    const std::size_t k = x.dim(1);
    for (std::size_t r = 0; r < 4; r += 2)
      for (std::size_t j = 0; j < k; ++j) d[r * k + j] *= 2.0 / (0.1 + 0.8);
    for (std::size_t r = 0; r < 4; r += 2) {
      double n2 = 0.0;
      for (std::size_t j = 0; j < k; ++j) n2 += d[r * k + j] * d[r * k + j];
      if (std::sqrt(c.value() * n2) < 1.05)
        for (std::size_t j = 0; j < k; ++j) d[r * k + j] *= 1.1 / std::sqrt(c.value() * n2);
    }
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(bt::project(in[0], c)); }, {x}};
  });
  bop("exp0", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    Tensor v = uniform({3, draw(rng, 1, 5)}, rng, -1.0, 1.0);
    // One row in the small-norm series branch.
    auto d = v.mutable_data();
    for (std::size_t j = 0; j < v.dim(1); ++j) d[j] *= 1e-4;
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(bt::exp0(in[0], c)); }, {v}};
  });
  bop("log0", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    Tensor x = points(3, draw(rng, 1, 5), rng, c);
    auto d = x.mutable_data();
    for (std::size_t j = 0; j < x.dim(1); ++j) d[j] *= 1e-3;
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(bt::log0(in[0], c)); }, {x}};
  });
  bop("mobius_add", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 1, 5);
    const std::size_t rows = rng.bernoulli(0.5) ? 3 : 1;
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(bt::mobius_add(in[0], in[1], c)); },
                        {points(3, k, rng, c, 0.05, 0.7), points(rows, k, rng, c, 0.05, 0.7)}};
  });
  bop("mobius_scalar", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    return GradInstance{
        [c](const std::vector<Tensor>& in) { return probe(bt::mobius_scalar(in[0], in[1], c)); },
        {uniform({3, 1}, rng, -1.5, 1.5), points(3, draw(rng, 1, 5), rng, c, 0.05, 0.6)}};
  });
  bop("mobius_matvec", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 1, 5), o = draw(rng, 1, 5);
    return GradInstance{
        [c](const std::vector<Tensor>& in) { return probe(bt::mobius_matvec(in[0], in[1], c)); },
        {uniform({o, k}, rng, -0.5, 0.5), points(3, k, rng, c)}};
  });
  bop("mobius_pointwise", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    return GradInstance{[c](const std::vector<Tensor>& in) {
                          return probe(bt::mobius_pointwise([](const Tensor& t) { return tanh(t); }, in[0], c));
                        },
                        {points(3, draw(rng, 1, 5), rng, c)}};
  });
  bop("lorentz_sq", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(bt::lorentz_sq(in[0], c)); },
                        {points(3, draw(rng, 1, 5), rng, c)}};
  });
  bop("sq_norm", [](Rng& rng) {
    return GradInstance{[](const std::vector<Tensor>& in) { return probe(bt::sq_norm(in[0])); },
                        {uniform({3, draw(rng, 1, 5)}, rng, -1.0, 1.0)}};
  });
  bop("distance", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 1, 5);
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(bt::distance(in[0], in[1], c)); },
                        {points(3, k, rng, c, 0.05, 0.7), points(3, k, rng, c, 0.05, 0.7)}};
  });
  bop("midpoint", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t m = draw(rng, 1, 5);
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(bt::midpoint(in[0], in[1], c)); },
                        {points(m, draw(rng, 1, 5), rng, c, 0.05, 0.7), uniform({m, 1}, rng, 0.8, 1.5)}};
  });

  // ---- layers ----
  layer("hyp_linear", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 1, 5), o = draw(rng, 1, 5);
    return GradInstance{
        [c](const std::vector<Tensor>& in) { return probe(nn::hyp_linear(in[0], in[1], in[2], c)); },
        {points(4, k, rng, c), uniform({o, k}, rng, -0.6, 0.6), uniform({o}, rng, -0.4, 0.4)}};
  });
  layer("hyp_mlr", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 1, 5), classes = draw(rng, 2, 4);
    return GradInstance{
        [c](const std::vector<Tensor>& in) { return probe(nn::hyp_mlr(in[0], in[1], in[2], c)); },
        {points(4, k, rng, c), uniform({classes, k}, rng, -0.4, 0.4), off_zero({classes, k}, rng, 1.0)}};
  });
  layer("hyp_conv2d", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t ci = draw(rng, 1, 2), co = draw(rng, 1, 2), k = draw(rng, 1, 3);
    const std::size_t pad = rng.below(2);
    return GradInstance{
        [c, pad](const std::vector<Tensor>& in) { return probe(nn::hyp_conv2d(in[0], in[1], 1, pad, c)); },
        {field(1, 4, 4, ci, rng, c), uniform({k, k, ci, co}, rng, -0.4, 0.4)}};
  });
  layer("hyp_avg_pool", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t stride = draw(rng, 1, 2);
    return GradInstance{
        [c, stride](const std::vector<Tensor>& in) { return probe(nn::hyp_avg_pool(in[0], 2, stride, c)); },
        {field(2, 4, 4, draw(rng, 1, 3), rng, c)}};
  });
  layer("hyp_max_pool", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    Tensor f = field(1, 4, 4, 2, rng, c);
    auto d = f.mutable_data();
    // Distinct coordinates so the window argmax is stable under perturbation.
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = (0.05 + 0.6 * static_cast<double>((i * 7) % d.size()) / static_cast<double>(d.size()) +
              0.001 * rng.uniform()) / c.sqrt();
    return GradInstance{[c](const std::vector<Tensor>& in) { return probe(nn::hyp_max_pool(in[0], 2, 2, c)); },
                        {f}};
  });
  layer("hyp_dropout", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::uint64_t mask_seed = rng.next();
    return GradInstance{[c, mask_seed](const std::vector<Tensor>& in) {
                          Rng mask(mask_seed);
                          return probe(nn::hyp_dropout(in[0], 0.4, c, nn::Mode::Train, mask));
                        },
                        {points(4, draw(rng, 1, 5), rng, c)}};
  });
  layer("gcn_conv", [](Rng& rng) {
    const auto g = graphs::barabasi_albert(draw(rng, 4, 9), 2, rng.next());
    auto op = std::make_shared<nn::GraphOperator>(nn::GraphOperator::from_graph(g));
    const std::size_t k = draw(rng, 1, 4), o = draw(rng, 1, 4);
    return GradInstance{
        [op](const std::vector<Tensor>& in) { return probe(nn::gcn_conv(in[0], *op, in[1], in[2])); },
        {uniform({g.num_nodes(), k}, rng, -1.0, 1.0), uniform({o, k}, rng, -1.0, 1.0),
         uniform({o}, rng, -1.0, 1.0)}};
  });
  for (const auto mode : {nn::Aggregation::Paper, nn::Aggregation::Normalized}) {
    const std::string suffix = mode == nn::Aggregation::Paper ? "paper" : "normalized";
    layer("hyp_gcn_conv_" + suffix, [mode](Rng& rng) {
      const Curvature c = draw_curvature(rng);
      // Minimum degree 2 keeps the paper-mode denominator away from zero.
      const auto g = graphs::barabasi_albert(draw(rng, 4, 9), 2, rng.next());
      auto op = std::make_shared<nn::GraphOperator>(nn::GraphOperator::from_graph(g));
      const std::size_t k = draw(rng, 1, 4), o = draw(rng, 1, 4);
      const auto f = rng.bernoulli(0.5) ? nn::Activation::Tanh : nn::Activation::Identity;
      return GradInstance{[op, mode, f, c](const std::vector<Tensor>& in) {
                            return probe(nn::hyp_gcn_conv(in[0], *op, in[1], in[2], c, mode, f));
                          },
                          {points(g.num_nodes(), k, rng, c, 0.05, 0.5), uniform({o, k}, rng, -0.5, 0.5),
                           uniform({1}, rng, 0.5, 2.5)}};
    });
  }
  layer("hyp_batch_norm_train", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 1, 4), m = draw(rng, 3, 6);
    return GradInstance{[c, k](const std::vector<Tensor>& in) {
                          nn::HypBatchNorm bn(k);
                          bn.log_gamma.value = in[1];
                          bn.beta.value = in[2];
                          return probe(bn.forward(in[0], c, nn::Mode::Train));
                        },
                        {points(m, k, rng, c, 0.1, 0.7), uniform({1}, rng, -0.5, 0.5),
                         uniform({k}, rng, -0.3, 0.3)}};
  });
  layer("hyp_batch_norm_eval", [](Rng& rng) {
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 1, 4);
    std::vector<double> mean(k);
    for (double& v : mean) v = 0.3 * (2.0 * rng.uniform() - 1.0);
    const double sigma = 0.5 + rng.uniform();
    return GradInstance{[c, k, mean, sigma](const std::vector<Tensor>& in) {
                          nn::HypBatchNorm bn(k);
                          bn.running_mean = mean;
                          bn.running_sigma = sigma;
                          bn.log_gamma.value = in[1];
                          bn.beta.value = in[2];
                          return probe(bn.forward(in[0], c, nn::Mode::Eval));
                        },
                        {points(4, k, rng, c, 0.1, 0.6), uniform({1}, rng, -0.5, 0.5),
                         uniform({k}, rng, -0.3, 0.3)}};
  });
  layer("euclid_batch_norm", [](Rng& rng) {
    const std::size_t k = draw(rng, 1, 4), m = draw(rng, 3, 6);
    return GradInstance{[k](const std::vector<Tensor>& in) {
                          nn::EuclidBatchNorm bn(k);
                          bn.gamma.value = in[1];
                          bn.beta.value = in[2];
                          return probe(bn.forward(in[0], nn::Mode::Train));
                        },
                        {uniform({m, k}, rng, -1.0, 1.0), uniform({k}, rng, 0.5, 1.5),
                         uniform({k}, rng, -0.5, 0.5)}};
  });
  layer("featurized_hyp_mlr_loss", [](Rng& rng) {
    // HypLinear followed by HypMLR and cross-entropy, the graph-model head.
    const Curvature c = draw_curvature(rng);
    const std::size_t k = draw(rng, 2, 4), classes = draw(rng, 2, 4), n = 5;
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.below(classes));
    return GradInstance{[c, labels](const std::vector<Tensor>& in) {
                          const Tensor h = nn::hyp_linear(in[0], in[1], in[2], c);
                          return cross_entropy(nn::hyp_mlr(h, in[3], in[4], c), labels);
                        },
                        {points(n, k, rng, c), uniform({k, k}, rng, -0.6, 0.6), uniform({k}, rng, -0.3, 0.3),
                         uniform({classes, k}, rng, -0.3, 0.3), off_zero({classes, k}, rng, 1.0)}};
  });
  return cases;
}

}  // namespace

const std::vector<GradCase>& grad_cases() {
  static const std::vector<GradCase> cases = build_cases();
  return cases;
}

std::vector<GradCaseResult> run_grad_cases(std::size_t instances, std::uint64_t seed, double tol,
                                           const std::string& filter) {
  std::vector<GradCaseResult> results;
  std::uint64_t index = 0;
  for (const GradCase& gc : grad_cases()) {
    ++index;
    if (!filter.empty() && gc.name != filter && gc.group != filter) continue;
    Rng rng(seed * 1000003ULL + index);
    GradCaseResult r{gc.name, gc.group, instances, 0.0, true};
    for (std::size_t i = 0; i < instances; ++i) {
      const GradInstance inst = gc.make(rng);
      const GradCheckReport rep = grad_check(inst.fn, inst.inputs, tol);
      const double w = std::isnan(rep.worst()) ? INFINITY : rep.worst();
      r.worst = std::max(r.worst, w);
    }
    r.passed = r.worst <= tol;
    results.push_back(std::move(r));
  }
  if (results.empty()) throw UsageError("gradcheck: no check named '" + filter + "'");
  return results;
}

}  // namespace hyp::ad
