#pragma once

// Hyperbolic layers and their Euclidean baselines. Weight matrices are stored
// (out x in). Hyperbolic biases, BN shifts and MLR offsets are kept in the
// tangent space at the origin and mapped with exp0 when used.

#include <memory>
#include <string>
#include <vector>

#include "hyp/autodiff.hpp"
#include "hyp/ball.hpp"
#include "hyp/optim.hpp"
#include "hyp/rng.hpp"
#include "hyp/sparse.hpp"

namespace hyp::graphs {
class Graph;
}

namespace hyp::nn {

using ad::Parameter;
using ad::Tensor;
using ball::Curvature;

enum class Mode { Train, Eval };

enum class Activation { Identity, ReLU, Tanh };
Activation parse_activation(const std::string& name);
Tensor activate(const Tensor& x, Activation f);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot(const ad::Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// ---- functional forms -------------------------------------------------------

/// (W ⊗ x) ⊕ exp0(b) per row; b may be undefined.
Tensor hyp_linear(const Tensor& x, const Tensor& w, const Tensor& b, Curvature c);

/// Signed hyperplane-distance logits (N x K) for offsets exp0(p_raw) and
/// normals a = (1 - c|p|^2) a_raw. Rows of a_raw shorter than 1e-15 are
/// lifted to that norm and counted in `clamp_count` when given.
Tensor hyp_mlr(const Tensor& x, const Tensor& p_raw, const Tensor& a_raw, Curvature c,
               std::size_t* clamp_count = nullptr);

/// exp0(conv2d(log0(f))) on an NHWC field; padding pads with the origin.
Tensor hyp_conv2d(const Tensor& f, const Tensor& kernel, std::size_t stride, std::size_t padding,
                  Curvature c);

/// Equal-weight gyromidpoint of each k x k window.
Tensor hyp_avg_pool(const Tensor& f, std::size_t window, std::size_t stride, Curvature c);

/// exp0(max_pool(log0(f))).
Tensor hyp_max_pool(const Tensor& f, std::size_t window, std::size_t stride, Curvature c);

/// Train: exp0(dropout(log0(x))) with inverted scaling; eval: identity.
Tensor hyp_dropout(const Tensor& x, double p, Curvature c, Mode mode, Rng& rng);

/// Inverted dropout on plain features.
Tensor dropout(const Tensor& x, double p, Mode mode, Rng& rng);

/// Normalized-adjacency operators for graph layers.
struct GraphOperator {
  /// c_vw over the self-loop-augmented graph.
  std::shared_ptr<const SparseMatrix> coeffs;
  /// coeffs with each row rescaled to sum 1.
  std::shared_ptr<const SparseMatrix> row_normalized;
  /// |N(v)| including v, as an (n x 1) tensor.
  Tensor neighborhood_size;

  static GraphOperator from_graph(const graphs::Graph& g);
  std::size_t num_nodes() const { return coeffs ? coeffs->rows : 0; }
};

/// Â X W^T + b.
Tensor gcn_conv(const Tensor& x, const GraphOperator& op, const Tensor& w, const Tensor& b);

enum class Aggregation { Paper, Normalized };
Aggregation parse_aggregation(const std::string& name);

/// f⊗((alpha / 2) ⊗ weighted midpoint of W ⊗ h_w over N(v)). In Paper mode the
/// weights are c_vw and the denominator is sum(2 c_vw gamma^2 - 1), which
/// throws DegenerateMidpoint near zero; Normalized mode uses c_vw / sum_w c_vw.
Tensor hyp_gcn_conv(const Tensor& h, const GraphOperator& op, const Tensor& w,
                    const Tensor& alpha, Curvature c, Aggregation mode = Aggregation::Paper,
                    Activation f = Activation::Identity);

// ---- modules ----------------------------------------------------------------

class Module {
 public:
  virtual ~Module() = default;
  virtual std::vector<Parameter*> parameters() = 0;
};

class Linear : public Module {
 public:
  Linear(std::size_t in, std::size_t out, Rng& rng, bool bias = true);
  Tensor forward(const Tensor& x) const;
  std::vector<Parameter*> parameters() override;

  Parameter weight;
  Parameter bias;  // undefined value when disabled
};

class HypLinear : public Module {
 public:
  HypLinear(std::size_t in, std::size_t out, Rng& rng);
  Tensor forward(const Tensor& x, Curvature c) const;
  std::vector<Parameter*> parameters() override;

  Parameter weight;
  Parameter bias;
};

class HypMLR : public Module {
 public:
  HypMLR(std::size_t dim, std::size_t classes, Rng& rng);
  Tensor forward(const Tensor& x, Curvature c);
  std::vector<Parameter*> parameters() override;

  Parameter offsets;  // p'_k rows
  Parameter normals;  // a'_k rows
  std::size_t clamp_count = 0;
};

class GCNConv : public Module {
 public:
  GCNConv(std::size_t in, std::size_t out, Rng& rng);
  Tensor forward(const Tensor& x, const GraphOperator& op) const;
  std::vector<Parameter*> parameters() override;

  Parameter weight;
  Parameter bias;
};

class HypGCNConv : public Module {
 public:
  HypGCNConv(std::size_t in, std::size_t out, Rng& rng, Aggregation mode = Aggregation::Paper,
             Activation f = Activation::Identity);
  Tensor forward(const Tensor& h, const GraphOperator& op, Curvature c) const;
  std::vector<Parameter*> parameters() override;

  Parameter weight;
  Parameter alpha;
  Aggregation mode;
  Activation activation;
};

class HypConv2d : public Module {
 public:
  HypConv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, Rng& rng,
            std::size_t stride = 1, std::size_t padding = 0);
  Tensor forward(const Tensor& f, Curvature c) const;
  std::vector<Parameter*> parameters() override;

  Parameter kernel;  // (k, k, in, out)
  std::size_t stride;
  std::size_t padding;
};

enum class Centering { FromMean, Literal };
enum class Dispersion { MeanDistance, FrechetVariance };

struct BatchNormConfig {
  double momentum = 0.1;
  double eps = 1e-5;
  Centering centering = Centering::FromMean;
  Dispersion dispersion = Dispersion::MeanDistance;
};

/// Batch normalization over all points of the input (every axis but the last).
class HypBatchNorm : public Module {
 public:
  explicit HypBatchNorm(std::size_t dim, BatchNormConfig cfg = {});
  Tensor forward(const Tensor& x, Curvature c, Mode mode);
  std::vector<Parameter*> parameters() override;

  Parameter log_gamma;  // gamma = exp(log_gamma)
  Parameter beta;       // tangent vector at the origin
  std::vector<double> running_mean;
  double running_sigma = 1.0;
  BatchNormConfig cfg;
};

class EuclidBatchNorm : public Module {
 public:
  explicit EuclidBatchNorm(std::size_t dim, double momentum = 0.1, double eps = 1e-5);
  Tensor forward(const Tensor& x, Mode mode);
  std::vector<Parameter*> parameters() override;

  Parameter gamma;
  Parameter beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum;
  double eps;
};

/// Columns standardized, rows scaled so the largest has norm 0.9 / sqrt(c)
/// (no scaling at c = 0), then mapped into the ball by exp0.
Tensor featurize_hyperbolic(const std::vector<double>& x, std::size_t rows, std::size_t cols,
                            Curvature c);

/// Columns standardized.
Tensor featurize_euclidean(const std::vector<double>& x, std::size_t rows, std::size_t cols);

}  // namespace hyp::nn
