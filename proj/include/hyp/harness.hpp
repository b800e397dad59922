#pragma once

// Model assembly, training and evaluation for the node-classification and
// toy image experiments.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyp/layers.hpp"
#include "hyp/treedepth.hpp"

namespace hyp::harness {

using ad::Tensor;
using nn::Mode;

enum class ModelKind { GCN, HypGCN, HypCNN };
enum class Head { None, EuclidMLR, HypMLR };

ModelKind parse_model_kind(const std::string& s);
Head parse_head(const std::string& s);
std::string to_string(ModelKind k);
std::string to_string(Head h);

struct ModelSpec {
  ModelKind kind = ModelKind::HypGCN;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 16;
  std::size_t num_classes = 0;
  Head head = Head::HypMLR;
  /// Extra (Hyp)Linear(hidden -> hidden) in front of the head.
  bool linear_before_head = true;
  /// Applied between the GCN layers (gcn) or in front of the head (hypgcn).
  nn::Activation nonlinearity = nn::Activation::ReLU;
  double curvature = 1.0;
  double dropout = 0.0;
  double initial_alpha = 2.0;
  nn::Aggregation aggregation = nn::Aggregation::Paper;
  /// hypcnn only: input channels, image side and whether HypBatchNorm is used.
  std::size_t channels = 1;
  std::size_t image_size = 8;
  bool batch_norm = true;
};

/// Defaults per model: gcn has a plain Linear head, hypgcn a HypLinear
/// followed by HypMLR.
ModelSpec default_spec(ModelKind kind, std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t num_classes);

/// Full-graph inputs for node classification.
struct GraphTask {
  std::vector<double> features;  // num_nodes x feature_dim
  std::size_t feature_dim = 0;
  nn::GraphOperator op;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::vector<std::size_t> train, val, test;

  std::size_t num_nodes() const { return labels.size(); }
};

GraphTask graph_task(const treedepth::Dataset& ds);

class Model {
 public:
  virtual ~Model() = default;
  virtual std::vector<ad::Parameter*> parameters() = 0;
  const ModelSpec& spec() const { return spec_; }
  std::size_t parameter_count();

 protected:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  ModelSpec spec_;
};

/// gcn:    GCNConv(in->h) f dropout GCNConv(h->h') [f dropout Linear(h->K)]
/// hypgcn: HypGCNConv(in->h) HypGCNConv(h->h') [f HypDropout HypLinear(h->h)] head
/// where h' = h when a head or linear layer follows, K otherwise.
class GraphModel : public Model {
 public:
  GraphModel(ModelSpec spec, Rng& init_rng);

  /// Maps raw node features to the model's input space.
  Tensor prepare(const GraphTask& task) const;
  /// Logits (num_nodes x K) from prepared inputs.
  Tensor forward(const Tensor& x, const nn::GraphOperator& op, Mode mode, Rng& rng);
  std::vector<ad::Parameter*> parameters() override;

  std::vector<std::string> layer_names() const;

 private:
  std::unique_ptr<nn::GCNConv> gcn1_, gcn2_;
  std::unique_ptr<nn::HypGCNConv> hgcn1_, hgcn2_;
  std::unique_ptr<nn::Linear> linear_;
  std::unique_ptr<nn::HypLinear> hyp_linear_;
  std::unique_ptr<nn::Linear> euclid_head_;
  std::unique_ptr<nn::HypMLR> hyp_head_;
};

/// Rows of `u` are orthonormal when rows <= cols, columns otherwise.
std::vector<double> orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

/// HypConv(C->8, 3x3, pad 1) [HypBN] HypMaxPool(2) HypConv(8->8, 3x3, pad 1)
/// HypAvgPool(global) HypMLR(8->K). Kernels are orthogonally initialized.
class HypCNN : public Model {
 public:
  static constexpr std::size_t kWidth = 8;

  HypCNN(ModelSpec spec, Rng& init_rng);

  /// NHWC images with values in the tangent space at the origin.
  Tensor forward(const Tensor& images, Mode mode);
  std::vector<ad::Parameter*> parameters() override;

 private:
  std::unique_ptr<nn::HypConv2d> conv1_, conv2_;
  std::unique_ptr<nn::HypBatchNorm> bn_;
  std::unique_ptr<nn::HypMLR> mlr_;
};

std::unique_ptr<GraphModel> build_graph_model(const ModelSpec& spec, std::uint64_t seed);
std::unique_ptr<HypCNN> build_cnn(const ModelSpec& spec, std::uint64_t seed);

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  std::size_t epochs = 500;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  /// Image task only.
  std::size_t batch_size = 128;
  /// Image task only: stop once test accuracy reaches this value.
  std::optional<double> target_accuracy = std::nullopt;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct Metrics {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double test_acc = 0.0;
  bool stopped_early = false;
  /// Image task: first epoch whose test accuracy reached the target.
  std::optional<std::size_t> epochs_to_target;
  double seconds = 0.0;  // not serialized

  /// One JSON object per epoch, then a summary object with "summary": true.
  void write_jsonl(std::ostream& out) const;
};

/// Fraction of `rows` whose argmax logit (lowest index on ties) equals the
/// label. Throws UsageError when `rows` is empty.
double accuracy(const Tensor& logits, const std::vector<int>& labels, const std::vector<std::size_t>& rows);

/// Evaluation-mode accuracy of a graph model on `rows`.
double evaluate(GraphModel& model, const GraphTask& task, const std::vector<std::size_t>& rows);

/// Full-batch Adam with early stopping on validation loss. The parameters of
/// the best epoch are restored before the test evaluation. Throws
/// NumericalError naming the epoch when the training loss is not finite.
Metrics train(GraphModel& model, const GraphTask& task, const TrainConfig& cfg);

struct ImageSet {
  std::vector<double> pixels;  // N x H x W x C
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  Tensor batch(const std::vector<std::size_t>& rows) const;
};

/// Two classes: a horizontal or a vertical bar of height 1 at a random offset
/// on a `background` level with Gaussian pixel noise.
ImageSet bar_images(std::size_t n, std::uint64_t seed, double noise = 0.3, double background = 0.0,
                    std::size_t side = 8);

/// Mini-batch Adam for `cfg.epochs` epochs, shuffling with cfg.seed. The val
/// columns of each record hold test-set loss and accuracy.
Metrics train(HypCNN& model, const ImageSet& train_set, const ImageSet& test_set, const TrainConfig& cfg);

/// CIFAR-10 binary batch: records of 1 label byte + 3072 pixel bytes (R, G
/// and B planes, row-major). Pixels are scaled to [0, 1] and stored NHWC.
ImageSet read_cifar_batch(const std::filesystem::path& path);

}  // namespace hyp::harness
