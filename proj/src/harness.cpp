#include "hyp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "hyp/ball_tensor.hpp"
#include "hyp/errors.hpp"
#include "hyp/optim.hpp"

namespace hyp::harness {

namespace {

using ad::Parameter;
using nn::Activation;

constexpr std::uint64_t kDropoutStream = 0x9e3779b97f4a7c15ULL;

void append(std::vector<Parameter*>& out, nn::Module* m) {
  if (!m) return;
  for (Parameter* p : m->parameters()) out.push_back(p);
}

std::vector<std::vector<double>> snapshot(const std::vector<Parameter*>& ps) {
  std::vector<std::vector<double>> out;
  out.reserve(ps.size());
  for (const Parameter* p : ps) out.emplace_back(p->value.data().begin(), p->value.data().end());
  return out;
}

void restore(const std::vector<Parameter*>& ps, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto dst = ps[i]->value.mutable_data();
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss))
    throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw UsageError("learning rate must be finite and >= 0");
  if (!(cfg.weight_decay >= 0.0)) throw UsageError("weight decay must be >= 0");
  if (cfg.patience < 1) throw UsageError("patience must be >= 1");
  if (cfg.epochs < 1) throw UsageError("epoch cap must be >= 1");
}

}  // namespace

ModelKind parse_model_kind(const std::string& s) {
  if (s == "gcn") return ModelKind::GCN;
  if (s == "hypgcn") return ModelKind::HypGCN;
  if (s == "hypcnn") return ModelKind::HypCNN;
  throw UsageError("unknown model '" + s + "'");
}

Head parse_head(const std::string& s) {
  if (s == "none") return Head::None;
  if (s == "euclid_mlr") return Head::EuclidMLR;
  if (s == "hyp_mlr") return Head::HypMLR;
  throw UsageError("unknown head '" + s + "'");
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::GCN:
      return "gcn";
    case ModelKind::HypGCN:
      return "hypgcn";
    case ModelKind::HypCNN:
      return "hypcnn";
  }
  return "?";
}

std::string to_string(Head h) {
  switch (h) {
    case Head::None:
      return "none";
    case Head::EuclidMLR:
      return "euclid_mlr";
    case Head::HypMLR:
      return "hyp_mlr";
  }
  return "?";
}

ModelSpec default_spec(ModelKind kind, std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes) {
  ModelSpec s;
  s.kind = kind;
  s.input_dim = input_dim;
  s.hidden_dim = hidden_dim;
  s.num_classes = num_classes;
  s.linear_before_head = true;
  switch (kind) {
    case ModelKind::GCN:
      s.head = Head::None;
      break;
    case ModelKind::HypGCN:
      s.head = Head::HypMLR;
      break;
    case ModelKind::HypCNN:
      s.head = Head::HypMLR;
      s.linear_before_head = false;
      s.nonlinearity = Activation::Identity;
      s.hidden_dim = HypCNN::kWidth;
      break;
  }
  return s;
}

GraphTask graph_task(const treedepth::Dataset& ds) {
  if (ds.splits.size() != ds.num_nodes()) throw UsageError("dataset has no split");
  GraphTask t;
  t.features = ds.features;
  t.feature_dim = ds.meta.dim;
  t.op = nn::GraphOperator::from_graph(ds.graph);
  t.labels = ds.labels;
  t.num_classes = ds.num_classes();
  t.train = ds.nodes_in(treedepth::Split::Train);
  t.val = ds.nodes_in(treedepth::Split::Val);
  t.test = ds.nodes_in(treedepth::Split::Test);
  return t;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

// ---- graph models ------------------------------------------------------------

GraphModel::GraphModel(ModelSpec spec, Rng& rng) : Model(std::move(spec)) {
  const ModelSpec& s = spec_;
  if (s.kind == ModelKind::HypCNN) throw UsageError("hypcnn is not a graph model");
  if (s.input_dim == 0 || s.hidden_dim == 0 || s.num_classes < 2)
    throw UsageError("graph model needs input_dim, hidden_dim >= 1 and at least two classes");
  if (!(s.dropout >= 0.0 && s.dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
  if (s.kind == ModelKind::HypGCN && s.head == Head::None && s.linear_before_head)
    throw UsageError("hypgcn with a linear layer needs an MLR head");

  const bool tail = s.head != Head::None || s.linear_before_head;
  const std::size_t second_out = tail ? s.hidden_dim : s.num_classes;
  if (s.kind == ModelKind::GCN) {
    gcn1_ = std::make_unique<nn::GCNConv>(s.input_dim, s.hidden_dim, rng);
    gcn2_ = std::make_unique<nn::GCNConv>(s.hidden_dim, second_out, rng);
    if (s.linear_before_head) {
      if (s.head == Head::None)
        linear_ = std::make_unique<nn::Linear>(s.hidden_dim, s.num_classes, rng);
      else
        linear_ = std::make_unique<nn::Linear>(s.hidden_dim, s.hidden_dim, rng);
    }
  } else {
    hgcn1_ = std::make_unique<nn::HypGCNConv>(s.input_dim, s.hidden_dim, rng, s.aggregation);
    hgcn2_ = std::make_unique<nn::HypGCNConv>(s.hidden_dim, second_out, rng, s.aggregation);
    for (auto* l : {hgcn1_.get(), hgcn2_.get()}) std::fill_n(l->alpha.value.mutable_data().begin(), 1, s.initial_alpha);
    if (s.linear_before_head) hyp_linear_ = std::make_unique<nn::HypLinear>(s.hidden_dim, s.hidden_dim, rng);
  }
  if (s.head == Head::EuclidMLR) euclid_head_ = std::make_unique<nn::Linear>(s.hidden_dim, s.num_classes, rng);
  if (s.head == Head::HypMLR) hyp_head_ = std::make_unique<nn::HypMLR>(s.hidden_dim, s.num_classes, rng);
}

std::vector<std::string> GraphModel::layer_names() const {
  const ModelSpec& s = spec_;
  auto dims = [](std::size_t a, std::size_t b) { return "(" + std::to_string(a) + "->" + std::to_string(b) + ")"; };
  std::vector<std::string> out;
  const bool tail = s.head != Head::None || s.linear_before_head;
  const std::size_t second_out = tail ? s.hidden_dim : s.num_classes;
  const std::string conv = s.kind == ModelKind::GCN ? "GCNConv" : "HypGCNConv";
  out.push_back(conv + dims(s.input_dim, s.hidden_dim));
  out.push_back(conv + dims(s.hidden_dim, second_out));
  if (!tail) return out;
  out.push_back(s.kind == ModelKind::GCN ? "Dropout" : "HypDropout");
  if (s.linear_before_head) {
    const std::size_t lin_out = s.kind == ModelKind::GCN && s.head == Head::None ? s.num_classes : s.hidden_dim;
    out.push_back((s.kind == ModelKind::GCN ? "Linear" : "HypLinear") + dims(s.hidden_dim, lin_out));
  }
  if (s.head == Head::HypMLR) out.push_back("HypMLR" + dims(s.hidden_dim, s.num_classes));
  if (s.head == Head::EuclidMLR) out.push_back("EuclidMLR" + dims(s.hidden_dim, s.num_classes));
  return out;
}

Tensor GraphModel::prepare(const GraphTask& task) const {
  if (task.feature_dim != spec_.input_dim) throw UsageError("feature dimension does not match the model");
  if (spec_.kind == ModelKind::GCN) return nn::featurize_euclidean(task.features, task.num_nodes(), task.feature_dim);
  return nn::featurize_hyperbolic(task.features, task.num_nodes(), task.feature_dim, ball::Curvature(spec_.curvature));
}

Tensor GraphModel::forward(const Tensor& x, const nn::GraphOperator& op, Mode mode, Rng& rng) {
  const ModelSpec& s = spec_;
  const ball::Curvature c(s.curvature);
  const bool tail = s.head != Head::None || s.linear_before_head;
  if (s.kind == ModelKind::GCN) {
    Tensor h = nn::activate(gcn1_->forward(x, op), s.nonlinearity);
    h = nn::dropout(h, s.dropout, mode, rng);
    h = gcn2_->forward(h, op);
    if (!tail) return h;
    h = nn::dropout(nn::activate(h, s.nonlinearity), s.dropout, mode, rng);
    if (linear_) h = linear_->forward(h);
    if (s.head == Head::None) return h;
    if (s.head == Head::EuclidMLR) return euclid_head_->forward(h);
    return hyp_head_->forward(bt::exp0(h, c), c);
  }
  Tensor h = hgcn2_->forward(hgcn1_->forward(x, op, c), op, c);
  if (!tail) return bt::log0(h, c);
  if (s.nonlinearity != Activation::Identity) h = bt::exp0(nn::activate(bt::log0(h, c), s.nonlinearity), c);
  h = nn::hyp_dropout(h, s.dropout, c, mode, rng);
  if (hyp_linear_) h = hyp_linear_->forward(h, c);
  if (s.head == Head::EuclidMLR) return euclid_head_->forward(bt::log0(h, c));
  return hyp_head_->forward(h, c);
}

std::vector<Parameter*> GraphModel::parameters() {
  std::vector<Parameter*> out;
  append(out, gcn1_.get());
  append(out, gcn2_.get());
  append(out, hgcn1_.get());
  append(out, hgcn2_.get());
  append(out, linear_.get());
  append(out, hyp_linear_.get());
  append(out, euclid_head_.get());
  append(out, hyp_head_.get());
  return out;
}

std::unique_ptr<GraphModel> build_graph_model(const ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return std::make_unique<GraphModel>(spec, rng);
}

// ---- image model ---------------------------------------------------------------

std::vector<double> orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  // Modified Gram-Schmidt on the shorter side of a Gaussian matrix.
  const bool by_rows = rows <= cols;
  const std::size_t k = by_rows ? rows : cols;
  const std::size_t len = by_rows ? cols : rows;
  std::vector<std::vector<double>> v(k, std::vector<double>(len));
  for (auto& row : v)
    for (double& x : row) x = rng.normal();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d = std::inner_product(v[i].begin(), v[i].end(), v[j].begin(), 0.0);
      for (std::size_t t = 0; t < len; ++t) v[i][t] -= d * v[j][t];
    }
    const double n = std::sqrt(std::inner_product(v[i].begin(), v[i].end(), v[i].begin(), 0.0));
    for (double& x : v[i]) x /= n;
  }
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t t = 0; t < len; ++t) (by_rows ? out[i * cols + t] : out[t * cols + i]) = v[i][t];
  return out;
}

namespace {

void orthogonal_kernel(nn::HypConv2d& conv, Rng& rng) {
  // Kernel (k, k, in, out) viewed as a (k*k*in) x out matrix.
  const auto& shape = conv.kernel.value.shape();
  const std::size_t fan = shape[0] * shape[1] * shape[2];
  const auto w = orthogonal(fan, shape[3], rng);
  std::copy(w.begin(), w.end(), conv.kernel.value.mutable_data().begin());
}

}  // namespace

HypCNN::HypCNN(ModelSpec spec, Rng& rng) : Model(std::move(spec)) {
  const ModelSpec& s = spec_;
  if (s.channels == 0 || s.num_classes < 2) throw UsageError("hypcnn needs channels and at least two classes");
  if (s.image_size < 2 || s.image_size % 2 != 0) throw UsageError("hypcnn needs an even image side >= 2");
  conv1_ = std::make_unique<nn::HypConv2d>(s.channels, kWidth, 3, rng, 1, 1);
  conv2_ = std::make_unique<nn::HypConv2d>(kWidth, kWidth, 3, rng, 1, 1);
  orthogonal_kernel(*conv1_, rng);
  orthogonal_kernel(*conv2_, rng);
  if (s.batch_norm) bn_ = std::make_unique<nn::HypBatchNorm>(kWidth);
  mlr_ = std::make_unique<nn::HypMLR>(kWidth, s.num_classes, rng);
}

Tensor HypCNN::forward(const Tensor& images, Mode mode) {
  const ball::Curvature c(spec_.curvature);
  if (images.rank() != 4 || images.dim(1) != spec_.image_size || images.dim(2) != spec_.image_size ||
      images.dim(3) != spec_.channels)
    throw UsageError("hypcnn input must be N x " + std::to_string(spec_.image_size) + " x " +
                     std::to_string(spec_.image_size) + " x " + std::to_string(spec_.channels));
  Tensor f = conv1_->forward(bt::exp0(images, c), c);
  if (bn_) f = bn_->forward(f, c, mode);
  f = nn::hyp_max_pool(f, 2, 2, c);
  f = conv2_->forward(f, c);
  const std::size_t side = spec_.image_size / 2;
  f = nn::hyp_avg_pool(f, side, side, c);
  return mlr_->forward(ad::reshape(f, {images.dim(0), kWidth}), c);
}

std::vector<Parameter*> HypCNN::parameters() {
  std::vector<Parameter*> out;
  append(out, conv1_.get());
  append(out, conv2_.get());
  append(out, bn_.get());
  append(out, mlr_.get());
  return out;
}

std::unique_ptr<HypCNN> build_cnn(const ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return std::make_unique<HypCNN>(spec, rng);
}

// ---- metrics --------------------------------------------------------------------

void Metrics::write_jsonl(std::ostream& out) const {
  for (const auto& e : epochs) {
    nlohmann::ordered_json j = {{"epoch", e.epoch},         {"train_loss", e.train_loss}, {"train_acc", e.train_acc},
                                {"val_loss", e.val_loss},   {"val_acc", e.val_acc}};
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json s = {{"summary", true},
                              {"epochs_run", epochs.size()},
                              {"best_epoch", best_epoch},
                              {"best_val_loss", best_val_loss},
                              {"stopped_early", stopped_early},
                              {"test_acc", test_acc}};
  if (epochs_to_target) s["epochs_to_target"] = *epochs_to_target;
  out << s.dump() << '\n';
}

double accuracy(const Tensor& logits, const std::vector<int>& labels, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw UsageError("accuracy over an empty mask");
  if (logits.rank() != 2) throw UsageError("logits must be a matrix");
  const std::size_t k = logits.dim(1);
  const auto v = logits.data();
  std::size_t hits = 0;
  for (std::size_t r : rows) {
    if (r >= logits.dim(0) || r >= labels.size()) throw UsageError("row out of range");
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (v[r * k + j] > v[r * k + best]) best = j;
    hits += static_cast<int>(best) == labels[r];
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double evaluate(GraphModel& model, const GraphTask& task, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw UsageError("evaluate over an empty mask");
  ad::NoRecordScope quiet;
  Rng unused(0);
  const Tensor logits = model.forward(model.prepare(task), task.op, Mode::Eval, unused);
  return accuracy(logits, task.labels, rows);
}

Metrics train(GraphModel& model, const GraphTask& task, const TrainConfig& cfg) {
  validate(cfg);
  if (task.train.empty() || task.val.empty()) throw UsageError("training needs non-empty train and val masks");
  const auto start = std::chrono::steady_clock::now();
  auto params = model.parameters();
  const ad::AdamConfig adam{.lr = cfg.lr, .weight_decay = cfg.weight_decay};
  Rng drop_rng(cfg.seed ^ kDropoutStream);
  const Tensor x = model.prepare(task);

  Metrics m;
  auto best = snapshot(params);
  m.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    {
      ad::Tape tape;
      ad::TapeScope scope(tape);
      const Tensor logits = model.forward(x, task.op, Mode::Train, drop_rng);
      const Tensor loss = ad::cross_entropy(logits, task.labels, task.train);
      rec.train_loss = loss.item();
      check_finite(rec.train_loss, epoch);
      rec.train_acc = accuracy(logits, task.labels, task.train);
      tape.backward(loss);
      adam_step(params, adam);
    }
    {
      ad::NoRecordScope quiet;
      const Tensor logits = model.forward(x, task.op, Mode::Eval, drop_rng);
      rec.val_loss = ad::cross_entropy(logits, task.labels, task.val).item();
      rec.val_acc = accuracy(logits, task.labels, task.val);
    }
    m.epochs.push_back(rec);
    // Parameters after this epoch's step are the ones that produced val_loss.
    if (rec.val_loss < m.best_val_loss) {
      m.best_val_loss = rec.val_loss;
      m.best_epoch = epoch;
      best = snapshot(params);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      m.stopped_early = true;
      break;
    }
  }
  restore(params, best);
  if (!task.test.empty()) m.test_acc = evaluate(model, task, task.test);
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

// ---- images ---------------------------------------------------------------------

Tensor ImageSet::batch(const std::vector<std::size_t>& rows) const {
  const std::size_t stride = height * width * channels;
  std::vector<double> out;
  out.reserve(rows.size() * stride);
  for (std::size_t r : rows) {
    if (r >= size()) throw UsageError("image index out of range");
    out.insert(out.end(), pixels.begin() + static_cast<std::ptrdiff_t>(r * stride),
               pixels.begin() + static_cast<std::ptrdiff_t>((r + 1) * stride));
  }
  return Tensor({rows.size(), height, width, channels}, std::move(out));
}

ImageSet bar_images(std::size_t n, std::uint64_t seed, double noise, double background, std::size_t side) {
  if (side < 3) throw UsageError("bar images need side >= 3");
  ImageSet s;
  s.height = s.width = side;
  s.channels = 1;
  s.pixels.assign(n * side * side, 0.0);
  s.labels.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const std::size_t at = rng.below(side);
    double* img = &s.pixels[i * side * side];
    for (std::size_t p = 0; p < side * side; ++p) img[p] = background + noise * rng.normal();
    for (std::size_t t = 0; t < side; ++t) img[label == 0 ? at * side + t : t * side + at] += 1.0;
    s.labels[i] = label;
  }
  return s;
}

Metrics train(HypCNN& model, const ImageSet& train_set, const ImageSet& test_set, const TrainConfig& cfg) {
  validate(cfg);
  if (train_set.size() == 0 || test_set.size() == 0) throw UsageError("empty image set");
  if (cfg.batch_size == 0) throw UsageError("batch size must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  auto params = model.parameters();
  const ad::AdamConfig adam{.lr = cfg.lr, .weight_decay = cfg.weight_decay};
  Rng shuffle(cfg.seed ^ kDropoutStream);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> test_rows(test_set.size());
  std::iota(test_rows.begin(), test_rows.end(), 0);
  const Tensor test_images = test_set.batch(test_rows);

  Metrics m;
  m.best_val_loss = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(b),
                                          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + cfg.batch_size)));
      std::vector<int> labels;
      for (std::size_t r : rows) labels.push_back(train_set.labels[r]);
      std::vector<std::size_t> local(rows.size());
      std::iota(local.begin(), local.end(), 0);
      ad::Tape tape;
      ad::TapeScope scope(tape);
      const Tensor logits = model.forward(train_set.batch(rows), Mode::Train);
      const Tensor loss = ad::cross_entropy(logits, labels);
      check_finite(loss.item(), epoch);
      loss_sum += loss.item() * static_cast<double>(rows.size());
      hits += static_cast<std::size_t>(std::lround(accuracy(logits, labels, local) * static_cast<double>(rows.size())));
      tape.backward(loss);
      adam_step(params, adam);
    }
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_acc = static_cast<double>(hits) / static_cast<double>(order.size());
    {
      ad::NoRecordScope quiet;
      const Tensor logits = model.forward(test_images, Mode::Eval);
      rec.val_loss = ad::cross_entropy(logits, test_set.labels).item();
      rec.val_acc = accuracy(logits, test_set.labels, test_rows);
    }
    m.epochs.push_back(rec);
    if (rec.val_loss < m.best_val_loss) {
      m.best_val_loss = rec.val_loss;
      m.best_epoch = epoch;
    }
    m.test_acc = rec.val_acc;
    if (cfg.target_accuracy && !m.epochs_to_target && rec.val_acc >= *cfg.target_accuracy) {
      m.epochs_to_target = epoch;
      break;
    }
  }
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

ImageSet read_cifar_batch(const std::filesystem::path& path) {
  constexpr std::size_t kSide = 32;
  constexpr std::size_t kPlane = kSide * kSide;
  constexpr std::size_t kRecord = 1 + 3 * kPlane;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % kRecord != 0)
    throw ParseError(path.string(), bytes.size() / kRecord + 1, "truncated record (expected 3073 bytes each)");
  ImageSet s;
  s.height = s.width = kSide;
  s.channels = 3;
  const std::size_t n = bytes.size() / kRecord;
  s.labels.resize(n);
  s.pixels.resize(n * 3 * kPlane);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = &bytes[i * kRecord];
    if (rec[0] > 9) throw ParseError(path.string(), i + 1, "label byte out of range");
    s.labels[i] = rec[0];
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t p = 0; p < kPlane; ++p) s.pixels[(i * kPlane + p) * 3 + ch] = rec[1 + ch * kPlane + p] / 255.0;
  }
  return s;
}

}  // namespace hyp::harness
