#include "hyp/treedepth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hyp/errors.hpp"
#include "hyp/rng.hpp"

namespace hyp::treedepth {

namespace fs = std::filesystem;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw UsageError("unknown split '" + s + "'");
}

std::vector<std::size_t> Dataset::nodes_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

std::size_t node_count(std::size_t max_d, std::size_t b, std::size_t cap) {
  if (b == 0) throw UsageError("branching factor must be >= 1");
  std::size_t level = 1;
  std::size_t total = 0;
  for (std::size_t d = 0; d <= max_d; ++d) {
    total += level;
    if (total > cap) throw UsageError("tree exceeds node cap of " + std::to_string(cap));
    if (d < max_d) {
      if (level > cap / b) throw UsageError("tree exceeds node cap of " + std::to_string(cap));
      level *= b;
    }
  }
  return total;
}

Dataset generate(const Meta& meta, std::size_t cap) {
  if (meta.dim == 0) throw UsageError("feature dimension must be >= 1");
  if (!(meta.sigma0 >= 0.0) || !std::isfinite(meta.sigma0)) throw UsageError("sigma0 must be finite and >= 0");
  const std::size_t n = node_count(meta.max_d, meta.b, cap);
  const std::size_t dim = meta.dim;

  Dataset ds;
  ds.meta = meta;
  ds.features.assign(n * dim, 0.0);
  ds.labels.assign(n, 0);
  std::vector<graphs::Edge> edges;
  edges.reserve(n - 1);

  Rng rng(meta.seed);
  // Heap order is breadth-first order, so children come after parents.
  for (std::size_t child = 1; child < n; ++child) {
    const std::size_t parent = (child - 1) / meta.b;
    ds.labels[child] = ds.labels[parent] + 1;
    edges.emplace_back(parent, child);
    const double* p = &ds.features[parent * dim];
    double* x = &ds.features[child * dim];
    for (std::size_t k = 0; k < dim; ++k) x[k] = p[k] + meta.sigma0 * rng.normal();
  }
  ds.graph = graphs::Graph::from_edges(n, edges);
  return ds;
}

void center_normalize(std::vector<double>& features, std::size_t dim) {
  if (dim == 0 || features.size() % dim != 0) throw UsageError("feature matrix shape mismatch");
  const std::size_t n = features.size() / dim;
  if (n == 0) throw UsageError("center_normalize needs at least one row");
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim; ++k) mean[k] += features[i * dim + k];
  for (double& m : mean) m /= static_cast<double>(n);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      double& v = features[i * dim + k];
      v -= mean[k];
      sq += v * v;
    }
    max_norm = std::max(max_norm, std::sqrt(sq));
  }
  if (max_norm == 0.0) {
    std::fill(features.begin(), features.end(), 0.0);
    return;
  }
  for (double& v : features) v /= max_norm;
}

SplitCounts split_counts(std::size_t n) {
  SplitCounts s;
  if (n == 0) return s;
  const std::size_t third = n / 3;
  s.train = std::clamp<std::size_t>(third, 1, 100);
  s.val = std::min<std::size_t>({third, 50, n - s.train});
  s.test = n - s.train - s.val;
  return s;
}

std::vector<Split> split(const Dataset& ds, std::uint64_t seed) {
  const std::size_t classes = ds.num_classes();
  std::vector<std::vector<std::size_t>> by_depth(classes);
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    const int d = ds.labels[i];
    if (d < 0 || static_cast<std::size_t>(d) >= classes) throw UsageError("label out of range");
    by_depth[static_cast<std::size_t>(d)].push_back(i);
  }
  std::vector<Split> out(ds.labels.size(), Split::Test);
  Rng rng(seed);
  for (auto& members : by_depth) {
    const SplitCounts c = split_counts(members.size());
    const std::size_t chosen = c.train + c.val;
    // Partial Fisher-Yates: the first `chosen` slots are a uniform sample.
    for (std::size_t i = 0; i < chosen; ++i) {
      const std::size_t j = i + rng.below(members.size() - i);
      std::swap(members[i], members[j]);
    }
    for (std::size_t i = 0; i < chosen; ++i) out[members[i]] = i < c.train ? Split::Train : Split::Val;
  }
  return out;
}

Dataset make(const Meta& meta, std::size_t cap) {
  Dataset ds = generate(meta, cap);
  center_normalize(ds.features, meta.dim);
  ds.splits = split(ds, meta.seed);
  return ds;
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw UsageError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError(p.string(), 0, "cannot open");
  return in;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

// Reads non-blank lines, keeping the 1-based line number of each.
std::vector<std::pair<std::size_t, std::string>> read_lines(const fs::path& p) {
  auto in = open_in(p);
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!blank(line)) out.emplace_back(no, line);
  }
  return out;
}

}  // namespace

void save_bundle(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t n = ds.num_nodes();
  const std::size_t dim = ds.meta.dim;
  if (ds.features.size() != n * dim) throw UsageError("feature matrix shape mismatch");
  if (ds.splits.size() != n) throw UsageError("dataset has no split");

  nlohmann::ordered_json meta = {
      {"num_nodes", n},          {"num_edges", ds.graph.num_edges()}, {"num_classes", ds.num_classes()},
      {"feature_dim", dim},      {"max_d", ds.meta.max_d},            {"b", ds.meta.b},
      {"sigma0", ds.meta.sigma0}, {"seed", ds.meta.seed},
  };
  open_out(dir / "meta.json") << meta.dump(2) << '\n';

  {
    auto out = open_out(dir / "edges.tsv");
    for (const auto& [u, v] : ds.graph.edges()) out << u << '\t' << v << '\n';
  }
  {
    auto out = open_out(dir / "features.tsv");
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.features[i * dim + k]);
        if (k) out << '\t';
        out << buf;
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "labels.tsv");
    for (int l : ds.labels) out << l << '\n';
  }
  {
    auto out = open_out(dir / "splits.tsv");
    for (Split s : ds.splits) out << to_string(s) << '\n';
  }
}

Dataset load_bundle(const fs::path& dir) {
  Dataset ds;
  const fs::path meta_path = dir / "meta.json";
  std::size_t n = 0;
  std::size_t num_edges = 0;
  std::size_t num_classes = 0;
  {
    auto in = open_in(meta_path);
    nlohmann::json j;
    try {
      in >> j;
      n = j.at("num_nodes").get<std::size_t>();
      num_edges = j.at("num_edges").get<std::size_t>();
      num_classes = j.at("num_classes").get<std::size_t>();
      ds.meta.dim = j.at("feature_dim").get<std::size_t>();
      ds.meta.max_d = j.at("max_d").get<std::size_t>();
      ds.meta.b = j.at("b").get<std::size_t>();
      ds.meta.sigma0 = j.at("sigma0").get<double>();
      ds.meta.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string(), 1, e.what());
    }
    if (num_classes != ds.meta.max_d + 1) throw ParseError(meta_path.string(), 1, "num_classes != max_d + 1");
    if (ds.meta.dim == 0) throw ParseError(meta_path.string(), 1, "feature_dim must be >= 1");
  }

  const fs::path edges_path = dir / "edges.tsv";
  std::vector<graphs::Edge> edges;
  for (const auto& [no, line] : read_lines(edges_path)) {
    std::istringstream f(line);
    long long u = -1;
    long long v = -1;
    std::string extra;
    if (!(f >> u >> v) || (f >> extra)) throw ParseError(edges_path.string(), no, "expected two node ids");
    if (u < 0 || v <= u || static_cast<std::size_t>(v) >= n)
      throw ParseError(edges_path.string(), no, "edge must satisfy 0 <= u < v < num_nodes");
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
  }
  if (edges.size() != num_edges)
    throw ParseError(edges_path.string(), edges.size(), "edge count disagrees with meta.json");
  ds.graph = graphs::Graph::from_edges(n, edges);

  const fs::path feat_path = dir / "features.tsv";
  const auto feat_lines = read_lines(feat_path);
  if (feat_lines.size() != n)
    throw ParseError(feat_path.string(), feat_lines.size(), "row count disagrees with meta.json");
  ds.features.reserve(n * ds.meta.dim);
  for (const auto& [no, line] : feat_lines) {
    std::istringstream f(line);
    std::string tok;
    std::size_t cols = 0;
    while (f >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError(feat_path.string(), no, "bad number '" + tok + "'");
      ds.features.push_back(v);
      ++cols;
    }
    if (cols != ds.meta.dim) throw ParseError(feat_path.string(), no, "expected feature_dim fields");
  }

  const fs::path label_path = dir / "labels.tsv";
  const auto label_lines = read_lines(label_path);
  if (label_lines.size() != n)
    throw ParseError(label_path.string(), label_lines.size(), "row count disagrees with meta.json");
  for (const auto& [no, line] : label_lines) {
    std::istringstream f(line);
    long long l = -1;
    std::string extra;
    if (!(f >> l) || (f >> extra) || l < 0 || static_cast<std::size_t>(l) >= num_classes)
      throw ParseError(label_path.string(), no, "expected a label in [0, num_classes)");
    ds.labels.push_back(static_cast<int>(l));
  }

  const fs::path split_path = dir / "splits.tsv";
  const auto split_lines = read_lines(split_path);
  if (split_lines.size() != n)
    throw ParseError(split_path.string(), split_lines.size(), "row count disagrees with meta.json");
  for (const auto& [no, line] : split_lines) {
    std::istringstream f(line);
    std::string s;
    f >> s;
    if (s != "train" && s != "val" && s != "test")
      throw ParseError(split_path.string(), no, "expected train, val or test");
    ds.splits.push_back(parse_split(s));
  }
  return ds;
}

}  // namespace hyp::treedepth
