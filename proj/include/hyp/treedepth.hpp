#pragma once

// The TreeDepth benchmark: a b-ary tree whose node features are a Gaussian
// random walk from the root and whose labels are node depths.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyp/graph.hpp"

namespace hyp::treedepth {

enum class Split : std::uint8_t { Train, Val, Test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct Meta {
  std::size_t max_d = 16;
  std::size_t b = 2;
  std::size_t dim = 50;
  double sigma0 = 1.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  graphs::Graph graph;
  std::vector<double> features;  // num_nodes x dim, row-major
  std::vector<int> labels;       // depth per node
  std::vector<Split> splits;     // empty until split() has run
  Meta meta;

  std::size_t num_nodes() const { return labels.size(); }
  std::size_t num_classes() const { return meta.max_d + 1; }
  /// Node ids of one split, ascending.
  std::vector<std::size_t> nodes_in(Split s) const;
};

inline constexpr std::size_t kDefaultNodeCap = std::size_t{1} << 24;

/// (b^(max_d+1) - 1) / (b - 1), or max_d + 1 for b = 1. Throws UsageError
/// when the count exceeds `cap`.
std::size_t node_count(std::size_t max_d, std::size_t b, std::size_t cap = kDefaultNodeCap);

/// Breadth-first generation. Node ids follow generation order, so the
/// children of node i are b*i+1 .. b*i+b. Each child feature is its parent's
/// plus sigma0 times a standard normal vector drawn coordinate by coordinate
/// from Rng(seed). Features are not normalized.
Dataset generate(const Meta& meta, std::size_t cap = kDefaultNodeCap);

/// Subtracts the column means, then divides by the largest row norm. Rows
/// that are all identical become zero.
void center_normalize(std::vector<double>& features, std::size_t dim);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// Per-depth sizes: train = clamp(n/3, 1, 100), val = min(n/3, 50) with
/// train + val <= n, test the rest.
SplitCounts split_counts(std::size_t n);

/// Draws each depth's train and val members uniformly without replacement
/// (Fisher-Yates on Rng(seed)); everything else is test.
std::vector<Split> split(const Dataset& ds, std::uint64_t seed);

/// generate + center_normalize + split, with the split seeded by meta.seed.
Dataset make(const Meta& meta, std::size_t cap = kDefaultNodeCap);

/// Writes meta.json, edges.tsv, features.tsv, labels.tsv and splits.tsv
/// into `dir`, creating it when missing.
void save_bundle(const Dataset& ds, const std::filesystem::path& dir);

/// Reads a bundle written by save_bundle. Throws ParseError naming the file
/// and line on malformed or missing input.
Dataset load_bundle(const std::filesystem::path& dir);

}  // namespace hyp::treedepth
