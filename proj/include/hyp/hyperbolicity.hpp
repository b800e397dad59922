#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hyp/graph.hpp"

namespace hyp::graphs {

/// Dense all-pairs hop distances.
class DistanceMatrix {
 public:
  using Value = std::uint16_t;
  static constexpr Value kUnreachable = std::numeric_limits<Value>::max();

  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, kUnreachable) {}

  std::size_t size() const noexcept { return n_; }
  Value operator()(std::size_t u, std::size_t v) const { return d_[u * n_ + v]; }
  Value& operator()(std::size_t u, std::size_t v) { return d_[u * n_ + v]; }
  std::span<const Value> row(std::size_t u) const { return {d_.data() + u * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<Value> d_;
};

/// One BFS per node.
DistanceMatrix bfs_all_pairs(const Graph& g);

/// (S1 - S2) / 2 over the three pairings of {u, v, w, x}.
double delta_quadruple(const DistanceMatrix& d, std::size_t u, std::size_t v, std::size_t w,
                       std::size_t x);

struct HyperbolicityReport {
  std::vector<double> component_delta;
  std::vector<std::size_t> component_size;  // same order as connected_components()
  double weighted_delta = 0.0;              // sum of (size_i / n) * delta_i

  /// The graph's delta. Throws UsageError for a disconnected graph.
  double delta() const;
  /// Delta of the largest component (first one on ties).
  double largest_component_delta() const;
  std::size_t largest_component_size() const;
};

inline constexpr std::size_t kExactNodeCap = 512;

/// Brute-force maximum over all quadruples u < v < w < x of each component.
/// Throws UsageError when the graph has more than `node_cap` nodes.
HyperbolicityReport hyperbolicity_exact(const Graph& g, std::size_t node_cap = kExactNodeCap);

/// Same values as hyperbolicity_exact. Each component is split into
/// biconnected blocks and each block is searched over far-apart pairs in
/// decreasing distance order with upper-bound cutoffs.
HyperbolicityReport hyperbolicity_pruned(const Graph& g);

/// Biconnected blocks (node sets, each sorted) of a graph. Bridges form
/// two-node blocks; isolated nodes form no block.
std::vector<std::vector<std::size_t>> biconnected_blocks(const Graph& g);

}  // namespace hyp::graphs
