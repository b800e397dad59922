#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyp/sparse.hpp"

namespace hyp::graphs {

using Edge = std::pair<std::size_t, std::size_t>;

/// Simple undirected unweighted graph in compressed adjacency form.
/// Neighbor lists are sorted ascending and symmetric.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t num_nodes);

  /// Duplicate edges (in either orientation) are merged; self-loops and
  /// out-of-range endpoints throw UsageError.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges);

  std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return adjacency_.size() / 2; }
  std::span<const std::size_t> neighbors(std::size_t v) const;
  std::size_t degree(std::size_t v) const;
  bool has_edge(std::size_t u, std::size_t v) const;

  /// Each undirected edge once, as (u, v) with u < v, in lexicographic order.
  std::vector<Edge> edges() const;

  /// Subgraph on `nodes`; node i of the result is nodes[i].
  Graph induced(std::span<const std::size_t> nodes) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> adjacency_;
};

/// Self-loop-augmented symmetric normalization D^-1/2 (A + I) D^-1/2, with
/// degrees counted on A + I. Rows are in ascending column order.
SparseMatrix sym_norm_coeffs(const Graph& g);

/// Connected components, each sorted ascending, ordered by smallest member.
std::vector<std::vector<std::size_t>> connected_components(const Graph& g);

/// Reads the "u<TAB>v" edge-list format: 0-indexed, one undirected edge per
/// line, blank lines and lines starting with '#' ignored. The node count is
/// one more than the largest id unless `num_nodes` is larger.
Graph read_edge_list(std::istream& in, const std::string& source_name = "<stream>",
                     std::size_t num_nodes = 0);
Graph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);
void write_edge_list_file(const std::string& path, const Graph& g);

}  // namespace hyp::graphs
