#pragma once

#include <cstdint>
#include <string>

#include "hyp/graph.hpp"

namespace hyp::graphs {

enum class GraphKind { BA, NWS, SBM, Tree };

GraphKind parse_graph_kind(const std::string& name);
std::string to_string(GraphKind kind);

struct GeneratorParams {
  std::size_t m = 5;      // BA: edges attached per new node
  std::size_t k = 4;      // NWS: ring neighbors (even)
  double p = 0.15;        // NWS: shortcut probability per ring edge
  double p_in = 0.3;      // SBM
  double p_out = -1.0;    // SBM; negative means 2 / n
};

/// Preferential attachment grown from an m-node clique; C(m,2) + m(n-m) edges.
Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed);

/// Ring lattice with k neighbors per node plus, for each lattice edge, a
/// random shortcut from its first endpoint with probability p.
Graph newman_watts_strogatz(std::size_t n, std::size_t k, double p, std::uint64_t seed);

/// Community sizes drawn in [ceil(ln n), 15]; Bernoulli edges with p_in
/// inside and p_out across communities. `community` receives each node's block.
Graph stochastic_block(std::size_t n, double p_in, double p_out, std::uint64_t seed,
                       std::vector<std::size_t>* community = nullptr);

/// Uniform random labeled tree decoded from a Prüfer sequence.
Graph random_tree(std::size_t n, std::uint64_t seed);

Graph generate(GraphKind kind, std::size_t n, const GeneratorParams& params, std::uint64_t seed);

}  // namespace hyp::graphs
