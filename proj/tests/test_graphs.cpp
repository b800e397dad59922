#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hyp/errors.hpp"
#include "hyp/generators.hpp"
#include "hyp/hyperbolicity.hpp"
#include "hyp/rng.hpp"
#include "suites.hpp"

using namespace hyp;
using namespace hyp::graphs;

namespace {

Graph path(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e);
}

Graph cycle(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, e);
}

Graph complete(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

Graph grid(std::size_t k) {
  std::vector<Edge> e;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      if (c + 1 < k) e.emplace_back(r * k + c, r * k + c + 1);
      if (r + 1 < k) e.emplace_back(r * k + c, (r + 1) * k + c);
    }
  return Graph::from_edges(k * k, e);
}

Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

// Floyd-Warshall on an adjacency matrix, with a large value for "no path".
std::vector<int> floyd_warshall(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const int inf = 1 << 20;
  std::vector<int> d(n * n, inf);
  for (std::size_t i = 0; i < n; ++i) {
    d[i * n + i] = 0;
    for (std::size_t j : g.neighbors(i)) d[i * n + j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  return d;
}

// Independent four-point search: all ordered quadruples, delta from the
// definition as half the gap between the largest and middle pairing sums.
double brute_force_delta(const Graph& g) {
  const auto d = floyd_warshall(g);
  const std::size_t n = g.num_nodes();
  auto D = [&](std::size_t a, std::size_t b) { return d[a * n + b]; };
  int best = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t e = 0; e < n; ++e) {
          std::vector<int> s{D(a, b) + D(c, e), D(a, c) + D(b, e), D(a, e) + D(b, c)};
          std::sort(s.rbegin(), s.rend());
          best = std::max(best, s[0] - s[1]);
        }
  return best / 2.0;
}

}  // namespace

TEST(Graph, DedupesAndSorts) {
  std::vector<Edge> e{{2, 0}, {0, 2}, {1, 0}, {0, 1}};
  const Graph g = Graph::from_edges(3, e);
  EXPECT_EQ(g.num_edges(), 2u);
  ASSERT_EQ(g.neighbors(0).size(), 2u);
  EXPECT_EQ(g.neighbors(0)[0], 1u);
  EXPECT_EQ(g.neighbors(0)[1], 2u);
  EXPECT_TRUE(g.has_edge(2, 0));
}

TEST(Graph, RejectsSelfLoopAndRange) {
  std::vector<Edge> loop{{1, 1}};
  EXPECT_THROW(Graph::from_edges(3, loop), UsageError);
  std::vector<Edge> far{{0, 3}};
  EXPECT_THROW(Graph::from_edges(3, far), UsageError);
}

TEST(Graph, EdgeListRoundTrip) {
  const Graph g = barabasi_albert(40, 3, 7);
  std::stringstream ss;
  write_edge_list(ss, g);
  const Graph h = read_edge_list(ss);
  EXPECT_EQ(h.edges(), g.edges());
}

TEST(Graph, EdgeListCommentsAndErrors) {
  std::istringstream ok("# header\n0\t1\n\n1\t2\n");
  EXPECT_EQ(read_edge_list(ok).num_edges(), 2u);
  std::istringstream bad("0\t1\n1 x\n");
  try {
    read_edge_list(bad, "edges.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("edges.tsv:2"), std::string::npos);
  }
}

TEST(Distances, PathAndDisconnected) {
  const auto d = bfs_all_pairs(path(3));
  EXPECT_EQ(d(0, 2), 2);
  const auto d2 = bfs_all_pairs(Graph(2));
  EXPECT_EQ(d2(0, 1), DistanceMatrix::kUnreachable);
}

TEST(Distances, MatchesFloydWarshall) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = erdos_renyi(10 + seed * 2, 0.08, seed);
    const auto d = bfs_all_pairs(g);
    const auto fw = floyd_warshall(g);
    const std::size_t n = g.num_nodes();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (fw[i * n + j] >= (1 << 20))
          EXPECT_EQ(d(i, j), DistanceMatrix::kUnreachable);
        else
          EXPECT_EQ(d(i, j), fw[i * n + j]);
      }
  }
}

TEST(Components, Basics) {
  EXPECT_EQ(connected_components(cycle(6)).size(), 1u);
  EXPECT_EQ(connected_components(Graph(4)).size(), 4u);
  std::vector<Edge> e{{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}};
  const auto comps = connected_components(Graph::from_edges(6, e));
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0], (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(comps[1], (std::vector<std::size_t>{3, 4, 5}));
}

TEST(Delta, Quadruples) {
  const auto dp = bfs_all_pairs(path(6));
  EXPECT_EQ(delta_quadruple(dp, 0, 2, 3, 5), 0.0);
  const auto dc = bfs_all_pairs(cycle(4));
  EXPECT_EQ(delta_quadruple(dc, 0, 1, 2, 3), 1.0);
  EXPECT_EQ(delta_quadruple(dc, 0, 0, 1, 2), 0.0);
  const auto dd = bfs_all_pairs(Graph(4));
  EXPECT_THROW(delta_quadruple(dd, 0, 1, 2, 3), UsageError);
}

TEST(Delta, ExactKnownGraphs) {
  EXPECT_EQ(hyperbolicity_exact(complete(5)).delta(), 0.0);
  EXPECT_EQ(hyperbolicity_exact(cycle(4)).delta(), 1.0);
  EXPECT_EQ(hyperbolicity_exact(grid(3)).delta(), 2.0);
  EXPECT_EQ(hyperbolicity_exact(random_tree(100, 3)).delta(), 0.0);
  EXPECT_THROW(hyperbolicity_exact(Graph(513)), UsageError);
}

TEST(Delta, DisconnectedReport) {
  std::vector<Edge> e{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}};
  const auto r = hyperbolicity_exact(Graph::from_edges(6, e));
  ASSERT_EQ(r.component_delta.size(), 2u);
  EXPECT_EQ(r.component_delta[0], 1.0);
  EXPECT_EQ(r.component_size[0], 4u);
  EXPECT_DOUBLE_EQ(r.weighted_delta, 4.0 / 6.0);
  EXPECT_THROW(r.delta(), UsageError);
  EXPECT_EQ(r.largest_component_delta(), 1.0);
}

TEST(Delta, ExactMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 8 + seed % 33;
    const Graph g = erdos_renyi(n, 2.5 / n + 0.05, 100 + seed);
    const auto r = hyperbolicity_exact(g);
    // Brute force per component on the induced subgraph.
    const auto comps = connected_components(g);
    for (std::size_t i = 0; i < comps.size(); ++i)
      EXPECT_EQ(r.component_delta[i], brute_force_delta(g.induced(comps[i]))) << "seed " << seed;
  }
}

TEST(Delta, PrunedMatchesExact) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 12 + seed % 53;
    Graph g;
    switch (seed % 5) {
      case 0: g = barabasi_albert(n, 1 + seed % 3, seed); break;
      case 1: g = newman_watts_strogatz(n, 2 + 2 * (seed % 2), 0.15, seed); break;
      case 2: g = stochastic_block(n, 0.3, 2.0 / n, seed); break;
      case 3: g = random_tree(n, seed); break;
      default: g = erdos_renyi(n, 3.0 / n, seed); break;
    }
    const auto exact = hyperbolicity_exact(g);
    const auto pruned = hyperbolicity_pruned(g);
    EXPECT_EQ(pruned.component_delta, exact.component_delta) << "seed " << seed;
    EXPECT_EQ(pruned.component_size, exact.component_size);
    ++checked;
  }
  EXPECT_EQ(checked, 200u);
}

TEST(Delta, PrunedOnKnownGraphs) {
  EXPECT_EQ(hyperbolicity_pruned(random_tree(1000, 5)).delta(), 0.0);
  std::vector<Edge> star;
  for (std::size_t i = 1; i < 10; ++i) star.emplace_back(0, i);
  EXPECT_EQ(hyperbolicity_pruned(Graph::from_edges(10, star)).delta(), 0.0);
  EXPECT_EQ(hyperbolicity_pruned(grid(3)).delta(), 2.0);
  EXPECT_EQ(hyperbolicity_pruned(cycle(4)).delta(), 1.0);
  EXPECT_EQ(hyperbolicity_pruned(complete(6)).delta(), 0.0);
}

TEST(Delta, BoundedByHalfDiameter) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = barabasi_albert(60, 2, seed);
    const auto d = bfs_all_pairs(g);
    int diam = 0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
      for (auto x : d.row(i)) diam = std::max<int>(diam, x);
    EXPECT_LE(hyperbolicity_pruned(g).delta(), diam / 2.0);
  }
}

TEST(Blocks, BridgesAndCycles) {
  std::vector<Edge> e{{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}, {4, 5}, {5, 3}};
  auto blocks = biconnected_blocks(Graph::from_edges(6, e));
  std::sort(blocks.begin(), blocks.end());
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[0], (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(blocks[1], (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(blocks[2], (std::vector<std::size_t>{3, 4, 5}));
}

TEST(SymNorm, Coefficients) {
  const auto iso = sym_norm_coeffs(Graph(1));
  EXPECT_EQ(iso.values, std::vector<double>{1.0});
  const auto two = sym_norm_coeffs(path(2)).dense();
  for (double v : two) EXPECT_DOUBLE_EQ(v, 0.5);
  std::vector<Edge> star;
  for (std::size_t i = 1; i < 5; ++i) star.emplace_back(0, i);
  const auto s = sym_norm_coeffs(Graph::from_edges(5, star)).dense();
  double row0 = 0.0;
  for (std::size_t j = 0; j < 5; ++j) row0 += s[j];
  EXPECT_NEAR(row0, 1.0 / 5.0 + 4.0 / std::sqrt(10.0), 1e-15);
}

TEST(Generators, Tree) {
  for (std::size_t n : {1u, 2u, 3u, 50u, 257u}) {
    const Graph t = random_tree(n, n);
    EXPECT_EQ(t.num_edges(), n - 1);
    EXPECT_EQ(connected_components(t).size(), 1u);
  }
}

TEST(Generators, BarabasiAlbert) {
  const Graph g = barabasi_albert(128, 5, 1);
  EXPECT_EQ(g.num_nodes(), 128u);
  EXPECT_EQ(g.num_edges(), 10u + 5u * 123u);
  EXPECT_EQ(connected_components(g).size(), 1u);
  EXPECT_THROW(barabasi_albert(5, 5, 1), UsageError);
  EXPECT_THROW(barabasi_albert(5, 0, 1), UsageError);
}

TEST(Generators, NewmanWattsStrogatz) {
  const Graph g = newman_watts_strogatz(100, 4, 0.15, 2);
  EXPECT_GE(g.num_edges(), 200u);
  for (std::size_t v = 0; v < 100; ++v) EXPECT_TRUE(g.has_edge(v, (v + 2) % 100));
  EXPECT_THROW(newman_watts_strogatz(10, 3, 0.1, 1), UsageError);
  EXPECT_THROW(newman_watts_strogatz(10, 4, 1.5, 1), UsageError);
}

TEST(Generators, StochasticBlockSizes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<std::size_t> block;
    stochastic_block(128, 0.3, 2.0 / 128, seed, &block);
    std::vector<std::size_t> sizes(*std::max_element(block.begin(), block.end()) + 1, 0);
    for (std::size_t b : block) ++sizes[b];
    for (std::size_t s : sizes) {
      EXPECT_GE(static_cast<double>(s), std::log(128.0));
      EXPECT_LE(s, 15u);
    }
  }
}

TEST(Generators, Deterministic) {
  GeneratorParams p;
  for (GraphKind k : {GraphKind::BA, GraphKind::NWS, GraphKind::SBM, GraphKind::Tree}) {
    EXPECT_EQ(generate(k, 64, p, 9).edges(), generate(k, 64, p, 9).edges());
  }
}

TEST(Suites, Hyperbolicity) {
  const auto result = suites::hyperbolicity(11);
  EXPECT_TRUE(result.passed()) << result.failures();
  EXPECT_EQ(result.notes.size(), 4u);
  EXPECT_LT(result.seconds, 600.0);
}
