#include "hyp/generators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include "hyp/errors.hpp"
#include "hyp/rng.hpp"

namespace hyp::graphs {

GraphKind parse_graph_kind(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "ba") return GraphKind::BA;
  if (lower == "nws") return GraphKind::NWS;
  if (lower == "sbm") return GraphKind::SBM;
  if (lower == "tree") return GraphKind::Tree;
  throw UsageError("unknown graph kind '" + name + "' (expected ba, nws, sbm or tree)");
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::BA: return "ba";
    case GraphKind::NWS: return "nws";
    case GraphKind::SBM: return "sbm";
    case GraphKind::Tree: return "tree";
  }
  return "?";
}

Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1 || m >= n) {
    throw UsageError("barabasi_albert: need 1 <= m < n (m=" + std::to_string(m) +
                     ", n=" + std::to_string(n) + ")");
  }
  Rng rng(seed);
  std::vector<Edge> edges;
  std::vector<std::size_t> endpoints;
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t v = u + 1; v < m; ++v) {
      edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  std::vector<std::size_t> targets;
  for (std::size_t v = m; v < n; ++v) {
    targets.clear();
    while (targets.size() < m) {
      const std::size_t t = endpoints.empty() ? rng.below(v) : endpoints[rng.below(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (std::size_t t : targets) {
      edges.emplace_back(t, v);
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return Graph::from_edges(n, edges);
}

Graph newman_watts_strogatz(std::size_t n, std::size_t k, double p, std::uint64_t seed) {
  if (k < 2 || k % 2 != 0 || k >= n) {
    throw UsageError("newman_watts_strogatz: k must be even with 2 <= k < n");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("newman_watts_strogatz: p must lie in [0, 1]");
  Rng rng(seed);
  std::vector<std::set<std::size_t>> adj(n);
  std::vector<Edge> ring;
  for (std::size_t j = 1; j <= k / 2; ++j) {
    for (std::size_t u = 0; u < n; ++u) {
      const std::size_t v = (u + j) % n;
      if (adj[u].insert(v).second) {
        adj[v].insert(u);
        ring.emplace_back(u, v);
      }
    }
  }
  std::vector<Edge> edges = ring;
  for (const auto& [u, v] : ring) {
    if (!rng.bernoulli(p)) continue;
    if (adj[u].size() >= n - 1) continue;
    std::size_t w = rng.below(n);
    while (w == u || adj[u].count(w) != 0) w = rng.below(n);
    adj[u].insert(w);
    adj[w].insert(u);
    edges.emplace_back(u, w);
  }
  return Graph::from_edges(n, edges);
}

Graph stochastic_block(std::size_t n, double p_in, double p_out, std::uint64_t seed,
                       std::vector<std::size_t>* community) {
  constexpr std::size_t kMaxSize = 15;
  if (n < 2) throw UsageError("stochastic_block: need n >= 2");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
    throw UsageError("stochastic_block: probabilities must lie in [0, 1]");
  }
  const auto lo = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(n)))));
  if (lo > kMaxSize) throw UsageError("stochastic_block: n too large for communities of <= 15");
  const std::size_t k_min = (n + kMaxSize - 1) / kMaxSize;
  const std::size_t k_max = n / lo;
  if (k_min > k_max) throw UsageError("stochastic_block: no valid community count for this n");

  Rng rng(seed);
  const std::size_t k = k_min + rng.below(k_max - k_min + 1);
  std::vector<std::size_t> sizes(k, lo);
  std::vector<std::size_t> open(k);
  for (std::size_t i = 0; i < k; ++i) open[i] = i;
  for (std::size_t extra = n - k * lo; extra > 0; --extra) {
    const std::size_t pick = rng.below(open.size());
    if (++sizes[open[pick]] == kMaxSize) {
      open[pick] = open.back();
      open.pop_back();
    }
  }

  std::vector<std::size_t> block(n);
  for (std::size_t c = 0, v = 0; c < k; ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) block[v++] = c;
  }
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (rng.bernoulli(block[u] == block[v] ? p_in : p_out)) edges.emplace_back(u, v);
    }
  }
  if (community != nullptr) *community = std::move(block);
  return Graph::from_edges(n, edges);
}

Graph random_tree(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("random_tree: need n >= 1");
  if (n == 1) return Graph(1);
  Rng rng(seed);
  std::vector<std::size_t> code(n - 2);
  for (auto& x : code) x = rng.below(n);

  std::vector<std::size_t> remaining(n, 1);
  for (std::size_t x : code) ++remaining[x];
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> leaves;
  for (std::size_t v = 0; v < n; ++v) {
    if (remaining[v] == 1) leaves.push(v);
  }
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t x : code) {
    const std::size_t leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(leaf, x);
    if (--remaining[x] == 1) leaves.push(x);
  }
  const std::size_t a = leaves.top();
  leaves.pop();
  edges.emplace_back(a, leaves.top());
  return Graph::from_edges(n, edges);
}

Graph generate(GraphKind kind, std::size_t n, const GeneratorParams& params, std::uint64_t seed) {
  switch (kind) {
    case GraphKind::BA: return barabasi_albert(n, params.m, seed);
    case GraphKind::NWS: return newman_watts_strogatz(n, params.k, params.p, seed);
    case GraphKind::SBM: {
      const double p_out = params.p_out < 0.0 ? 2.0 / static_cast<double>(n) : params.p_out;
      return stochastic_block(n, params.p_in, p_out, seed);
    }
    case GraphKind::Tree: return random_tree(n, seed);
  }
  throw UsageError("unknown graph kind");
}

}  // namespace hyp::graphs
