#include "hyp/hyperbolicity.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <string>

#include "hyp/errors.hpp"

namespace hyp::graphs {

namespace {

using Value = DistanceMatrix::Value;

// S1 - S2 in hop units; all four distances must be reachable.
int quadruple_gap(const DistanceMatrix& d, std::size_t u, std::size_t v, std::size_t w,
                  std::size_t x) {
  std::array<int, 3> s{d(u, v) + d(w, x), d(u, w) + d(v, x), d(u, x) + d(v, w)};
  if (s[0] > s[1]) std::swap(s[0], s[1]);
  if (s[1] > s[2]) std::swap(s[1], s[2]);
  if (s[0] > s[1]) std::swap(s[0], s[1]);
  return s[2] - s[1];
}

HyperbolicityReport make_report(const std::vector<std::vector<std::size_t>>& comps,
                                std::vector<double> deltas, std::size_t n) {
  HyperbolicityReport r;
  r.component_delta = std::move(deltas);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    r.component_size.push_back(comps[i].size());
    r.weighted_delta += static_cast<double>(comps[i].size()) / static_cast<double>(n) *
                        r.component_delta[i];
  }
  return r;
}

// Largest S1 - S2 in one connected block.
int block_gap(const Graph& block) {
  const std::size_t n = block.num_nodes();
  if (n < 4) return 0;
  const DistanceMatrix d = bfs_all_pairs(block);

  std::vector<int> ecc(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (Value x : d.row(u)) ecc[u] = std::max<int>(ecc[u], x);
  }

  // v is far from u when no neighbor of v lies one step further from u.
  auto far_from = [&](std::size_t u, std::size_t v) {
    const int duv = d(u, v);
    for (std::size_t w : block.neighbors(v)) {
      if (d(u, w) == duv + 1) return false;
    }
    return true;
  };

  struct Pair {
    std::size_t a;
    std::size_t b;
    int dist;
  };
  std::vector<Pair> pairs;
  std::vector<std::vector<std::size_t>> partners(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (far_from(u, v) && far_from(v, u)) {
        pairs.push_back({u, v, d(u, v)});
        partners[u].push_back(v);
        partners[v].push_back(u);
      }
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& p, const Pair& q) { return p.dist > q.dist; });
  for (std::size_t u = 0; u < n; ++u) {
    std::stable_sort(partners[u].begin(), partners[u].end(),
                     [&](std::size_t p, std::size_t q) { return d(u, p) > d(u, q); });
  }

  int best = 0;
  std::vector<char> acceptable(n, 0);
  std::vector<std::size_t> accepted;
  for (const Pair& pair : pairs) {
    const int dist = pair.dist;
    // A quadruple whose top pairing contains a pair at distance dist has gap <= dist.
    if (dist <= best) break;
    accepted.clear();
    for (std::size_t u = 0; u < n; ++u) {
      const int dx = d(pair.a, u);
      const int dy = d(pair.b, u);
      const bool ok = dist - std::abs(dx - dy) > best && dist + 2 * ecc[u] - dx - dy > 2 * best;
      acceptable[u] = ok ? 1 : 0;
      if (ok) accepted.push_back(u);
    }
    for (std::size_t a : accepted) {
      for (std::size_t b : partners[a]) {
        if (d(a, b) < dist) break;
        if (b < a || !acceptable[b]) continue;
        best = std::max(best, quadruple_gap(d, pair.a, pair.b, a, b));
      }
      if (best >= dist) break;
    }
  }
  return best;
}

}  // namespace

DistanceMatrix bfs_all_pairs(const Graph& g) {
  const std::size_t n = g.num_nodes();
  DistanceMatrix d(n);
  std::vector<std::size_t> queue(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t head = 0;
    std::size_t tail = 0;
    d(s, s) = 0;
    queue[tail++] = s;
    while (head < tail) {
      const std::size_t u = queue[head++];
      const Value next = static_cast<Value>(d(s, u) + 1);
      if (next == DistanceMatrix::kUnreachable) throw UsageError("graph distance overflow");
      for (std::size_t w : g.neighbors(u)) {
        if (d(s, w) == DistanceMatrix::kUnreachable) {
          d(s, w) = next;
          queue[tail++] = w;
        }
      }
    }
  }
  return d;
}

double delta_quadruple(const DistanceMatrix& d, std::size_t u, std::size_t v, std::size_t w,
                       std::size_t x) {
  const std::size_t n = d.size();
  if (u >= n || v >= n || w >= n || x >= n) throw UsageError("delta_quadruple: node out of range");
  for (auto [p, q] : {std::pair{u, v}, {u, w}, {u, x}, {v, w}, {v, x}, {w, x}}) {
    if (d(p, q) == DistanceMatrix::kUnreachable) {
      throw UsageError("delta_quadruple: nodes " + std::to_string(p) + " and " +
                       std::to_string(q) + " are in different components");
    }
  }
  return quadruple_gap(d, u, v, w, x) / 2.0;
}

double HyperbolicityReport::delta() const {
  if (component_delta.size() != 1) {
    throw UsageError("delta is undefined for a graph with " +
                     std::to_string(component_delta.size()) +
                     " components; use per-component or weighted values");
  }
  return component_delta.front();
}

std::size_t HyperbolicityReport::largest_component_size() const {
  if (component_size.empty()) throw UsageError("empty graph");
  return *std::max_element(component_size.begin(), component_size.end());
}

double HyperbolicityReport::largest_component_delta() const {
  if (component_size.empty()) throw UsageError("empty graph");
  const auto it = std::max_element(component_size.begin(), component_size.end());
  return component_delta[static_cast<std::size_t>(it - component_size.begin())];
}

HyperbolicityReport hyperbolicity_exact(const Graph& g, std::size_t node_cap) {
  const std::size_t n = g.num_nodes();
  if (n > node_cap) {
    throw UsageError("exact hyperbolicity is capped at " + std::to_string(node_cap) +
                     " nodes (graph has " + std::to_string(n) + "); use pruned mode");
  }
  const DistanceMatrix d = bfs_all_pairs(g);
  const auto comps = connected_components(g);
  std::vector<double> deltas;
  for (const auto& c : comps) {
    int best = 0;
    const std::size_t k = c.size();
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        for (std::size_t l = j + 1; l < k; ++l) {
          for (std::size_t m = l + 1; m < k; ++m) {
            best = std::max(best, quadruple_gap(d, c[i], c[j], c[l], c[m]));
          }
        }
      }
    }
    deltas.push_back(best / 2.0);
  }
  return make_report(comps, std::move(deltas), n);
}

std::vector<std::vector<std::size_t>> biconnected_blocks(const Graph& g) {
  const std::size_t n = g.num_nodes();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> disc(n, kNone);
  std::vector<std::size_t> low(n, 0);
  std::vector<Edge> edge_stack;
  std::vector<std::vector<std::size_t>> blocks;

  struct Frame {
    std::size_t v;
    std::size_t parent;
    std::size_t next;
  };
  std::vector<Frame> stack;
  std::size_t timer = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != kNone) continue;
    disc[root] = low[root] = timer++;
    stack.push_back({root, kNone, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto nb = g.neighbors(f.v);
      if (f.next < nb.size()) {
        const std::size_t w = nb[f.next++];
        if (w == f.parent) continue;
        if (disc[w] == kNone) {
          edge_stack.emplace_back(f.v, w);
          disc[w] = low[w] = timer++;
          stack.push_back({w, f.v, 0});
        } else if (disc[w] < disc[f.v]) {
          edge_stack.emplace_back(f.v, w);
          low[f.v] = std::min(low[f.v], disc[w]);
        }
        continue;
      }
      const std::size_t w = f.v;
      stack.pop_back();
      if (stack.empty()) break;
      const std::size_t v = stack.back().v;
      low[v] = std::min(low[v], low[w]);
      if (low[w] >= disc[v]) {
        std::vector<std::size_t> block;
        while (true) {
          const Edge e = edge_stack.back();
          edge_stack.pop_back();
          block.push_back(e.first);
          block.push_back(e.second);
          if (e.first == v && e.second == w) break;
        }
        std::sort(block.begin(), block.end());
        block.erase(std::unique(block.begin(), block.end()), block.end());
        blocks.push_back(std::move(block));
      }
    }
  }
  return blocks;
}

HyperbolicityReport hyperbolicity_pruned(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const auto comps = connected_components(g);
  std::vector<std::size_t> comp_of(n, 0);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (std::size_t v : comps[i]) comp_of[v] = i;
  }
  // Delta of a graph is the maximum over its biconnected blocks.
  std::vector<int> gaps(comps.size(), 0);
  for (const auto& block : biconnected_blocks(g)) {
    if (block.size() < 4) continue;
    const std::size_t ci = comp_of[block.front()];
    gaps[ci] = std::max(gaps[ci], block_gap(g.induced(block)));
  }
  std::vector<double> deltas;
  for (int gap : gaps) deltas.push_back(gap / 2.0);
  return make_report(comps, std::move(deltas), n);
}

}  // namespace hyp::graphs
