#include "hyp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "hyp/errors.hpp"

namespace hyp::graphs {

Graph::Graph(std::size_t num_nodes) : offsets_(num_nodes + 1, 0) {}

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges) {
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw UsageError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (u == v) throw UsageError("self-loop on node " + std::to_string(u));
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g(num_nodes);
  g.adjacency_.reserve(directed.size());
  for (const auto& [u, v] : directed) {
    ++g.offsets_[u + 1];
    g.adjacency_.push_back(v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
  return g;
}

std::span<const std::size_t> Graph::neighbors(std::size_t v) const {
  if (v >= num_nodes()) throw UsageError("node " + std::to_string(v) + " out of range");
  return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

std::size_t Graph::degree(std::size_t v) const { return neighbors(v).size(); }

bool Graph::has_edge(std::size_t u, std::size_t v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t u = 0; u < num_nodes(); ++u) {
    for (std::size_t v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Graph Graph::induced(std::span<const std::size_t> nodes) const {
  std::vector<std::size_t> local(num_nodes(), SIZE_MAX);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;
  std::vector<Edge> sub;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t w : neighbors(nodes[i])) {
      if (local[w] != SIZE_MAX && i < local[w]) sub.emplace_back(i, local[w]);
    }
  }
  return from_edges(nodes.size(), sub);
}

SparseMatrix sym_norm_coeffs(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t v = 0; v < n; ++v) inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));
  SparseMatrix s;
  s.rows = n;
  s.cols = n;
  s.row_ptr.assign(n + 1, 0);
  s.col_idx.reserve(2 * g.num_edges() + n);
  s.values.reserve(2 * g.num_edges() + n);
  for (std::size_t v = 0; v < n; ++v) {
    bool self_done = false;
    for (std::size_t w : g.neighbors(v)) {
      if (!self_done && w > v) {
        s.col_idx.push_back(v);
        s.values.push_back(inv_sqrt_deg[v] * inv_sqrt_deg[v]);
        self_done = true;
      }
      s.col_idx.push_back(w);
      s.values.push_back(inv_sqrt_deg[v] * inv_sqrt_deg[w]);
    }
    if (!self_done) {
      s.col_idx.push_back(v);
      s.values.push_back(inv_sqrt_deg[v] * inv_sqrt_deg[v]);
    }
    s.row_ptr[v + 1] = s.col_idx.size();
  }
  return s;
}

std::vector<std::vector<std::size_t>> connected_components(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<bool> seen(n, false);
  std::vector<std::vector<std::size_t>> components;
  std::queue<std::size_t> frontier;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp;
    seen[s] = true;
    frontier.push(s);
    while (!frontier.empty()) {
      const std::size_t u = frontier.front();
      frontier.pop();
      comp.push_back(u);
      for (std::size_t w : g.neighbors(u)) {
        if (!seen[w]) {
          seen[w] = true;
          frontier.push(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

Graph read_edge_list(std::istream& in, const std::string& source_name, std::size_t num_nodes) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_id = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long u = -1;
    long long v = -1;
    std::string extra;
    if (!(fields >> u >> v) || u < 0 || v < 0 || (fields >> extra)) {
      throw ParseError(source_name, line_no, "expected two non-negative node ids");
    }
    if (u == v) throw ParseError(source_name, line_no, "self-loop");
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    max_id = std::max({max_id, static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    any = true;
  }
  const std::size_t n = std::max(num_nodes, any ? max_id + 1 : 0);
  return Graph::from_edges(n, edges);
}

Graph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_edge_list(in, path);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# nodes " << g.num_nodes() << " edges " << g.num_edges() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << '\t' << v << '\n';
}

void write_edge_list_file(const std::string& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  write_edge_list(out, g);
}

}  // namespace hyp::graphs
