#include "tomo/topology.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace tomo {

namespace {

bool is_connected(std::uint32_t n, const std::vector<std::vector<NodeAddress>>& adj) {
  if (n == 0) return false;
  std::vector<bool> seen(n, false);
  std::vector<NodeAddress> stack{0};
  seen[0] = true;
  std::uint32_t reached = 1;
  while (!stack.empty()) {
    const NodeAddress u = stack.back();
    stack.pop_back();
    for (NodeAddress v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

std::vector<std::vector<NodeAddress>> build_adjacency(std::uint32_t n,
                                                      const std::vector<Edge>& edges) {
  std::vector<std::vector<NodeAddress>> adj(n);
  for (const Edge& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

}  // namespace

Graph::Graph(std::uint32_t node_count, std::vector<Edge> edges) : n_(node_count) {
  if (n_ < 2) throw std::invalid_argument("graph needs at least 2 nodes");
  for (Edge& e : edges) {
    if (e.a == e.b) throw std::invalid_argument("self-loop edge rejected");
    if (e.a > e.b) std::swap(e.a, e.b);
    if (e.b >= n_) throw std::invalid_argument("edge endpoint out of range");
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("duplicate edge rejected");
  edges_ = std::move(edges);
  adj_ = build_adjacency(n_, edges_);
  if (!is_connected(n_, adj_)) throw std::invalid_argument("graph not connected");
}

bool Graph::has_edge(NodeAddress a, NodeAddress b) const {
  if (a >= n_ || b >= n_ || a == b) return false;
  const auto& nbrs = adj_[a];
  return std::binary_search(nbrs.begin(), nbrs.end(), b);
}

EdgeWeights::EdgeWeights(const Graph& g, double initial) : n_(g.node_count()) {
  if (initial < 1.0) throw std::invalid_argument("edge weight below 1");
  w_.assign(static_cast<std::size_t>(n_) * n_, initial);
}

void EdgeWeights::set(NodeAddress a, NodeAddress b, double w) {
  if (w < 1.0) throw std::invalid_argument("edge weight below 1");
  w_[index(a, b)] = w;
  w_[index(b, a)] = w;
}

Graph generate_connected_graph(std::uint32_t n, double edge_prob,
                               std::uint64_t seed, std::uint32_t max_retries) {
  if (n < 2) throw std::invalid_argument("graph needs at least 2 nodes");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0))
    throw std::invalid_argument("edge probability must be in (0, 1]");
  for (std::uint32_t attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng(derive_seed(seed, "topology", attempt));
    std::vector<Edge> edges;
    for (NodeAddress u = 0; u + 1 < n; ++u)
      for (NodeAddress v = u + 1; v < n; ++v)
        if (rng.bernoulli(edge_prob)) edges.push_back({u, v});
    if (is_connected(n, build_adjacency(n, edges)))
      return Graph(n, std::move(edges));
  }
  std::ostringstream msg;
  msg << "could not generate connected graph (n=" << n << ", p=" << edge_prob
      << ") after " << max_retries << " attempts";
  throw std::runtime_error(msg.str());
}

namespace {

// dist[v] = minimum cost from v to dst. O(n^2) scan; graphs here are small.
void dijkstra_to(const Graph& g, const EdgeWeights& w, NodeAddress dst,
                 std::vector<double>& dist) {
  const std::uint32_t n = g.node_count();
  constexpr double inf = std::numeric_limits<double>::infinity();
  dist.assign(n, inf);
  std::vector<bool> done(n, false);
  dist[dst] = 0.0;
  for (std::uint32_t iter = 0; iter < n; ++iter) {
    NodeAddress u = n;
    double best = inf;
    for (NodeAddress v = 0; v < n; ++v)
      if (!done[v] && dist[v] < best) {
        best = dist[v];
        u = v;
      }
    if (u == n) break;
    done[u] = true;
    for (NodeAddress v : g.neighbours(u)) {
      const double c = dist[u] + w.at(u, v);
      if (c < dist[v]) dist[v] = c;
    }
  }
}

// Successor of u on the lexicographically smallest minimum-cost path to dst:
// the smallest-address neighbour minimising weight + remaining distance.
NodeAddress best_successor(const Graph& g, const EdgeWeights& w,
                           const std::vector<double>& dist, NodeAddress u) {
  NodeAddress next = u;
  double best = std::numeric_limits<double>::infinity();
  for (NodeAddress v : g.neighbours(u)) {
    const double c = w.at(u, v) + dist[v];
    if (c < best) {
      best = c;
      next = v;
    }
  }
  return next;
}

}  // namespace

Path shortest_path(const Graph& g, const EdgeWeights& w, NodeAddress src,
                   NodeAddress dst) {
  if (src >= g.node_count() || dst >= g.node_count())
    throw std::invalid_argument("path endpoint out of range");
  if (src == dst) throw std::invalid_argument("path endpoints must differ");
  std::vector<double> dist;
  dijkstra_to(g, w, dst, dist);
  Path path{src};
  NodeAddress cur = src;
  while (cur != dst) {
    cur = best_successor(g, w, dist, cur);
    path.push_back(cur);
  }
  return path;
}

double path_cost(const EdgeWeights& w, const Path& p) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) total += w.at(p[i], p[i + 1]);
  return total;
}

std::vector<NodeAddress> static_coverage(const Graph& g,
                                         const std::vector<NodeAddress>& monitors) {
  if (monitors.size() < 2)
    throw std::invalid_argument("coverage needs at least 2 monitors");
  const EdgeWeights unit(g);
  std::vector<bool> covered(g.node_count(), false);
  for (NodeAddress a : monitors)
    for (NodeAddress b : monitors) {
      if (a == b) continue;
      for (NodeAddress v : shortest_path(g, unit, a, b)) covered[v] = true;
    }
  std::vector<NodeAddress> out;
  for (NodeAddress v = 0; v < g.node_count(); ++v)
    if (covered[v]) out.push_back(v);
  return out;
}

std::string export_graph(const Graph& g) {
  std::ostringstream out;
  out << g.node_count() << "\n";
  for (const Edge& e : g.edges()) out << e.a << " " << e.b << "\n";
  return out.str();
}

Graph import_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw GraphParseError("missing node count", 1);
  std::uint32_t n = 0;
  {
    std::istringstream ls(line);
    std::string extra;
    if (!(ls >> n) || (ls >> extra))
      throw GraphParseError("malformed node count: \"" + line + "\"", line_number);
  }

  std::vector<Edge> edges;
  while (next_line()) {
    std::istringstream ls(line);
    std::uint32_t u = 0, v = 0;
    std::string extra;
    if (!(ls >> u >> v) || (ls >> extra))
      throw GraphParseError("malformed edge line: \"" + line + "\"", line_number);
    if (u >= v)
      throw GraphParseError("edge endpoints must satisfy u < v", line_number);
    edges.push_back({u, v});
  }
  return Graph(n, std::move(edges));
}

void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << export_graph(g);
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return import_graph(buf.str());
}

}  // namespace tomo
