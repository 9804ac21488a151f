#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tomo/rng.hpp"

namespace tomo {

// Node addresses are dense in [0, n) and stable for the lifetime of a graph.
using NodeAddress = std::uint32_t;

// Ordered node sequence; consecutive entries are adjacent, no repeats.
using Path = std::vector<NodeAddress>;

// Unordered node pair, stored with a < b.
struct Edge {
  NodeAddress a;
  NodeAddress b;
  auto operator<=>(const Edge&) const = default;
};

// Simple connected undirected graph. Construction validates simplicity,
// connectivity and node_count >= 2.
class Graph {
 public:
  Graph() = default;  // empty placeholder; rejected wherever a graph is used
  Graph(std::uint32_t node_count, std::vector<Edge> edges);

  std::uint32_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeAddress>& neighbours(NodeAddress a) const {
    return adj_[a];
  }
  std::uint32_t degree(NodeAddress a) const {
    return static_cast<std::uint32_t>(adj_[a].size());
  }
  bool has_edge(NodeAddress a, NodeAddress b) const;

  bool operator==(const Graph&) const = default;

 private:
  std::uint32_t n_ = 0;
  std::vector<Edge> edges_;                    // sorted, a < b
  std::vector<std::vector<NodeAddress>> adj_;  // sorted neighbour lists
};

// Per-edge weights in timesteps. Weights never drop below 1: an uncongested
// hop still costs one service step.
class EdgeWeights {
 public:
  EdgeWeights() = default;
  explicit EdgeWeights(const Graph& g, double initial = 1.0);

  double at(NodeAddress a, NodeAddress b) const { return w_[index(a, b)]; }
  void set(NodeAddress a, NodeAddress b, double w);

 private:
  std::size_t index(NodeAddress a, NodeAddress b) const {
    return static_cast<std::size_t>(a) * n_ + b;
  }
  std::uint32_t n_ = 0;
  std::vector<double> w_;  // dense symmetric matrix; non-edges unused
};

struct GraphParseError : std::runtime_error {
  GraphParseError(const std::string& what, std::size_t line_number)
      : std::runtime_error(what), line(line_number) {}
  std::size_t line;
};

// Connected Erdos-Renyi G(n, p) draw. Each attempt uses a sub-seed derived
// from (seed, attempt); resamples until connected, failing after max_retries.
Graph generate_connected_graph(std::uint32_t n, double edge_prob,
                               std::uint64_t seed,
                               std::uint32_t max_retries = 1000);

// Minimum-total-weight path from src to dst; among equal-cost paths the
// lexicographically smallest address sequence wins.
Path shortest_path(const Graph& g, const EdgeWeights& w, NodeAddress src,
                   NodeAddress dst);

double path_cost(const EdgeWeights& w, const Path& p);

// All nodes lying on the deterministic unit-weight shortest path between at
// least one ordered monitor pair, monitors included. Needs >= 2 monitors.
std::vector<NodeAddress> static_coverage(const Graph& g,
                                         const std::vector<NodeAddress>& monitors);

// Edge-list text form: first line node count, then one "u v" line per edge
// with u < v.
std::string export_graph(const Graph& g);
Graph import_graph(const std::string& text);

void save_graph(const Graph& g, const std::string& path);
Graph load_graph(const std::string& path);

}  // namespace tomo
