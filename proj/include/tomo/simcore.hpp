#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "tomo/rng.hpp"
#include "tomo/topology.hpp"

namespace tomo {

enum class PacketKind : std::uint8_t { background, probe };

// Ordered monitor pair identifying a probing path direction.
struct MonitorPair {
  NodeAddress src;
  NodeAddress dst;
  auto operator<=>(const MonitorPair&) const = default;
};

struct Packet {
  NodeAddress sender = 0;
  NodeAddress recipient = 0;
  std::uint32_t transit_time = 0;  // timesteps spent waiting in queues
  std::uint32_t hops = 0;          // forwards taken so far
  PacketKind kind = PacketKind::background;
  std::optional<MonitorPair> probe_pair;  // present iff kind == probe
  bool operator==(const Packet&) const = default;
};

struct NodeState {
  NodeAddress address = 0;
  std::deque<Packet> queue;
  std::vector<NodeAddress> neighbours;
  std::vector<NodeAddress> routing_table;  // destination -> next hop
  bool anomalous = false;
};

struct SimConfig {
  Graph graph;
  std::vector<NodeAddress> monitors;
  std::vector<NodeAddress> anomalous;
  double send_prob = 0.2;           // chance a node emits a packet per step
  double hold_prob = 0.2;           // chance an anomalous node holds per step
  std::uint32_t queue_capacity = 100;
  std::uint32_t probe_period = 10;  // timesteps between probe waves
  std::uint64_t duration = 100000;
  std::uint64_t warmup = 1000;      // probes before this step are not sent
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const SimConfig& cfg);

struct ProbeRecord {
  MonitorPair pair;
  std::uint32_t delay = 0;
  std::uint32_t hops = 0;
  std::uint64_t arrival = 0;
  bool operator==(const ProbeRecord&) const = default;
};

struct SimSummary {
  std::uint64_t created = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
  std::vector<ProbeRecord> probe_records;
  bool operator==(const SimSummary&) const = default;
};

// bin index -> probability mass
using Histogram = std::map<std::uint32_t, double>;

struct PairDistributions {
  Histogram delay;
  Histogram hops;
  bool empty = false;  // set when the pair produced no records at all
  bool operator==(const PairDistributions&) const = default;
};

struct DistributionSet {
  std::map<MonitorPair, PairDistributions> pairs;
  bool operator==(const DistributionSet&) const = default;
};

// W(a, b) = 1 + (|Q_a| + |Q_b|) / 2 on every graph edge.
EdgeWeights compute_edge_weights(const Graph& g,
                                 const std::vector<std::uint32_t>& queue_lengths);

class RoutingTables {
 public:
  RoutingTables() = default;
  explicit RoutingTables(std::uint32_t n)
      : n_(n), next_(static_cast<std::size_t>(n) * n, 0) {}
  NodeAddress next_hop(NodeAddress src, NodeAddress dst) const {
    return next_[static_cast<std::size_t>(src) * n_ + dst];
  }
  void set(NodeAddress src, NodeAddress dst, NodeAddress hop) {
    next_[static_cast<std::size_t>(src) * n_ + dst] = hop;
  }

 private:
  std::uint32_t n_ = 0;
  std::vector<NodeAddress> next_;
};

// For every ordered (src, dst) the entry is the second node of
// shortest_path(g, w, src, dst); all entries use the same weight snapshot.
RoutingTables recompute_routing_tables(const Graph& g, const EdgeWeights& w);

struct StepNodeResult {
  std::vector<Packet> delivered;  // packets whose recipient is this node
  std::vector<std::pair<NodeAddress, Packet>> forwarded;  // (next hop, packet)
  std::uint32_t dropped = 0;
};

// One node's slice of a timestep: age every queued packet, emit the head
// (unless holding), then append incoming in ascending sender-address order,
// dropping whatever exceeds capacity.
StepNodeResult step_node(NodeState& node, std::vector<Packet> incoming,
                         bool hold, std::uint32_t queue_capacity);

class Simulation {
 public:
  explicit Simulation(SimConfig cfg);

  // Advances one timestep: routing refresh, hold draws, synchronous node
  // stepping, background generation, probe injection.
  void step();

  // Runs the remaining timesteps and returns the summary.
  SimSummary run();
  SimSummary summary() const;

  std::uint64_t timestep() const { return t_; }
  std::uint64_t created() const { return created_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t queued_packets() const;
  std::vector<std::uint32_t> queue_lengths() const;
  const std::vector<std::uint64_t>& background_sent_per_node() const {
    return background_sent_;
  }
  const NodeState& node(NodeAddress a) const { return nodes_[a]; }
  const RoutingTables& routing() const { return routing_; }
  const EdgeWeights& current_weights() const { return weights_; }
  const std::vector<ProbeRecord>& probe_records() const { return records_; }
  const SimConfig& config() const { return cfg_; }

 private:
  void refresh_routing();
  void enqueue_or_drop(NodeAddress at, Packet packet);

  SimConfig cfg_;
  std::vector<NodeState> nodes_;
  EdgeWeights weights_;
  RoutingTables routing_;
  Rng traffic_rng_;
  Rng hold_rng_;
  Rng target_rng_;
  std::uint64_t t_ = 0;
  std::uint64_t created_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::vector<std::uint64_t> background_sent_;
  std::vector<ProbeRecord> records_;
  std::vector<std::vector<Packet>> inbox_;          // reused each step
  std::vector<std::uint32_t> last_queue_lengths_;   // routing cache key
  bool routing_valid_ = false;
  std::vector<char> hold_now_;
};

SimSummary run_simulation(const SimConfig& cfg);

// Per ordered monitor pair: unit-width delay and hop histograms, each
// normalised to total mass 1. Pairs without records are flagged empty.
DistributionSet build_distribution_set(const std::vector<ProbeRecord>& records,
                                       const std::vector<NodeAddress>& monitors);

// run_simulation + build_distribution_set in one call.
DistributionSet simulate_distributions(const SimConfig& cfg);

}  // namespace tomo
