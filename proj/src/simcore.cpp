#include "tomo/simcore.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tomo {

void validate(const SimConfig& cfg) {
  const std::uint32_t n = cfg.graph.node_count();
  if (n < 2) throw std::invalid_argument("config: graph is empty");
  if (cfg.monitors.size() < 2)
    throw std::invalid_argument("config: need at least 2 monitors");
  std::set<NodeAddress> seen;
  for (NodeAddress m : cfg.monitors) {
    if (m >= n) throw std::invalid_argument("config: monitor address out of range");
    if (!seen.insert(m).second)
      throw std::invalid_argument("config: duplicate monitor address");
  }
  for (NodeAddress a : cfg.anomalous)
    if (a >= n) throw std::invalid_argument("config: anomalous address out of range");
  if (!(cfg.send_prob >= 0.0 && cfg.send_prob <= 1.0))
    throw std::invalid_argument("config: send probability outside [0, 1]");
  if (!(cfg.hold_prob >= 0.0 && cfg.hold_prob <= 1.0))
    throw std::invalid_argument("config: hold probability outside [0, 1]");
  if (cfg.queue_capacity < 1)
    throw std::invalid_argument("config: queue capacity must be >= 1");
  if (cfg.probe_period < 1)
    throw std::invalid_argument("config: probe period must be >= 1");
  if (cfg.duration == 0) throw std::invalid_argument("config: duration must be > 0");
  if (cfg.warmup > cfg.duration)
    throw std::invalid_argument("config: warmup must not exceed duration");
}

EdgeWeights compute_edge_weights(const Graph& g,
                                 const std::vector<std::uint32_t>& queue_lengths) {
  EdgeWeights w(g);
  for (const Edge& e : g.edges())
    w.set(e.a, e.b,
          1.0 + (static_cast<double>(queue_lengths[e.a]) +
                 static_cast<double>(queue_lengths[e.b])) /
                    2.0);
  return w;
}

RoutingTables recompute_routing_tables(const Graph& g, const EdgeWeights& w) {
  const std::uint32_t n = g.node_count();
  RoutingTables tables(n);
  std::vector<double> dist(n);
  std::vector<bool> done(n);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (NodeAddress dst = 0; dst < n; ++dst) {
    // dist[v] = min cost v -> dst under the current weight snapshot
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), false);
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
    // smallest-address neighbour minimising w + remaining distance, i.e. the
    // second node of the deterministic shortest path
    for (NodeAddress src = 0; src < n; ++src) {
      if (src == dst) {
        tables.set(src, dst, src);
        continue;
      }
      NodeAddress hop = src;
      double best = inf;
      for (NodeAddress v : g.neighbours(src)) {
        const double c = w.at(src, v) + dist[v];
        if (c < best) {
          best = c;
          hop = v;
        }
      }
      tables.set(src, dst, hop);
    }
  }
  return tables;
}

StepNodeResult step_node(NodeState& node, std::vector<Packet> incoming,
                         bool hold, std::uint32_t queue_capacity) {
  StepNodeResult result;
  for (Packet& p : node.queue) ++p.transit_time;
  if (!hold && !node.queue.empty()) {
    Packet head = node.queue.front();
    node.queue.pop_front();
    if (head.recipient == node.address) {
      result.delivered.push_back(std::move(head));
    } else {
      ++head.hops;
      result.forwarded.emplace_back(node.routing_table[head.recipient],
                                    std::move(head));
    }
  }
  std::stable_sort(incoming.begin(), incoming.end(),
                   [](const Packet& a, const Packet& b) { return a.sender < b.sender; });
  for (Packet& p : incoming) {
    if (node.queue.size() < queue_capacity)
      node.queue.push_back(std::move(p));
    else
      ++result.dropped;
  }
  return result;
}

Simulation::Simulation(SimConfig cfg)
    : cfg_(std::move(cfg)),
      traffic_rng_(derive_seed(cfg_.seed, "traffic")),
      hold_rng_(derive_seed(cfg_.seed, "holds")),
      target_rng_(derive_seed(cfg_.seed, "targets")) {
  validate(cfg_);
  const std::uint32_t n = cfg_.graph.node_count();
  nodes_.resize(n);
  for (NodeAddress a = 0; a < n; ++a) {
    nodes_[a].address = a;
    nodes_[a].neighbours = cfg_.graph.neighbours(a);
    nodes_[a].routing_table.assign(n, a);
  }
  for (NodeAddress a : cfg_.anomalous) nodes_[a].anomalous = true;
  background_sent_.assign(n, 0);
  inbox_.resize(n);
  hold_now_.assign(n, 0);
  last_queue_lengths_.assign(n, 0);
}

std::vector<std::uint32_t> Simulation::queue_lengths() const {
  std::vector<std::uint32_t> lengths(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    lengths[i] = static_cast<std::uint32_t>(nodes_[i].queue.size());
  return lengths;
}

std::uint64_t Simulation::queued_packets() const {
  std::uint64_t total = 0;
  for (const NodeState& node : nodes_) total += node.queue.size();
  return total;
}

void Simulation::refresh_routing() {
  const auto lengths = queue_lengths();
  if (routing_valid_ && lengths == last_queue_lengths_) return;
  weights_ = compute_edge_weights(cfg_.graph, lengths);
  routing_ = recompute_routing_tables(cfg_.graph, weights_);
  for (NodeAddress src = 0; src < nodes_.size(); ++src)
    for (NodeAddress dst = 0; dst < nodes_.size(); ++dst)
      nodes_[src].routing_table[dst] = routing_.next_hop(src, dst);
  last_queue_lengths_ = lengths;
  routing_valid_ = true;
}

void Simulation::enqueue_or_drop(NodeAddress at, Packet packet) {
  ++created_;
  if (packet.kind == PacketKind::background) ++background_sent_[packet.sender];
  if (nodes_[at].queue.size() < cfg_.queue_capacity)
    nodes_[at].queue.push_back(std::move(packet));
  else
    ++dropped_;
}

void Simulation::step() {
  const std::uint32_t n = cfg_.graph.node_count();

  // (1) routing tables from the start-of-step queue snapshot
  refresh_routing();

  // (2) hold draws, ascending address order over anomalous nodes
  for (NodeAddress a = 0; a < n; ++a)
    hold_now_[a] = nodes_[a].anomalous && hold_rng_.bernoulli(cfg_.hold_prob);

  // (3) synchronous node stepping; forwarded packets land at the end of the
  // same step, which is the one-timestep edge traversal
  for (NodeAddress a = 0; a < n; ++a) {
    NodeState& node = nodes_[a];
    for (Packet& p : node.queue) ++p.transit_time;
    if (hold_now_[a] || node.queue.empty()) continue;
    Packet head = node.queue.front();
    node.queue.pop_front();
    if (head.recipient == a) {
      ++delivered_;
      if (head.kind == PacketKind::probe && t_ >= cfg_.warmup)
        records_.push_back({*head.probe_pair, head.transit_time, head.hops, t_});
    } else {
      ++head.hops;
      inbox_[node.routing_table[head.recipient]].push_back(std::move(head));
    }
  }
  for (NodeAddress a = 0; a < n; ++a) {
    auto& incoming = inbox_[a];
    if (incoming.empty()) continue;
    std::stable_sort(incoming.begin(), incoming.end(),
                     [](const Packet& x, const Packet& y) { return x.sender < y.sender; });
    NodeState& node = nodes_[a];
    for (Packet& p : incoming) {
      if (node.queue.size() < cfg_.queue_capacity)
        node.queue.push_back(std::move(p));
      else
        ++dropped_;
    }
    incoming.clear();
  }

  // (4) background generation
  for (NodeAddress a = 0; a < n; ++a) {
    if (!traffic_rng_.bernoulli(cfg_.send_prob)) continue;
    const auto target =
        static_cast<NodeAddress>(target_rng_.below_excluding(n, a));
    enqueue_or_drop(a, Packet{a, target, 0, 0, PacketKind::background, {}});
  }

  // (5) probe injection
  if (t_ >= cfg_.warmup && t_ % cfg_.probe_period == 0) {
    for (NodeAddress src : cfg_.monitors)
      for (NodeAddress dst : cfg_.monitors) {
        if (src == dst) continue;
        enqueue_or_drop(src, Packet{src, dst, 0, 0, PacketKind::probe,
                                    MonitorPair{src, dst}});
      }
  }

  ++t_;
}

SimSummary Simulation::run() {
  while (t_ < cfg_.duration) step();
  return summary();
}

SimSummary Simulation::summary() const {
  SimSummary s;
  s.created = created_;
  s.delivered = delivered_;
  s.dropped = dropped_;
  s.in_flight = queued_packets();
  s.probe_records = records_;
  return s;
}

SimSummary run_simulation(const SimConfig& cfg) { return Simulation(cfg).run(); }

DistributionSet build_distribution_set(const std::vector<ProbeRecord>& records,
                                       const std::vector<NodeAddress>& monitors) {
  DistributionSet set;
  std::map<MonitorPair, std::pair<std::map<std::uint32_t, std::uint64_t>,
                                  std::map<std::uint32_t, std::uint64_t>>>
      counts;
  for (NodeAddress src : monitors)
    for (NodeAddress dst : monitors)
      if (src != dst) counts[{src, dst}];
  for (const ProbeRecord& r : records) {
    auto it = counts.find(r.pair);
    if (it == counts.end())
      throw std::invalid_argument("probe record for an unknown monitor pair");
    ++it->second.first[r.delay];
    ++it->second.second[r.hops];
  }
  for (const auto& [pair, delay_hops] : counts) {
    PairDistributions dists;
    std::uint64_t total = 0;
    for (const auto& [bin, c] : delay_hops.first) total += c;
    if (total == 0) {
      dists.empty = true;
    } else {
      for (const auto& [bin, c] : delay_hops.first)
        dists.delay[bin] = static_cast<double>(c) / static_cast<double>(total);
      for (const auto& [bin, c] : delay_hops.second)
        dists.hops[bin] = static_cast<double>(c) / static_cast<double>(total);
    }
    set.pairs.emplace(pair, std::move(dists));
  }
  return set;
}

DistributionSet simulate_distributions(const SimConfig& cfg) {
  const SimSummary summary = run_simulation(cfg);
  return build_distribution_set(summary.probe_records, cfg.monitors);
}

}  // namespace tomo
