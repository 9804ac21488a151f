#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tomo/simcore.hpp"

using namespace tomo;

namespace {

Graph line_graph(std::uint32_t n) {
  std::vector<Edge> edges;
  for (NodeAddress i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph(n, std::move(edges));
}

Graph square_graph() { return Graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}); }

SimConfig base_config(Graph g, std::vector<NodeAddress> monitors) {
  SimConfig cfg;
  cfg.graph = std::move(g);
  cfg.monitors = std::move(monitors);
  cfg.send_prob = 0.2;
  cfg.hold_prob = 0.2;
  cfg.duration = 2000;
  cfg.warmup = 100;
  cfg.seed = 1;
  return cfg;
}

double mean_delay(const std::vector<ProbeRecord>& records) {
  double sum = 0.0;
  for (const ProbeRecord& r : records) sum += r.delay;
  return sum / static_cast<double>(records.size());
}

double delay_variance(const std::vector<ProbeRecord>& records, double mean) {
  double sum = 0.0;
  for (const ProbeRecord& r : records) {
    const double d = static_cast<double>(r.delay) - mean;
    sum += d * d;
  }
  return sum / static_cast<double>(records.size() - 1);
}

}  // namespace

TEST_CASE("edge weights follow the queue-average rule") {
  const Graph g = line_graph(3);
  CHECK(compute_edge_weights(g, {0, 0, 0}).at(0, 1) == 1.0);
  CHECK(compute_edge_weights(g, {4, 2, 0}).at(0, 1) == 4.0);
  CHECK(compute_edge_weights(g, {1, 0, 0}).at(0, 1) == 1.5);
}

TEST_CASE("routing: line with empty queues forwards along the line") {
  const Graph g = line_graph(3);
  const auto tables = recompute_routing_tables(g, compute_edge_weights(g, {0, 0, 0}));
  CHECK(tables.next_hop(0, 2) == 1);
  CHECK(tables.next_hop(2, 0) == 1);
}

TEST_CASE("routing: congested square is bypassed") {
  const Graph g = square_graph();
  // queue of 10 at node 1: cost via 1 is 6 + 6 = 12, via 3 is 1 + 1 = 2
  const auto w = compute_edge_weights(g, {0, 10, 0, 0});
  const auto tables = recompute_routing_tables(g, w);
  CHECK(tables.next_hop(0, 2) == 3);
  // oracle: the full path agrees with shortest_path on the same weights
  CHECK(shortest_path(g, w, 0, 2) == Path{0, 3, 2});
}

TEST_CASE("routing: entries are always neighbours of the source") {
  Rng meta(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = static_cast<std::uint32_t>(4 + meta.below(10));
    const Graph g = generate_connected_graph(n, 0.35, meta.next_u64());
    std::vector<std::uint32_t> lengths(n);
    for (auto& q : lengths) q = static_cast<std::uint32_t>(meta.below(8));
    const auto tables = recompute_routing_tables(g, compute_edge_weights(g, lengths));
    for (NodeAddress src = 0; src < n; ++src)
      for (NodeAddress dst = 0; dst < n; ++dst) {
        if (src == dst) continue;
        const NodeAddress hop = tables.next_hop(src, dst);
        const auto& nbrs = g.neighbours(src);
        CHECK(std::find(nbrs.begin(), nbrs.end(), hop) != nbrs.end());
      }
  }
}

TEST_CASE("step_node: empty queue just absorbs the incoming packet") {
  NodeState node;
  node.address = 1;
  node.neighbours = {0, 2};
  node.routing_table = {0, 1, 2};
  const Packet incoming{0, 2, 3, 1, PacketKind::background, {}};
  const auto result = step_node(node, {incoming}, false, 10);
  CHECK(result.delivered.empty());
  CHECK(result.forwarded.empty());
  CHECK(result.dropped == 0);
  REQUIRE(node.queue.size() == 1);
  CHECK(node.queue.front() == incoming);
}

TEST_CASE("step_node: head packet addressed here is delivered after ageing") {
  NodeState node;
  node.address = 2;
  node.routing_table = {2, 2, 2};
  node.queue.push_back(Packet{0, 2, 4, 2, PacketKind::background, {}});
  const auto result = step_node(node, {}, false, 10);
  REQUIRE(result.delivered.size() == 1);
  CHECK(result.delivered[0].transit_time == 5);
  CHECK(result.delivered[0].hops == 2);
  CHECK(node.queue.empty());
}

TEST_CASE("step_node: hold ages the queue but releases nothing") {
  NodeState node;
  node.address = 1;
  node.routing_table = {0, 1, 2};
  node.queue.push_back(Packet{0, 2, 1, 1, PacketKind::background, {}});
  const auto result = step_node(node, {}, true, 10);
  CHECK(result.delivered.empty());
  CHECK(result.forwarded.empty());
  REQUIRE(node.queue.size() == 1);
  CHECK(node.queue.front().transit_time == 2);
}

TEST_CASE("step_node: a full queue drops the overflow") {
  NodeState node;
  node.address = 0;
  node.routing_table = {0, 1, 1};
  for (int i = 0; i < 3; ++i)
    node.queue.push_back(Packet{1, 2, 0, 0, PacketKind::background, {}});
  std::vector<Packet> incoming{Packet{2, 0, 1, 1, PacketKind::background, {}},
                               Packet{1, 0, 1, 1, PacketKind::background, {}}};
  const auto result = step_node(node, incoming, true, 3);
  CHECK(result.dropped == 2);
  CHECK(node.queue.size() == 3);
}

TEST_CASE("step_node: incoming appended in ascending sender order") {
  NodeState node;
  node.address = 0;
  node.routing_table = {0, 1, 1, 1};
  std::vector<Packet> incoming{Packet{3, 0, 1, 1, PacketKind::background, {}},
                               Packet{1, 0, 1, 1, PacketKind::background, {}},
                               Packet{2, 0, 1, 1, PacketKind::background, {}}};
  step_node(node, incoming, false, 10);
  REQUIRE(node.queue.size() == 3);
  CHECK(node.queue[0].sender == 1);
  CHECK(node.queue[1].sender == 2);
  CHECK(node.queue[2].sender == 3);
}

TEST_CASE("step: nothing happens without traffic or probes") {
  SimConfig cfg = base_config(line_graph(3), {0, 2});
  cfg.send_prob = 0.0;
  cfg.warmup = 50;
  Simulation sim(cfg);
  sim.step();
  CHECK(sim.created() == 0);
  CHECK(sim.queued_packets() == 0);
  CHECK(sim.timestep() == 1);
}

TEST_CASE("step: s = 1 creates one packet per node") {
  SimConfig cfg = base_config(line_graph(3), {0, 2});
  cfg.send_prob = 1.0;
  cfg.warmup = 50;
  Simulation sim(cfg);
  sim.step();
  CHECK(sim.created() == 3);
}

TEST_CASE("identical configs give bit-identical summaries") {
  SimConfig cfg = base_config(square_graph(), {0, 2});
  cfg.anomalous = {1};
  cfg.duration = 3000;
  const SimSummary a = run_simulation(cfg);
  const SimSummary b = run_simulation(cfg);
  CHECK(a == b);
  CHECK(!a.probe_records.empty());
}

TEST_CASE("hold probability is irrelevant without anomalous nodes") {
  SimConfig cfg = base_config(square_graph(), {0, 2});
  cfg.anomalous = {};
  cfg.hold_prob = 0.0;
  const SimSummary a = run_simulation(cfg);
  cfg.hold_prob = 1.0;
  const SimSummary b = run_simulation(cfg);
  CHECK(a == b);
}

TEST_CASE("duration equal to warmup retains no probe records") {
  SimConfig cfg = base_config(line_graph(3), {0, 2});
  cfg.duration = 500;
  cfg.warmup = 500;
  const SimSummary s = run_simulation(cfg);
  CHECK(s.probe_records.empty());
}

TEST_CASE("conservation holds after every timestep") {
  SimConfig cfg = base_config(square_graph(), {0, 2});
  cfg.anomalous = {3};
  cfg.queue_capacity = 4;  // force drops
  cfg.send_prob = 0.6;
  Simulation sim(cfg);
  for (int t = 0; t < 1500; ++t) {
    sim.step();
    REQUIRE(sim.created() == sim.delivered() + sim.dropped() + sim.queued_packets());
  }
  CHECK(sim.dropped() > 0);
}

TEST_CASE("queues never exceed capacity") {
  SimConfig cfg = base_config(square_graph(), {0, 2});
  cfg.queue_capacity = 3;
  cfg.send_prob = 0.9;
  cfg.anomalous = {1};
  cfg.hold_prob = 0.8;
  Simulation sim(cfg);
  for (int t = 0; t < 1000; ++t) {
    sim.step();
    for (std::uint32_t q : sim.queue_lengths()) REQUIRE(q <= 3);
  }
}

TEST_CASE("every probe record satisfies delay >= hops >= 1") {
  SimConfig cfg = base_config(square_graph(), {0, 1, 2});
  cfg.duration = 5000;
  const SimSummary s = run_simulation(cfg);
  REQUIRE(!s.probe_records.empty());
  for (const ProbeRecord& r : s.probe_records) {
    REQUIRE(r.hops >= 1);
    REQUIRE(r.delay >= r.hops);
    REQUIRE(r.arrival >= cfg.warmup);
  }
}

TEST_CASE("distribution set: counting and normalising") {
  std::vector<ProbeRecord> records{
      {{0, 2}, 3, 2, 100}, {{0, 2}, 3, 2, 110}, {{0, 2}, 5, 2, 120}};
  const DistributionSet set = build_distribution_set(records, {0, 2});
  const auto& fwd = set.pairs.at({0, 2});
  CHECK_FALSE(fwd.empty);
  CHECK(fwd.delay.at(3) == doctest::Approx(2.0 / 3.0));
  CHECK(fwd.delay.at(5) == doctest::Approx(1.0 / 3.0));
  CHECK(fwd.hops.at(2) == doctest::Approx(1.0));
  const auto& rev = set.pairs.at({2, 0});
  CHECK(rev.empty);
  CHECK(rev.delay.empty());
}

TEST_CASE("distribution set: non-empty histograms sum to one") {
  SimConfig cfg = base_config(square_graph(), {0, 2, 3});
  cfg.duration = 4000;
  const SimSummary s = run_simulation(cfg);
  const DistributionSet set = build_distribution_set(s.probe_records, cfg.monitors);
  CHECK(set.pairs.size() == 6);
  for (const auto& [pair, dists] : set.pairs) {
    if (dists.empty) continue;
    double delay_mass = 0.0, hop_mass = 0.0;
    for (const auto& [bin, m] : dists.delay) delay_mass += m;
    for (const auto& [bin, m] : dists.hops) hop_mass += m;
    CHECK(delay_mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(hop_mass == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("an anomalous node on the only path lifts the mean probe delay") {
  SimConfig cfg = base_config(line_graph(5), {0, 4});
  cfg.duration = 60000;
  cfg.warmup = 1000;
  cfg.probe_period = 5;
  cfg.seed = 3;

  cfg.anomalous = {};
  const SimSummary healthy = run_simulation(cfg);
  cfg.anomalous = {2};
  cfg.hold_prob = 0.5;
  const SimSummary held = run_simulation(cfg);

  REQUIRE(healthy.probe_records.size() >= 10000);
  REQUIRE(held.probe_records.size() >= 10000);
  const double mean_h = mean_delay(healthy.probe_records);
  const double mean_a = mean_delay(held.probe_records);
  const double var_h = delay_variance(healthy.probe_records, mean_h);
  const double var_a = delay_variance(held.probe_records, mean_a);
  const double se = std::sqrt(var_h / healthy.probe_records.size() +
                              var_a / held.probe_records.size());
  // one-sided z test at 95%
  CHECK((mean_a - mean_h) / se > 1.645);
}

TEST_CASE("load balancing: saturated node avoided while a cheaper route exists") {
  SimConfig cfg = base_config(square_graph(), {0, 2});
  cfg.anomalous = {1};
  cfg.hold_prob = 1.0;  // node 1 never serves its queue
  cfg.send_prob = 0.5;
  cfg.probe_period = 1;
  cfg.warmup = 0;
  cfg.duration = 400;
  Simulation sim(cfg);
  for (int t = 0; t < 400; ++t) {
    sim.step();
    const auto lengths = sim.queue_lengths();
    const auto& w = sim.current_weights();
    const double via1 = w.at(0, 1) + w.at(1, 2);
    const double via3 = w.at(0, 3) + w.at(3, 2);
    const NodeAddress hop = sim.routing().next_hop(0, 2);
    if (via3 < via1) REQUIRE(hop == 3);
    if (via1 < via3) REQUIRE(hop == 1);
  }
  // the blocked node really did congest
  CHECK(sim.node(1).queue.size() > 0);
}

TEST_CASE("config validation rejects bad inputs") {
  SimConfig cfg = base_config(line_graph(3), {0, 2});
  cfg.monitors = {0};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.monitors = {0, 0};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.monitors = {0, 7};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.monitors = {0, 2};
  cfg.send_prob = 1.5;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.send_prob = 0.2;
  cfg.warmup = cfg.duration + 1;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.warmup = 10;
  cfg.queue_capacity = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("background send counts track the Bernoulli rate") {
  SimConfig cfg = base_config(line_graph(6), {0, 5});
  cfg.send_prob = 0.2;
  cfg.duration = 20000;
  cfg.warmup = 1;
  cfg.probe_period = 1u << 30;  // no probes: pure background run
  cfg.seed = 9;
  Simulation sim(cfg);
  sim.run();
  const double expected = cfg.send_prob * static_cast<double>(cfg.duration);
  const double se = std::sqrt(static_cast<double>(cfg.duration) * 0.2 * 0.8);
  for (std::uint64_t count : sim.background_sent_per_node())
    CHECK(std::abs(static_cast<double>(count) - expected) <= 4.0 * se);
}
