// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "eunomia/sim/network.hpp"

using namespace eunomia;
using namespace eunomia::sim;

namespace {

uint32_t switch_links(const Topology& t) {
    return static_cast<uint32_t>(
        std::count_if(t.links().begin(), t.links().end(), [](const Link& l) { return l.switch_link; }));
}

SimConfig small_clos(double load, uint64_t seed) {
    SimConfig c;
    c.topology.spines = 2;
    c.topology.leaves = 2;
    c.topology.hosts_per_leaf = 4;
    c.traffic.load = load;
    c.traffic.duration_ns = 500'000;
    c.seed = seed;
    return c;
}

SimConfig bare() {
    SimConfig c;
    c.transport.window_packets = 16;
    return c;
}

}  // namespace

TEST_CASE("clos counts") {
    auto t = Topology::clos(2, 2, 4);
    CHECK(t.switch_count() == 4);
    CHECK(t.host_count() == 8);
    CHECK(switch_links(t) == 4);
    CHECK(t.links().size() == 12);
    CHECK(t.host_diameter() == 4);
    CHECK(t.tor_of(0) == t.tor_of(3));
    CHECK(t.tor_of(0) != t.tor_of(4));
}

TEST_CASE("fat tree counts") {
    auto t = Topology::fat_tree(4);
    CHECK(t.switch_count() == 20);
    CHECK(t.host_count() == 16);
    CHECK(switch_links(t) == 32);
    CHECK(t.host_diameter() == 6);
    CHECK_THROWS_AS(Topology::fat_tree(3), InfeasibleSpec);
}

TEST_CASE("jellyfish is regular and connected") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        auto t = Topology::jellyfish(10, 3, 7, seed);
        CHECK(t.switch_count() == 10);
        CHECK(t.host_count() == 7);
        CHECK(t.connected());
        for (uint32_t s = t.host_count(); s < t.node_count(); ++s)
            CHECK(t.switch_degree(s) == 3);
    }
    CHECK_THROWS_AS(Topology::jellyfish(5, 3, 4, 1), InfeasibleSpec);
}

TEST_CASE("k shortest paths on a ring") {
    // hosts 0..3 on switches 4..7
    auto t = Topology::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 4);
    auto paths = t.k_shortest_paths(0, 2, 5);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0] == Path{0, 4, 5, 6, 2});
    CHECK(paths[1] == Path{0, 4, 7, 6, 2});

    std::vector<bool> up(t.links().size(), true);
    up[static_cast<std::size_t>(t.ports(5)[t.port_towards(5, 6)].link)] = false;
    auto avoid = t.k_shortest_paths(0, 2, 5, up);
    REQUIRE(avoid.size() == 1);
    CHECK(avoid[0] == Path{0, 4, 7, 6, 2});
}

TEST_CASE("yen paths on clos are distinct, loop free and sorted") {
    auto t = Topology::clos(4, 4, 2);
    auto paths = t.k_shortest_paths(0, 7, 8);
    REQUIRE(paths.size() == 8);
    std::set<Path> seen;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        CHECK(seen.insert(p).second);
        CHECK(std::set<uint32_t>(p.begin(), p.end()).size() == p.size());
        CHECK(p.front() == 0);
        CHECK(p.back() == 7);
        for (std::size_t j = 1; j < p.size(); ++j)
            CHECK(t.port_towards(p[j - 1], p[j]) >= 0);
        if (i)
            CHECK(paths[i - 1].size() <= p.size());
    }
    CHECK(paths[3].size() == 5);
    CHECK(paths[4].size() == 7);
}

TEST_CASE("spray walks the eligible ports in order") {
    LbState lb(0, false);
    std::mt19937_64 rng(1);
    std::vector<uint16_t> ports{0, 1, 2};
    QueueProbe q = [](uint16_t) { return uint64_t{0}; };
    std::vector<uint16_t> got;
    for (int i = 0; i < 4; ++i)
        got.push_back(lb.select(LbPolicy::PacketSpray, {7, 3}, ports, q, rng));
    CHECK(got == std::vector<uint16_t>{0, 1, 2, 0});
}

TEST_CASE("ecmp is a pure function of flow and salt") {
    std::vector<uint16_t> ports{0, 1, 2, 3};
    QueueProbe q = [](uint16_t) { return uint64_t{0}; };
    std::map<uint16_t, int> hist;
    for (uint64_t f = 0; f < 4000; ++f) {
        LbState a(42), b(42);
        std::mt19937_64 r1(1), r2(99);
        uint16_t p = a.select(LbPolicy::Ecmp, {f, 1}, ports, q, r1);
        CHECK(p == a.select(LbPolicy::Ecmp, {f, 1}, ports, q, r1));
        CHECK(p == b.select(LbPolicy::Ecmp, {f, 1}, ports, q, r2));
        ++hist[p];
    }
    REQUIRE(hist.size() == 4);
    for (auto [p, n] : hist)
        CHECK(n > 800);
}

TEST_CASE("least of two picks the shorter queue") {
    std::mt19937_64 rng(3);
    std::vector<uint64_t> load{5000, 2000};
    for (int i = 0; i < 100; ++i)
        CHECK(least_of_two(2, [&](std::size_t j) { return load[j]; }, rng) == 1);
}

TEST_CASE("drill avoids a loaded port") {
    LbState lb(5);
    std::mt19937_64 rng(11);
    std::vector<uint16_t> ports{0, 1, 2, 3};
    QueueProbe q = [](uint16_t p) { return p == 2 ? uint64_t{0} : uint64_t{100'000}; };
    int hits = 0;
    for (int i = 0; i < 200; ++i)
        hits += lb.select(LbPolicy::Drill, {uint64_t(i), 9}, ports, q, rng) == 2;
    CHECK(hits > 180);
}

TEST_CASE("cdf quantile interpolates") {
    FlowSizeCdf c({{1000, .5}, {2000, 1}});
    CHECK(c.quantile(0.1) == 1000);
    CHECK(c.quantile(0.5) == 1000);
    CHECK(c.quantile(0.75) == 1500);
    CHECK(c.quantile(1.0) == 2000);
    CHECK(c.mean() == doctest::Approx(1250));
    CHECK_THROWS(FlowSizeCdf({{1000, .6}, {2000, .5}}));
    CHECK_THROWS(FlowSizeCdf({{1000, .5}, {2000, .9}}));
}

TEST_CASE("bundled cdfs load") {
    for (const char* name : {"heavy_tailed", "high_variance"}) {
        auto c = load_cdf(name);
        CHECK(c.points().back().prob == doctest::Approx(1.0));
        std::mt19937_64 rng(1);
        double sum = 0;
        for (int i = 0; i < 200'000; ++i)
            sum += double(c.sample(rng));
        CHECK(sum / 200'000 == doctest::Approx(c.mean()).epsilon(0.05));
    }
}

TEST_CASE("poisson offered load matches target") {
    auto cdf = load_cdf("heavy_tailed");
    std::mt19937_64 rng(7);
    SimTime window = 200 * kPsPerMs;
    auto flows = poisson_flows(16, 10e9, 0.5, cdf, window, rng);
    double bytes = 0;
    for (const auto& f : flows) {
        CHECK(f.src != f.dst);
        CHECK(f.start < window);
        bytes += double(f.bytes);
    }
    double offered = bytes * 8 / (0.2 * 16 * 10e9);
    CHECK(offered == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("single flow completes in the pipe time") {
    auto cfg = bare();
    auto topo = Topology::from_edges(1, {}, 2);
    Network net(cfg, topo, {FlowSpec{0, 0, 1, 10'000, 0}});
    auto m = net.run();
    REQUIRE(m.flows.size() == 1);
    // 1063 wire bytes at 0.8 ns per byte, two links of 1 us
    double ser = 1063 * 0.8;
    double expect = (10 + 2 - 1) * ser + 2 * 1000.0;
    CHECK(m.flows[0].fct_ns == doctest::Approx(expect).epsilon(1e-9));
    CHECK(m.flows[0].ideal_fct_ns == doctest::Approx(expect).epsilon(1e-9));
    CHECK(m.flows[0].ooo_arrivals == 0);
    CHECK(m.counters.dropped == 0);
    CHECK(m.all_complete);
    CHECK(m.conserved());
}

TEST_CASE("analytic rtt closed form") {
    auto cfg = bare();
    Network net(cfg, Topology::from_edges(1, {}, 2), {});
    // data serialised once per extra hop, ACK of 62 bytes per hop, 2 us propagation per hop
    SimTime expect = SimTime(1063) * 800 + 2 * (2 * 1'000'000 + SimTime(62) * 800);
    CHECK(net.analytic_rtt(2, 1063) == expect);
}

TEST_CASE("write hold delays the last packet by one round trip") {
    auto cfg = bare();
    cfg.transport.verb = Verb::Write;
    auto topo = Topology::from_edges(1, {}, 2);
    std::vector<FlowSpec> flow{FlowSpec{0, 0, 1, 10'000, 0}};
    Network plain(cfg, topo, flow);
    double a = plain.run().flows[0].fct_ns;
    cfg.transport.write_hold = true;
    Network held(cfg, topo, flow);
    double b = held.run().flows[0].fct_ns;
    CHECK(ns_to_ps(b - a) == held.analytic_rtt(2, 1063));
}

TEST_CASE("runs are deterministic") {
    auto cfg = small_clos(0.6, 4);
    cfg.lb.policy = LbPolicy::PacketSpray;
    auto trace = [&] {
        std::vector<TraceEvent> out;
        Network n(cfg);
        n.set_trace([&](const TraceEvent& e) { out.push_back(e); });
        auto m = n.run();
        return std::make_pair(out, m.counters.events);
    };
    auto [t1, e1] = trace();
    auto [t2, e2] = trace();
    REQUIRE(t1.size() == t2.size());
    CHECK(e1 == e2);
    bool same = true;
    for (std::size_t i = 0; i < t1.size() && same; ++i)
        same = t1[i].time == t2[i].time && t1[i].packet_uid == t2[i].packet_uid && t1[i].node == t2[i].node &&
               t1[i].kind == t2[i].kind;
    CHECK(same);
}

TEST_CASE("pfc keeps a loaded fabric lossless") {
    for (auto policy : {LbPolicy::Ecmp, LbPolicy::PacketSpray, LbPolicy::Drill}) {
        auto cfg = small_clos(0.9, 2);
        cfg.lb.policy = policy;
        auto m = Network(cfg).run();
        CHECK(m.counters.dropped == 0);
        CHECK(m.all_complete);
        CHECK(m.conserved());
    }
}

TEST_CASE("packets are conserved under failures and loss") {
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        auto cfg = small_clos(0.8, seed);
        cfg.sw.pfc = false;
        cfg.sw.buffer_per_port_bytes = 6000;
        cfg.failures.enabled = true;
        cfg.failures.fraction = 0.25;
        cfg.failures.interval_ns = 100'000;
        cfg.transport.recovery = RecoveryMode::SelectiveRepeat;
        auto m = Network(cfg).run();
        CHECK(m.counters.dropped > 0);
        CHECK(m.conserved());
    }
}

TEST_CASE("links deliver in fifo order") {
    auto cfg = small_clos(0.8, 3);
    cfg.lb.policy = LbPolicy::PacketSpray;
    Network n(cfg);
    const auto& topo = n.topology();
    std::map<std::pair<uint32_t, uint32_t>, std::vector<uint64_t>> sent, got;
    n.set_trace([&](const TraceEvent& e) {
        if (e.kind == TraceEvent::Kind::TxStart) {
            sent[{e.node, e.port}].push_back(e.packet_uid);
        } else if (e.kind == TraceEvent::Kind::Arrive) {
            const auto& pr = topo.ports(e.node)[e.port];
            got[{pr.peer, pr.peer_port}].push_back(e.packet_uid);
        }
    });
    auto m = n.run();
    REQUIRE(m.all_complete);
    REQUIRE(!got.empty());
    for (const auto& [link, arrivals] : got) {
        const auto& tx = sent[link];
        REQUIRE(tx.size() >= arrivals.size());
        CHECK(std::equal(arrivals.begin(), arrivals.end(), tx.begin()));
    }
}

TEST_CASE("spraying reorders where ecmp does not") {
    auto ecmp = small_clos(0.7, 5);
    auto spray = ecmp;
    spray.lb.policy = LbPolicy::PacketSpray;
    auto a = summarize(Network(ecmp).run());
    auto b = summarize(Network(spray).run());
    CHECK(a.reorder_fraction == 0);
    CHECK(b.reorder_fraction > 0);
}

TEST_CASE("deflection trades drops for detours") {
    SimConfig cfg;
    cfg.topology.spines = 4;
    cfg.topology.leaves = 4;
    cfg.topology.hosts_per_leaf = 8;
    cfg.sw.pfc = false;
    cfg.sw.buffer_per_port_bytes = 20'000;
    cfg.transport.recovery = RecoveryMode::SelectiveRepeat;
    cfg.traffic.kind = TrafficKind::Incast;
    cfg.traffic.incast_fan_in = 24;
    cfg.traffic.load = 0.3;
    cfg.traffic.duration_ns = 500'000;
    uint64_t with = 0, without = 0;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        cfg.seed = seed;
        cfg.sw.deflection = false;
        auto m0 = Network(cfg).run();
        cfg.sw.deflection = true;
        auto m1 = Network(cfg).run();
        CHECK(m0.counters.deflections == 0);
        CHECK(m1.counters.deflections > 0);
        CHECK(m1.conserved());
        without += m0.counters.dropped;
        with += m1.counters.dropped;
    }
    CHECK(without > 0);
    CHECK(with < without);
}

TEST_CASE("invalid configs are rejected") {
    SimConfig c;
    c.traffic.load = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SimConfig{};
    c.topology.link_gbps = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SimConfig{};
    c.topology.kind = TopologyKind::Jellyfish;
    c.topology.switches = 5;
    c.topology.degree = 3;
    CHECK_THROWS(Network{c});
}
