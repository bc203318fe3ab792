// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "eunomia/exp/memory.hpp"
#include "eunomia/hd_bitmap.hpp"
#include "eunomia/sim/network.hpp"
#include "../support/oracles.hpp"

using namespace eunomia;
using namespace eunomia::sim;
using Kind = TrackOutcome::Kind;

namespace {

// Pinned tolerances.
constexpr double kParityTol = 0.10;       // static vs dynamic FCT
constexpr double kTriggerRatio = 10.0;    // NoOrdering vs HdBitmap triggers
constexpr double kIdealTol = 0.15;        // HdBitmap vs ideal ordering FCT
constexpr double kJellyfishRatio = 1.5;   // PO2+HdBitmap over FKSP throughput
constexpr double kStaticTotalBytes = 41;  // 256-bit static bitmap + 9 B state
constexpr int kSeeds = 5;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " FAILED[" << what << "]";
        }
    }
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<void(Verdict&)>& body) {
    Verdict v;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << " exception: " << e.what();
    }
    double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (el >= budget_s) {
        v.pass = false;
        v.detail << " over time budget " << budget_s << " s";
    }
    failures += !v.pass;
    std::printf("%s  C%-2d %-34s %8.2f s %s\n", v.pass ? "PASS" : "FAIL", id, name, el, v.detail.str().c_str());
    std::fflush(stdout);
}

// Runs every config, in parallel when the machine allows it.
std::vector<RunMetrics> run_all(const std::vector<SimConfig>& cfgs) {
    std::vector<RunMetrics> out(cfgs.size());
    std::size_t next = 0;
    std::mutex mu;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> g(mu);
                if (next == cfgs.size() || err)
                    return;
                i = next++;
            }
            try {
                out[i] = Network(cfgs[i]).run();
            } catch (...) {
                std::lock_guard<std::mutex> g(mu);
                err = std::current_exception();
            }
        }
    };
    unsigned n = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), unsigned(cfgs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
    return out;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

std::string fmt(const std::vector<double>& v, int prec = 1) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << v[i];
    return os.str();
}

SimConfig desk(uint64_t seed, LbPolicy lb, TrackerKind tracker) {
    SimConfig c;  // 4 spines, 4 leaves, 4 hosts per leaf
    c.traffic.load = 0.8;
    c.traffic.duration_ns = 5'000'000;
    c.lb.policy = lb;
    c.reorder.tracker = tracker;
    c.seed = seed;
    return c;
}

// --- 1 ---------------------------------------------------------------------

void fig7_trace(Verdict& v) {
    HdBitmap bm(SeqNum(0), 8, 2);
    std::vector<uint32_t> heads;
    for (uint32_t s : {0u, 6u, 8u, 11u, 15u, 1u, 2u, 3u, 4u, 5u, 7u}) {
        uint64_t grew = bm.growth_events();
        auto r = bm.track(SeqNum(s));
        v.require(r.kind != Kind::Untrackable && r.kind != Kind::Duplicate, "tracked " + std::to_string(s));
        if (bm.growth_events() != grew)
            v.require(s == 11, "growth at " + std::to_string(s));
        heads.push_back(bm.head().value);
    }
    v.require(heads[0] == 1, "head 1 after 0");
    for (int i = 1; i < 10; ++i)
        v.require(heads[i] < 9, "head stays below 9 before 7");
    v.require(heads.back() == 9, "head 9 after the batch");
    v.require(bm.growth_events() == 1, "one growth");
    v.require(bm.merge_events() == 1, "one merge");
    v.detail << "heads " << heads[0] << "->" << heads.back() << " growth " << bm.growth_events() << " merge "
             << bm.merge_events();
}

// --- 2 ---------------------------------------------------------------------

void oracle_equivalence(Verdict& v) {
    std::mt19937_64 rng(20240601);
    uint64_t steps = 0, mismatches = 0, dups = 0;
    for (uint32_t n : {8u, 64u, 256u}) {
        for (int trial = 0; trial < 10'000; ++trial) {
            uint32_t bs = 1 + uint32_t(rng() % 32);
            uint32_t need = (n + bs - 1) / bs;
            uint32_t cap = rng() % 8 == 0 ? kUncapped : need + uint32_t(rng() % 4);
            uint32_t h = uint32_t(rng() % 100'000);
            std::vector<uint32_t> seqs(n);
            std::iota(seqs.begin(), seqs.end(), h);
            std::shuffle(seqs.begin(), seqs.end(), rng);
            for (uint32_t i = 0; i < n / 8; ++i)
                seqs.insert(seqs.begin() + long(rng() % seqs.size()), h + uint32_t(rng() % n));

            HdBitmap bm(SeqNum(h), bs, cap);
            oracle::MinMissing o(h);
            for (uint32_t s : seqs) {
                ++steps;
                bool dup = o.is_duplicate(s);
                bool over = cap != kUncapped && s >= o.head() + cap * bs;
                auto r = bm.track(SeqNum(s));
                dups += dup;
                if ((r.kind == Kind::Duplicate) != dup || (r.kind == Kind::Untrackable) != over)
                    ++mismatches;
                if (!over)
                    o.receive(s);
                if (bm.head().value != o.head())
                    ++mismatches;
            }
        }
    }
    v.require(mismatches == 0, "mismatches");
    v.detail << steps << " steps, " << dups << " duplicates, " << mismatches << " mismatches";
}

// --- 3 ---------------------------------------------------------------------

void memory_trend(Verdict& v) {
    exp::MemoryExperimentConfig cfg;  // 20 connections, 16-bit blocks, 16-block cap
    auto pts = exp::run_memory_experiment(cfg);
    double first_exceed = -1;
    for (const auto& p : pts) {
        v.require(p.bitmap_bytes <= p.static_bitmap_bytes, "bitmap <= static");
        v.require(p.static_total_bytes == kStaticTotalBytes, "static 41 B");
        if (p.total_bytes > kStaticTotalBytes && first_exceed < 0)
            first_exceed = p.ooo_fraction;
        if (p.ooo_fraction < 0.5 - 1e-9)
            v.require(p.total_bytes <= kStaticTotalBytes, "no exceed below 50%");
    }
    v.require(pts.front().ooo_fraction == 0 && pts.front().total_bytes == 0, "zero at 0%");
    v.require(first_exceed >= 0.5 - 1e-9 && first_exceed <= 0.7 + 1e-9, "crossover within 60% +- 10%");
    std::vector<double> tot;
    for (const auto& p : pts)
        tot.push_back(p.total_bytes);
    v.detail << "crossover " << first_exceed * 100 << "% total B [" << fmt(tot) << "]";
}

// --- 4 ---------------------------------------------------------------------

void static_parity(Verdict& v) {
    std::vector<SimConfig> cfgs;
    for (int s = 1; s <= kSeeds; ++s) {
        cfgs.push_back(desk(s, LbPolicy::Drill, TrackerKind::HdBitmap));
        auto st = desk(s, LbPolicy::Drill, TrackerKind::StaticBitmap);
        st.reorder.static_bits = 128;
        cfgs.push_back(st);
    }
    auto runs = run_all(cfgs);
    std::vector<double> fh, fs, bh, bs;
    for (int s = 0; s < kSeeds; ++s) {
        auto h = summarize(runs[2 * s]), st = summarize(runs[2 * s + 1]);
        fh.push_back(h.fct.mean / 1000);
        fs.push_back(st.fct.mean / 1000);
        bh.push_back(h.mean_bitmap_bytes);
        bs.push_back(st.mean_bitmap_bytes);
        v.require(h.mean_bitmap_bytes < st.mean_bitmap_bytes, "bitmap bytes seed " + std::to_string(s + 1));
    }
    double dev = std::abs(mean(fh) - mean(fs)) / mean(fs);
    v.require(dev <= kParityTol, "fct parity");
    v.detail << "fct us hd [" << fmt(fh) << "] static [" << fmt(fs) << "] dev " << dev * 100 << "%; bitmap B hd ["
             << fmt(bh) << "] static [" << fmt(bs) << "]";
}

// --- 5, 6, 8 --------------------------------------------------------------

struct DeskRuns {
    std::vector<Summary> ecmp, spray_hd, spray_none, spray_ideal;
    uint64_t drops = 0;
};

const DeskRuns& desk_runs() {
    static DeskRuns d = [] {
        std::vector<SimConfig> cfgs;
        for (int s = 1; s <= kSeeds; ++s) {
            cfgs.push_back(desk(s, LbPolicy::Ecmp, TrackerKind::NoOrdering));
            cfgs.push_back(desk(s, LbPolicy::PacketSpray, TrackerKind::HdBitmap));
            cfgs.push_back(desk(s, LbPolicy::PacketSpray, TrackerKind::NoOrdering));
            cfgs.push_back(desk(s, LbPolicy::PacketSpray, TrackerKind::IdealOrderingLayer));
        }
        auto runs = run_all(cfgs);
        DeskRuns r;
        for (int s = 0; s < kSeeds; ++s) {
            r.ecmp.push_back(summarize(runs[4 * s]));
            r.spray_hd.push_back(summarize(runs[4 * s + 1]));
            r.spray_none.push_back(summarize(runs[4 * s + 2]));
            r.spray_ideal.push_back(summarize(runs[4 * s + 3]));
        }
        for (const auto& m : runs)
            r.drops += m.counters.dropped;
        return r;
    }();
    return d;
}

void trigger_separation(Verdict& v) {
    const auto& d = desk_runs();
    std::vector<double> none, hd;
    for (int s = 0; s < kSeeds; ++s) {
        none.push_back(double(d.spray_none[s].recovery_triggers));
        hd.push_back(double(d.spray_hd[s].recovery_triggers));
        v.require(none.back() > 0 && none.back() >= kTriggerRatio * hd.back(),
                  "10x seed " + std::to_string(s + 1));
    }
    v.detail << "triggers none [" << fmt(none, 0) << "] hd [" << fmt(hd, 0) << "]";
}

void fct_direction(Verdict& v) {
    const auto& d = desk_runs();
    std::vector<double> e, h, i;
    int wins = 0;
    for (int s = 0; s < kSeeds; ++s) {
        e.push_back(d.ecmp[s].fct.mean / 1000);
        h.push_back(d.spray_hd[s].fct.mean / 1000);
        i.push_back(d.spray_ideal[s].fct.mean / 1000);
        wins += h.back() < e.back();
    }
    double dev = std::abs(mean(h) - mean(i)) / mean(i);
    v.require(wins >= 4, "spray+hd beats ecmp in 4 of 5");
    v.require(dev <= kIdealTol, "within 15% of ideal");
    v.detail << "fct us ecmp [" << fmt(e) << "] spray+hd [" << fmt(h) << "] ideal [" << fmt(i) << "] wins " << wins
             << "/5 dev " << dev * 100 << "%";
}

void pfc_direction(Verdict& v) {
    const auto& d = desk_runs();
    std::vector<double> e, h;
    int wins = 0;
    for (int s = 0; s < kSeeds; ++s) {
        e.push_back(d.ecmp[s].host_paused_ns_mean / 1000);
        h.push_back(d.spray_hd[s].host_paused_ns_mean / 1000);
        wins += e.back() > h.back();
    }
    v.require(wins >= 4, "ecmp pauses more in 4 of 5");
    v.require(d.drops == 0, "lossless");
    v.detail << "host paused us ecmp [" << fmt(e) << "] spray+hd [" << fmt(h) << "] wins " << wins << "/5 drops "
             << d.drops;
}

// --- 7 ---------------------------------------------------------------------

void reordering_trends(Verdict& v) {
    std::vector<SimConfig> cfgs;
    for (int s = 1; s <= kSeeds; ++s)
        for (double load : {0.3, 0.8}) {
            auto c = desk(s, LbPolicy::PacketSpray, TrackerKind::HdBitmap);
            c.traffic.load = load;
            c.transport.window_packets = 26;  // two bandwidth-delay products
            cfgs.push_back(c);
        }
    auto runs = run_all(cfgs);
    std::vector<double> lo, hi, small, big;
    int load_ok = 0, size_ok = 0;
    for (int s = 0; s < kSeeds; ++s) {
        lo.push_back(summarize(runs[2 * s]).reorder_fraction);
        hi.push_back(summarize(runs[2 * s + 1]).reorder_fraction);
        double sa = 0, so = 0, ba = 0, bo = 0;
        for (const auto& f : runs[2 * s + 1].flows) {
            if (f.size_bytes <= 4096) {
                sa += double(f.data_arrivals);
                so += double(f.ooo_arrivals);
            } else if (f.size_bytes >= 65536) {
                ba += double(f.data_arrivals);
                bo += double(f.ooo_arrivals);
            }
        }
        small.push_back(sa ? so / sa : 0);
        big.push_back(ba ? bo / ba : 0);
        load_ok += hi.back() > lo.back();
        size_ok += big.back() > small.back();
    }
    v.require(load_ok == kSeeds, "80% > 30% every seed");
    v.require(size_ok == kSeeds, ">=64KB > <=4KB every seed");
    v.detail << "load30 [" << fmt(lo, 3) << "] load80 [" << fmt(hi, 3) << "] small [" << fmt(small, 3) << "] big ["
             << fmt(big, 3) << "]";
}

// --- 9 ---------------------------------------------------------------------

void jellyfish_direction(Verdict& v) {
    std::vector<SimConfig> cfgs;
    for (int s = 1; s <= kSeeds; ++s)
        for (auto [lb, tr] : {std::pair{LbPolicy::PowerOfTwo, TrackerKind::HdBitmap},
                              std::pair{LbPolicy::Fksp, TrackerKind::NoOrdering}}) {
            SimConfig c;
            c.topology.kind = TopologyKind::Jellyfish;
            c.topology.switches = 20;
            c.topology.degree = 3;
            c.topology.hosts = 16;
            c.sw.pfc = false;
            c.traffic.load = 0.8;
            c.traffic.duration_ns = 20'000'000;
            c.lb.policy = lb;
            c.reorder.tracker = tr;
            c.seed = s;
            cfgs.push_back(c);
        }
    auto runs = run_all(cfgs);
    std::vector<double> po2, fksp;
    for (int s = 0; s < kSeeds; ++s) {
        po2.push_back(summarize(runs[2 * s]).goodput_gbps);
        fksp.push_back(summarize(runs[2 * s + 1]).goodput_gbps);
    }
    double ratio = mean(po2) / mean(fksp);
    v.require(ratio >= kJellyfishRatio, "ratio >= 1.5");
    v.detail << "goodput Gbps po2+hd [" << fmt(po2) << "] fksp [" << fmt(fksp) << "] ratio " << ratio;
}

// --- 10 --------------------------------------------------------------------

void incast_direction(Verdict& v) {
    std::vector<SimConfig> cfgs;
    for (int s = 1; s <= kSeeds; ++s)
        for (bool defl : {true, false}) {
            SimConfig c;
            c.topology.spines = 8;
            c.topology.leaves = 8;
            c.topology.hosts_per_leaf = 8;
            c.sw.pfc = false;
            c.sw.buffer_per_port_bytes = 56'000;
            c.sw.deflection = defl;
            c.transport.recovery = RecoveryMode::SelectiveRepeat;
            c.reorder.tracker = defl ? TrackerKind::HdBitmap : TrackerKind::NoOrdering;
            c.traffic.kind = TrafficKind::Incast;
            c.traffic.incast_fan_in = 50;
            c.traffic.incast_flow_bytes = 40'000;
            c.traffic.load = 0.5;
            c.traffic.duration_ns = 5'000'000;
            c.seed = s;
            cfgs.push_back(c);
        }
    auto runs = run_all(cfgs);
    std::vector<double> d, n;
    for (int s = 0; s < kSeeds; ++s) {
        auto a = summarize(runs[2 * s]), b = summarize(runs[2 * s + 1]);
        v.require(a.qct.count > 0 && a.qct.count == b.qct.count, "queries complete");
        d.push_back(a.qct.mean / 1000);
        n.push_back(b.qct.mean / 1000);
    }
    v.require(mean(d) <= mean(n), "deflection+hd qct <= sr qct");
    v.detail << "qct us deflect+hd [" << fmt(d) << "] sr [" << fmt(n) << "] means " << mean(d) << " vs " << mean(n);
}

// --- 11 --------------------------------------------------------------------

void failure_resilience(Verdict& v) {
    const std::vector<double> fractions{0.01, 0.05, 0.10};
    constexpr int kFailureSeeds = 10;
    std::vector<SimConfig> cfgs;
    for (double f : fractions)
        for (int s = 1; s <= kFailureSeeds; ++s)
            for (bool spray : {false, true}) {
                SimConfig c;
                c.topology.spines = 8;
                c.topology.leaves = 8;
                c.topology.hosts_per_leaf = 4;
                c.sw.pfc = false;
                c.transport.timeout_ns = 50'000;
                c.traffic.cdf = "high_variance";
                c.traffic.load = 0.5;
                c.traffic.duration_ns = 10'000'000;
                c.failures.enabled = true;
                c.failures.fraction = f;
                c.failures.reroute_delay_ns = 500'000;
                c.lb.policy = spray ? LbPolicy::PacketSpray : LbPolicy::Ecmp;
                c.reorder.tracker = spray ? TrackerKind::HdBitmap : TrackerKind::NoOrdering;
                c.seed = s;
                cfgs.push_back(c);
            }
    auto runs = run_all(cfgs);
    std::vector<double> ecmp, spray, gap;
    std::size_t i = 0;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        double sum[2] = {0, 0};
        uint64_t cnt[2] = {0, 0};
        for (int s = 0; s < kFailureSeeds; ++s)
            for (int p = 0; p < 2; ++p, ++i)
                for (const auto& f : runs[i].flows)
                    if (f.affected && f.completed()) {
                        sum[p] += f.slowdown();
                        ++cnt[p];
                    }
        v.require(cnt[0] > 0 && cnt[1] > 0, "affected flows present");
        ecmp.push_back(cnt[0] ? sum[0] / double(cnt[0]) : 0);
        spray.push_back(cnt[1] ? sum[1] / double(cnt[1]) : 0);
        gap.push_back(ecmp.back() - spray.back());
    }
    v.require(ecmp.back() - ecmp.front() > spray.back() - spray.front(), "ecmp grows faster");
    for (std::size_t k = 0; k < gap.size(); ++k)
        v.require(gap[k] > 0, "ecmp above spray");
    v.require(gap[1] > gap[0] && gap[2] > gap[1], "monotone gap");
    v.detail << "affected slowdown at 1/5/10% ecmp [" << fmt(ecmp, 2) << "] spray+hd [" << fmt(spray, 2) << "] gap ["
             << fmt(gap, 2) << "]";
}

// --- 12 --------------------------------------------------------------------

void write_hold(Verdict& v) {
    SimConfig c;
    c.transport.verb = Verb::Write;
    c.transport.window_packets = 16;
    auto topo = Topology::from_edges(1, {}, 2);
    std::vector<FlowSpec> flow{FlowSpec{0, 0, 1, 10'000, 0}};
    Network plain(c, topo, flow);
    double a = plain.run().flows.at(0).fct_ns;
    c.transport.write_hold = true;
    Network held(c, topo, flow);
    double b = held.run().flows.at(0).fct_ns;
    SimTime rtt = held.analytic_rtt(2, WirePacket{.size_bytes = 1000}.wire_bytes());
    SimTime diff = ns_to_ps(b - a);
    v.require(diff == rtt, "exact rtt");
    v.detail << "difference " << diff << " ps, analytic rtt " << rtt << " ps";
}

// --- 13 --------------------------------------------------------------------

void controller_fuzz(Verdict& v) {
    auto a = oracle::fuzz_controller(13, 100'000);
    auto b = oracle::fuzz_controller(13, 100'000);
    v.require(a.violations.empty(), a.violations.empty() ? "" : a.violations.front());
    v.require(a.indices == b.indices, "deterministic indices");
    v.require(a.inits > 0 && a.allocs > 0 && a.releases > 0 && a.errors > 0, "all paths exercised");
    v.detail << a.inits << " inits, " << a.allocs << " allocs, " << a.releases << " releases, " << a.errors
             << " refusals, " << a.violations.size() << " violations";
}

}  // namespace

int main() {
    criterion(1, "hybrid bitmap trace", 1, fig7_trace);
    criterion(2, "min-missing oracle equivalence", 30, oracle_equivalence);
    criterion(3, "memory utilization trend", 60, memory_trend);
    criterion(4, "static vs dynamic parity", 600, static_parity);
    criterion(5, "recovery trigger separation", 600, trigger_separation);
    criterion(6, "fct direction", 900, fct_direction);
    criterion(7, "reordering factor trends", 600, reordering_trends);
    criterion(8, "pfc direction", 600, pfc_direction);
    criterion(9, "jellyfish direction", 900, jellyfish_direction);
    criterion(10, "incast direction", 600, incast_direction);
    criterion(11, "failure resilience direction", 900, failure_resilience);
    criterion(12, "write hold overhead", 1, write_hold);
    criterion(13, "memory controller invariants", 60, controller_fuzz);
    std::printf("%d of 13 criteria failed\n", failures);
    return failures;
}
