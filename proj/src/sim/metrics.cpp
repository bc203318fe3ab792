// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/sim/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace eunomia::sim {

uint32_t size_bucket(uint64_t bytes) {
    if (bytes <= 1)
        return 0;
    return static_cast<uint32_t>(std::bit_width(bytes - 1));
}

uint32_t bucket_of(uint64_t bytes, const std::vector<uint64_t>& edges) {
    if (edges.empty())
        return size_bucket(bytes);
    auto it = std::lower_bound(edges.begin(), edges.end(), bytes);
    return static_cast<uint32_t>(it - edges.begin());
}

FctStats fct_stats(const std::vector<double>& values) {
    FctStats s;
    if (values.empty())
        return s;
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    s.count = v.size();
    double sum = 0;
    for (double x : v)
        sum += x;
    s.mean = sum / double(v.size());
    s.median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    // nearest rank
    auto rank = static_cast<std::size_t>(std::ceil(0.99 * double(v.size())));
    s.p99 = v[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

Summary summarize(const RunMetrics& m, const std::vector<uint64_t>& bucket_edges) {
    Summary s;
    std::vector<double> fcts, slow;
    std::map<uint32_t, std::vector<double>> by_bucket;
    uint64_t arrivals = 0, ooo = 0;
    for (const auto& f : m.flows) {
        ++s.flows;
        arrivals += f.data_arrivals;
        ooo += f.ooo_arrivals;
        s.recovery_triggers += f.recovery_triggers;
        s.retransmissions += f.retransmissions;
        s.timeouts += f.timeouts;
        if (f.affected)
            ++s.affected_flows;
        if (!f.completed())
            continue;
        ++s.completed;
        fcts.push_back(f.fct_ns);
        by_bucket[bucket_of(f.size_bytes, bucket_edges)].push_back(f.fct_ns);
        if (f.affected)
            slow.push_back(f.slowdown());
    }
    s.fct = fct_stats(fcts);
    for (const auto& [b, v] : by_bucket)
        s.fct_by_bucket[b] = fct_stats(v);
    s.reorder_fraction = arrivals ? double(ooo) / double(arrivals) : 0;
    s.affected_slowdown = fct_stats(slow);

    std::vector<double> qcts;
    for (const auto& q : m.queries)
        if (q.qct_ns >= 0)
            qcts.push_back(q.qct_ns);
    s.qct = fct_stats(qcts);

    uint64_t host_ports = 0, switch_ports = 0;
    double host_paused = 0, switch_paused = 0;
    for (const auto& p : m.ports) {
        s.drops += p.drops;
        if (p.host_port) {
            ++host_ports;
            host_paused += p.paused_ns;
        } else {
            ++switch_ports;
            switch_paused += p.paused_ns;
        }
    }
    s.host_paused_ns_mean = host_ports ? host_paused / double(host_ports) : 0;
    s.switch_paused_ns_mean = switch_ports ? switch_paused / double(switch_ports) : 0;
    s.host_pause_fraction = m.end_ns > 0 ? s.host_paused_ns_mean / m.end_ns : 0;

    double bm = 0, tot = 0;
    for (const auto& t : m.series) {
        bm += double(t.bitmap_bytes);
        tot += double(t.total_bytes);
    }
    if (!m.series.empty()) {
        s.mean_bitmap_bytes = bm / double(m.series.size());
        s.mean_total_memory_bytes = tot / double(m.series.size());
    }

    const auto& c = m.counters;
    uint64_t all = c.data_wire_bytes + c.control_wire_bytes;
    s.overhead_fraction = all ? double(c.metadata_bytes + c.control_wire_bytes) / double(all) : 0;
    s.goodput_gbps = m.window_ns > 0 ? m.goodput_bytes_in_window * 8.0 / m.window_ns : 0;
    return s;
}

}  // namespace eunomia::sim
