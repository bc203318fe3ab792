// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace eunomia::sim {

struct FlowRecord {
    uint32_t flow_id = 0;
    int32_t query_id = -1;
    uint32_t src = 0, dst = 0;
    uint64_t size_bytes = 0;
    double start_ns = 0;
    double fct_ns = -1;       // -1: did not complete
    double ideal_fct_ns = 0;  // unloaded pipe model on a shortest route
    uint64_t retransmissions = 0;
    uint64_t recovery_triggers = 0;
    uint64_t timeouts = 0;
    uint64_t max_bitmap_bytes = 0;
    uint64_t sack_count = 0;
    uint64_t nack_count = 0;
    uint64_t data_arrivals = 0;
    uint64_t ooo_arrivals = 0;
    bool affected = false;  // lost a packet to a failed link or missing route

    bool completed() const { return fct_ns >= 0; }
    double slowdown() const { return completed() && ideal_fct_ns > 0 ? fct_ns / ideal_fct_ns : 0; }
};

struct PortRecord {
    uint32_t node = 0, port = 0, peer = 0;
    bool host_port = false;  // egress of a server NIC
    double paused_ns = 0;
    uint64_t pause_events = 0;
    uint64_t tx_bytes = 0;
    uint64_t drops = 0;
};

struct TimeSample {
    double time_ns = 0;
    uint64_t conn_count = 0;
    uint64_t bitmap_bytes = 0;
    uint64_t metadata_bytes = 0;
    uint64_t total_bytes = 0;
    double throughput_gbps = 0;  // in-order payload delivered in the interval
};

struct QueryRecord {
    uint32_t query_id = 0;
    uint32_t receiver = 0;
    double start_ns = 0;
    double qct_ns = -1;
};

struct Counters {
    uint64_t injected = 0;    // data packets put on a host wire
    uint64_t delivered = 0;   // data packets that reached their host
    uint64_t dropped = 0;
    uint64_t in_flight = 0;   // data packets alive when the run stopped
    uint64_t drop_buffer = 0, drop_ttl = 0, drop_failure = 0, drop_route = 0;
    uint64_t deflections = 0;
    uint64_t data_wire_bytes = 0;
    uint64_t metadata_bytes = 0;
    uint64_t control_wire_bytes = 0;
    uint64_t control_packets = 0;
    uint64_t events = 0;
    uint64_t link_failures = 0;
};

struct RunMetrics {
    std::vector<FlowRecord> flows;
    std::vector<PortRecord> ports;
    std::vector<TimeSample> series;
    std::vector<QueryRecord> queries;
    Counters counters;
    double end_ns = 0;
    double window_ns = 0;           // traffic arrival window
    double goodput_bytes_in_window = 0;
    double rtt_estimate_ns = 0;
    uint32_t window_packets = 0;
    uint32_t host_count = 0;
    bool all_complete = false;

    bool conserved() const {
        return counters.injected == counters.delivered + counters.dropped + counters.in_flight;
    }
};

// Power-of-two size buckets: bucket b holds sizes in (2^(b-1), 2^b].
uint32_t size_bucket(uint64_t bytes);
// With explicit upper edges, bucket i holds sizes in (edges[i-1], edges[i]];
// sizes above the last edge land in bucket edges.size().
uint32_t bucket_of(uint64_t bytes, const std::vector<uint64_t>& edges);

struct FctStats {
    uint64_t count = 0;
    double mean = 0, median = 0, p99 = 0;
};

FctStats fct_stats(const std::vector<double>& values);

/// Scalars derived purely from the raw records.
struct Summary {
    FctStats fct;
    std::map<uint32_t, FctStats> fct_by_bucket;
    uint64_t flows = 0, completed = 0;
    double reorder_fraction = 0;
    uint64_t recovery_triggers = 0;
    uint64_t retransmissions = 0;
    uint64_t timeouts = 0;
    uint64_t drops = 0;
    double overhead_fraction = 0;
    double host_paused_ns_mean = 0;   // per server port
    double host_pause_fraction = 0;
    double switch_paused_ns_mean = 0;
    double mean_bitmap_bytes = 0;     // over time samples
    double mean_total_memory_bytes = 0;
    double goodput_gbps = 0;          // in-order payload within the arrival window
    FctStats qct;
    FctStats affected_slowdown;
    uint64_t affected_flows = 0;
};

Summary summarize(const RunMetrics& m, const std::vector<uint64_t>& bucket_edges = {});

}  // namespace eunomia::sim
