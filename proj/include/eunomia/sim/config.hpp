// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eunomia/core.hpp"
#include "eunomia/endpoint.hpp"
#include "eunomia/sim/lb.hpp"
#include "eunomia/sim/topology.hpp"

namespace eunomia::sim {

enum class Scheduling : uint8_t { Fifo, Srpt };
enum class TrafficKind : uint8_t { Poisson, Incast, Single };

const char* to_string(Scheduling s);
const char* to_string(TrafficKind k);

struct TopologyConfig {
    TopologyKind kind = TopologyKind::Clos;
    uint32_t spines = 4;
    uint32_t leaves = 4;
    uint32_t hosts_per_leaf = 4;
    uint32_t k = 4;            // fat-tree arity
    uint32_t switches = 20;    // jellyfish
    uint32_t degree = 3;       // jellyfish switch-facing ports
    uint32_t hosts = 16;       // jellyfish
    uint64_t graph_seed = 1;   // jellyfish wiring
    double link_gbps = 10.0;
    double prop_ns = 1000.0;
};

struct TransportConfig {
    uint32_t payload_bytes = 1000;
    uint32_t window_packets = 0;    // 0: one bandwidth-delay product
    double rtt_estimate_ns = 0;     // 0: analytic RTT across the host diameter
    double timeout_ns = 0;          // 0: three RTTs plus a full queue at each switch hop
    RecoveryMode recovery = RecoveryMode::GoBackN;
    Verb verb = Verb::SendRecv;
    bool write_hold = false;
};

struct ReorderConfig {
    TrackerKind tracker = TrackerKind::HdBitmap;
    uint32_t block_size_bits = 16;
    uint32_t cap_blocks = 16;         // 0: uncapped, bitmaps live off-controller
    uint32_t static_bits = 256;
    uint32_t sr_buffer_packets = 0;   // 0: one window
    uint32_t controller_blocks = 16384;
    uint32_t max_connections = 256;
};

struct SwitchConfig {
    uint64_t buffer_bytes = 0;               // shared buffer per switch; 0: per-port budget x ports
    uint64_t buffer_per_port_bytes = 28'000;
    uint64_t queue_cap_bytes = 0;  // static lossy per-port limit; 0: dynamic threshold
    double dt_alpha = 1.0;         // lossy queue limit = alpha x free shared buffer
    bool pfc = true;
    bool deflection = false;
    uint32_t ttl = 64;
    Scheduling scheduling = Scheduling::Fifo;
};

struct LbConfig {
    LbPolicy policy = LbPolicy::Ecmp;
    uint32_t k_paths = 8;
    bool hashed_spray_start = true;
};

struct TrafficConfig {
    TrafficKind kind = TrafficKind::Poisson;
    double load = 0.5;
    std::string cdf = "heavy_tailed";  // bundled name or file path
    double duration_ns = 2'000'000;    // arrival window
    uint32_t incast_fan_in = 50;
    uint64_t incast_flow_bytes = 40'000;
    double background_load = 0;        // Poisson traffic alongside incast
    uint32_t single_src = 0;
    uint32_t single_dst = 1;
    uint64_t single_bytes = 10'000;
};

struct FailureConfig {
    bool enabled = false;
    double fraction = 0.01;
    double interval_ns = 1'000'000;
    double reroute_delay_ns = 100'000;
    double first_at_ns = 0;  // 0: one interval in
};

struct SimConfig {
    TopologyConfig topology;
    TransportConfig transport;
    ReorderConfig reorder;
    SwitchConfig sw;
    LbConfig lb;
    TrafficConfig traffic;
    FailureConfig failures;
    double horizon_ns = 200'000'000;  // hard stop, drain included
    double sample_interval_ns = 1'000'000;
    uint64_t seed = 1;

    // Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

}  // namespace eunomia::sim
