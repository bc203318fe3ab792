// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/sim/config.hpp"

#include <cmath>
#include <stdexcept>

#include "eunomia/mem_controller.hpp"

namespace eunomia::sim {

const char* to_string(Scheduling s) {
    return s == Scheduling::Srpt ? "srpt" : "fifo";
}

const char* to_string(TrafficKind k) {
    switch (k) {
    case TrafficKind::Poisson: return "poisson";
    case TrafficKind::Incast: return "incast";
    case TrafficKind::Single: return "single";
    }
    return "?";
}

namespace {

void require(bool ok, const char* what) {
    if (!ok)
        throw std::invalid_argument(what);
}

bool finite_pos(double x) { return std::isfinite(x) && x > 0; }

}  // namespace

void SimConfig::validate() const {
    const auto& t = topology;
    switch (t.kind) {
    case TopologyKind::Clos:
        require(t.spines > 0 && t.leaves > 0 && t.hosts_per_leaf > 0, "clos sizes must be positive");
        require(t.leaves * t.hosts_per_leaf >= 2, "need at least two hosts");
        break;
    case TopologyKind::FatTree:
        require(t.k >= 2 && t.k % 2 == 0, "fat-tree k must be even and at least 2");
        break;
    case TopologyKind::Jellyfish:
        require(t.switches >= 2 && t.degree >= 1 && t.degree < t.switches, "jellyfish degree must be below switch count");
        require(uint64_t{t.switches} * t.degree % 2 == 0, "jellyfish needs an even number of port ends");
        require(t.hosts >= 2, "need at least two hosts");
        break;
    case TopologyKind::Custom:
        throw std::invalid_argument("custom topologies are built in code, not from config");
    }
    require(finite_pos(t.link_gbps), "link_gbps must be positive");
    require(std::isfinite(t.prop_ns) && t.prop_ns >= 0, "prop_ns must be non-negative");
    require(std::fabs(8000.0 / t.link_gbps - std::round(8000.0 / t.link_gbps)) < 1e-9,
            "link_gbps must give a whole number of picoseconds per byte");

    require(transport.payload_bytes > 0 && transport.payload_bytes <= 9000, "payload_bytes must be in [1, 9000]");
    require(transport.rtt_estimate_ns >= 0 && transport.timeout_ns >= 0, "timers must be non-negative");

    const auto& r = reorder;
    require(r.block_size_bits > 0, "block_size_bits must be positive");
    require(r.cap_blocks <= 255, "cap_blocks must be at most 255");
    require(r.static_bits > 0, "static_bits must be positive");
    require(r.max_connections >= 1 && r.max_connections <= 256, "max_connections must be in [1, 256]");
    if (r.tracker == TrackerKind::HdBitmap && r.cap_blocks > 0) {
        require(r.block_size_bits % 8 == 0, "controller-backed bitmaps need whole-byte blocks");
        ControllerConfig cc;
        cc.block_bytes = r.block_size_bits / 8;
        cc.total_blocks = r.controller_blocks;
        cc.max_connections = r.max_connections;
        cc.bitmap_cap_blocks = r.cap_blocks;
        cc.metadata_blocks = static_cast<uint32_t>(
            (MetadataLayout::required_bytes(r.cap_blocks) + cc.block_bytes - 1) / cc.block_bytes);
        cc.validate();
    }

    require(sw.buffer_bytes > 0 || sw.buffer_per_port_bytes > 0, "switch buffer must be positive");
    require(finite_pos(sw.dt_alpha), "dt_alpha must be positive");
    require(sw.ttl > 0 && sw.ttl <= 255, "ttl must be in [1, 255]");
    require(lb.k_paths >= 1, "k_paths must be at least 1");

    const auto& tr = traffic;
    require(finite_pos(tr.duration_ns), "traffic duration must be positive");
    switch (tr.kind) {
    case TrafficKind::Poisson:
        require(tr.load > 0 && tr.load <= 1, "load must be in (0, 1]");
        break;
    case TrafficKind::Incast:
        require(tr.load > 0 && tr.load <= 1, "load must be in (0, 1]");
        require(tr.incast_fan_in >= 1 && tr.incast_flow_bytes > 0, "incast needs senders and bytes");
        require(tr.background_load >= 0 && tr.background_load < 1, "background_load must be in [0, 1)");
        break;
    case TrafficKind::Single:
        require(tr.single_src != tr.single_dst, "single flow needs distinct endpoints");
        require(tr.single_bytes > 0, "single flow needs bytes");
        break;
    }

    const auto& f = failures;
    require(f.fraction >= 0 && f.fraction <= 1, "failure fraction must be in [0, 1]");
    if (f.enabled) {
        require(finite_pos(f.interval_ns), "failure interval must be positive");
        require(f.reroute_delay_ns >= 0 && f.first_at_ns >= 0, "failure delays must be non-negative");
    }

    require(finite_pos(horizon_ns), "horizon must be positive");
    require(finite_pos(sample_interval_ns), "sample interval must be positive");
}

}  // namespace eunomia::sim
