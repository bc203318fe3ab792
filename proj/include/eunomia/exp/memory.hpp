// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <vector>

namespace eunomia::exp {

// Receiver-NIC memory footprint under synthetic reordering. Connections
// share one memory controller; reordered connections displace each packet
// with probability `degree` by a uniform 1..max_displacement positions. A NACKed
// packet is retransmitted after the connection's other pending arrivals.
struct MemoryExperimentConfig {
    uint32_t connections = 20;
    uint32_t packets_per_connection = 512;
    std::vector<double> ooo_fractions{0, .1, .2, .3, .4, .5, .6, .7, .8, .9, 1};
    std::vector<double> degrees{.1, .2, .3, .4, .5, .6, .7, .8, .9, 1};
    uint32_t block_bits = 16;
    uint32_t cap_blocks = 16;
    uint32_t static_bits = 256;
    uint32_t max_displacement = 255;
    uint64_t seed = 1;

    void validate() const;
};

// Per-connection bytes, averaged over each connection's lifetime, then
// over connections and degrees.
struct MemoryPoint {
    double ooo_fraction = 0;
    double bitmap_bytes = 0;
    double total_bytes = 0;
    double static_bitmap_bytes = 0;
    double static_total_bytes = 0;
    uint64_t nacks = 0;
};

std::vector<MemoryPoint> run_memory_experiment(const MemoryExperimentConfig& cfg);

}  // namespace eunomia::exp
