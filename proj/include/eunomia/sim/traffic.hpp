// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "eunomia/core.hpp"

namespace eunomia::sim {

/// Piecewise-linear flow-size distribution read from a two-column file:
/// size_bytes cumulative_probability. Probabilities are nondecreasing and
/// end at 1. Mass below the first point sits at the first size.
class FlowSizeCdf {
public:
    struct Point {
        double size;
        double prob;
    };

    FlowSizeCdf() = default;
    explicit FlowSizeCdf(std::vector<Point> points);
    static FlowSizeCdf load(const std::string& path);
    static FlowSizeCdf fixed(uint64_t bytes) { return FlowSizeCdf({{double(bytes), 1.0}}); }

    uint64_t sample(std::mt19937_64& rng) const;
    uint64_t quantile(double u) const;
    double mean() const;
    const std::vector<Point>& points() const { return _pts; }

private:
    std::vector<Point> _pts;
};

struct FlowSpec {
    uint32_t id = 0;
    uint32_t src = 0;
    uint32_t dst = 0;
    uint64_t bytes = 0;
    SimTime start = 0;
    int32_t query = -1;  // incast query this flow belongs to
};

struct QuerySpec {
    uint32_t id = 0;
    uint32_t receiver = 0;
    SimTime start = 0;
    std::vector<uint32_t> flows;
};

// Poisson arrivals, uniform random source and distinct destination.
// Offered load is a fraction of aggregate host line rate.
std::vector<FlowSpec> poisson_flows(uint32_t hosts, double link_bps, double load, const FlowSizeCdf& cdf,
                                    SimTime window, std::mt19937_64& rng, uint32_t first_id = 0);

// Poisson query arrivals; each query is `fan_in` distinct senders writing
// `flow_bytes` to one receiver.
void incast_queries(uint32_t hosts, double link_bps, double load, uint32_t fan_in, uint64_t flow_bytes,
                    SimTime window, std::mt19937_64& rng, std::vector<FlowSpec>& flows,
                    std::vector<QuerySpec>& queries);

}  // namespace eunomia::sim
