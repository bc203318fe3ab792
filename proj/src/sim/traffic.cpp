// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/sim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eunomia::sim {

FlowSizeCdf::FlowSizeCdf(std::vector<Point> points) : _pts(std::move(points)) {
    if (_pts.empty())
        throw std::invalid_argument("empty flow-size distribution");
    for (std::size_t i = 0; i < _pts.size(); ++i) {
        if (_pts[i].size < 1 || _pts[i].prob < 0 || _pts[i].prob > 1)
            throw std::invalid_argument("flow-size point out of range");
        if (i && (_pts[i].prob < _pts[i - 1].prob || _pts[i].size < _pts[i - 1].size))
            throw std::invalid_argument("flow-size distribution must be nondecreasing");
    }
    if (std::abs(_pts.back().prob - 1.0) > 1e-9)
        throw std::invalid_argument("flow-size distribution must end at probability 1");
}

FlowSizeCdf FlowSizeCdf::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open flow-size file " + path);
    std::vector<Point> pts;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        Point p;
        if (ss >> p.size >> p.prob)
            pts.push_back(p);
    }
    return FlowSizeCdf(std::move(pts));
}

uint64_t FlowSizeCdf::quantile(double u) const {
    if (u <= _pts.front().prob)
        return static_cast<uint64_t>(std::llround(_pts.front().size));
    for (std::size_t i = 1; i < _pts.size(); ++i) {
        if (u <= _pts[i].prob) {
            const Point &a = _pts[i - 1], &b = _pts[i];
            double f = b.prob > a.prob ? (u - a.prob) / (b.prob - a.prob) : 1.0;
            return static_cast<uint64_t>(std::llround(a.size + f * (b.size - a.size)));
        }
    }
    return static_cast<uint64_t>(std::llround(_pts.back().size));
}

uint64_t FlowSizeCdf::sample(std::mt19937_64& rng) const {
    return std::max<uint64_t>(1, quantile(std::uniform_real_distribution<double>(0.0, 1.0)(rng)));
}

double FlowSizeCdf::mean() const {
    double m = _pts.front().prob * _pts.front().size;
    for (std::size_t i = 1; i < _pts.size(); ++i)
        m += (_pts[i].prob - _pts[i - 1].prob) * 0.5 * (_pts[i].size + _pts[i - 1].size);
    return m;
}

namespace {

uint32_t other_host(uint32_t hosts, uint32_t not_this, std::mt19937_64& rng) {
    auto d = static_cast<uint32_t>(rng() % (hosts - 1));
    return d >= not_this ? d + 1 : d;
}

}  // namespace

std::vector<FlowSpec> poisson_flows(uint32_t hosts, double link_bps, double load, const FlowSizeCdf& cdf,
                                    SimTime window, std::mt19937_64& rng, uint32_t first_id) {
    std::vector<FlowSpec> flows;
    if (hosts < 2 || load <= 0)
        return flows;
    double rate_per_s = load * hosts * link_bps / (8.0 * cdf.mean());
    std::exponential_distribution<double> gap(rate_per_s);
    double t = 0;
    while (true) {
        t += gap(rng);
        auto at = static_cast<SimTime>(t * 1e12);
        if (at >= window)
            break;
        FlowSpec f;
        f.id = first_id + static_cast<uint32_t>(flows.size());
        f.src = static_cast<uint32_t>(rng() % hosts);
        f.dst = other_host(hosts, f.src, rng);
        f.bytes = cdf.sample(rng);
        f.start = at;
        flows.push_back(f);
    }
    return flows;
}

void incast_queries(uint32_t hosts, double link_bps, double load, uint32_t fan_in, uint64_t flow_bytes,
                    SimTime window, std::mt19937_64& rng, std::vector<FlowSpec>& flows,
                    std::vector<QuerySpec>& queries) {
    if (fan_in == 0 || fan_in >= hosts)
        throw std::invalid_argument("incast fan-in must be in [1, hosts)");
    if (load <= 0)
        return;
    double query_bytes = double(fan_in) * double(flow_bytes);
    double rate_per_s = load * hosts * link_bps / (8.0 * query_bytes);
    std::exponential_distribution<double> gap(rate_per_s);
    double t = 0;
    while (true) {
        t += gap(rng);
        auto at = static_cast<SimTime>(t * 1e12);
        if (at >= window)
            break;
        QuerySpec q;
        q.id = static_cast<uint32_t>(queries.size());
        q.receiver = static_cast<uint32_t>(rng() % hosts);
        q.start = at;
        std::vector<uint32_t> pool;
        for (uint32_t h = 0; h < hosts; ++h)
            if (h != q.receiver)
                pool.push_back(h);
        std::shuffle(pool.begin(), pool.end(), rng);
        for (uint32_t i = 0; i < fan_in; ++i) {
            FlowSpec f;
            f.id = static_cast<uint32_t>(flows.size());
            f.src = pool[i];
            f.dst = q.receiver;
            f.bytes = flow_bytes;
            f.start = at;
            f.query = static_cast<int32_t>(q.id);
            q.flows.push_back(f.id);
            flows.push_back(f);
        }
        queries.push_back(std::move(q));
    }
}

}  // namespace eunomia::sim
