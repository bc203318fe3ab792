// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/exp/memory.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <random>
#include <stdexcept>

#include "eunomia/endpoint.hpp"
#include "eunomia/mem_controller.hpp"
#include "eunomia/tracker.hpp"

namespace eunomia::exp {

void MemoryExperimentConfig::validate() const {
    if (connections == 0 || connections > 256)
        throw std::invalid_argument("connections must be in [1, 256]");
    if (packets_per_connection == 0)
        throw std::invalid_argument("packets_per_connection must be positive");
    if (block_bits == 0 || block_bits % 8)
        throw std::invalid_argument("block_bits must be a positive multiple of 8");
    if (max_displacement == 0)
        throw std::invalid_argument("max_displacement must be positive");
    for (double f : ooo_fractions)
        if (!(f >= 0 && f <= 1))
            throw std::invalid_argument("ooo fractions must lie in [0, 1]");
    if (degrees.empty())
        throw std::invalid_argument("at least one reordering degree is required");
    for (double d : degrees)
        if (!(d >= 0 && d <= 1))
            throw std::invalid_argument("degrees must lie in [0, 1]");
}

namespace {

std::deque<uint32_t> arrival_order(uint32_t n, double degree, uint32_t max_disp, std::mt19937_64& rng) {
    std::vector<std::pair<uint64_t, uint32_t>> keyed(n);
    std::uniform_real_distribution<double> coin(0, 1);
    std::uniform_int_distribution<uint32_t> disp(1, max_disp);
    for (uint32_t i = 0; i < n; ++i) {
        uint64_t k = coin(rng) < degree ? disp(rng) : 0;
        keyed[i] = {uint64_t{i} + k, i};
    }
    std::sort(keyed.begin(), keyed.end());
    std::deque<uint32_t> out;
    for (auto [key, seq] : keyed)
        out.push_back(seq);
    return out;
}

struct Conn {
    std::unique_ptr<ReceiverAgent> rcv;
    std::deque<uint32_t> pending;
    double bitmap_sum = 0, total_sum = 0;
    uint64_t samples = 0;
};

}  // namespace

std::vector<MemoryPoint> run_memory_experiment(const MemoryExperimentConfig& cfg) {
    cfg.validate();
    uint32_t block_bytes = cfg.block_bits / 8;

    ControllerConfig cc;
    cc.block_bytes = block_bytes;
    cc.bitmap_cap_blocks = cfg.cap_blocks;
    cc.metadata_blocks = (MetadataLayout::required_bytes(cfg.cap_blocks) + block_bytes - 1) / block_bytes;
    cc.max_connections = cfg.connections;
    cc.total_blocks = cfg.connections * (cc.metadata_blocks + cfg.cap_blocks);
    cc.validate();

    StaticBitmapTracker comparator(SeqNum(0), cfg.static_bits);
    double static_bitmap = static_cast<double>(comparator.bitmap_bytes());
    double static_total = static_bitmap + static_cast<double>(comparator.metadata_bytes());

    ReceiverConfig rc;
    rc.tracker = TrackerKind::HdBitmap;
    rc.block_size_bits = cfg.block_bits;
    rc.cap_blocks = cfg.cap_blocks;

    std::vector<MemoryPoint> points;
    for (std::size_t fi = 0; fi < cfg.ooo_fractions.size(); ++fi) {
        double frac = cfg.ooo_fractions[fi];
        auto reordered = static_cast<uint32_t>(std::lround(frac * cfg.connections));
        MemoryPoint pt;
        pt.ooo_fraction = frac;
        pt.static_bitmap_bytes = static_bitmap;
        pt.static_total_bytes = static_total;

        for (std::size_t di = 0; di < cfg.degrees.size(); ++di) {
            std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ull + fi * 1000 + di);
            MemController ctrl(cc);
            std::vector<Conn> conns(cfg.connections);
            for (uint32_t c = 0; c < cfg.connections; ++c) {
                conns[c].rcv = std::make_unique<ReceiverAgent>(ConnectionId(static_cast<uint8_t>(c)), SeqNum(0), rc,
                                                               &ctrl);
                double degree = c < reordered ? cfg.degrees[di] : 0;
                conns[c].pending = arrival_order(cfg.packets_per_connection, degree, cfg.max_displacement, rng);
            }

            bool active = true;
            while (active) {
                active = false;
                for (uint32_t c = 0; c < cfg.connections; ++c) {
                    Conn& C = conns[c];
                    if (C.pending.empty())
                        continue;
                    active = true;
                    uint32_t seq = C.pending.front();
                    C.pending.pop_front();
                    WirePacket pkt;
                    pkt.conn = ConnectionId(static_cast<uint8_t>(c));
                    pkt.seq = SeqNum(seq);
                    pkt.head = SeqNum(0);
                    pkt.is_last = seq + 1 == cfg.packets_per_connection;
                    ReceiveResult r = C.rcv->on_packet(pkt);
                    if (r.dropped) {
                        ++pt.nacks;
                        C.pending.push_back(seq);
                    }
                    C.rcv->completion();
                    auto bm = static_cast<double>(C.rcv->bitmap_bytes());
                    C.bitmap_sum += bm;
                    C.total_sum += bm + static_cast<double>(C.rcv->metadata_bytes());
                    ++C.samples;
                }
            }

            for (const Conn& C : conns) {
                if (!C.rcv->completion_notified())
                    throw std::logic_error("memory experiment connection did not complete");
                pt.bitmap_bytes += C.bitmap_sum / static_cast<double>(C.samples);
                pt.total_bytes += C.total_sum / static_cast<double>(C.samples);
            }
        }
        double n = static_cast<double>(cfg.connections) * static_cast<double>(cfg.degrees.size());
        pt.bitmap_bytes /= n;
        pt.total_bytes /= n;
        points.push_back(pt);
    }
    return points;
}

}  // namespace eunomia::exp
