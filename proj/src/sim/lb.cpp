// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/sim/lb.hpp"

#include <algorithm>
#include <stdexcept>

namespace eunomia::sim {

const char* to_string(LbPolicy p) {
    switch (p) {
    case LbPolicy::Ecmp: return "ecmp";
    case LbPolicy::PacketSpray: return "packet_spray";
    case LbPolicy::Drill: return "drill";
    case LbPolicy::PowerOfTwo: return "po2";
    case LbPolicy::Fksp: return "fksp";
    }
    return "?";
}

std::optional<LbPolicy> lb_policy_from_string(std::string_view s) {
    for (auto p : {LbPolicy::Ecmp, LbPolicy::PacketSpray, LbPolicy::Drill, LbPolicy::PowerOfTwo, LbPolicy::Fksp})
        if (s == to_string(p))
            return p;
    return std::nullopt;
}

uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::size_t least_of_two(std::size_t n, const std::function<uint64_t(std::size_t)>& load, std::mt19937_64& rng) {
    if (n == 1)
        return 0;
    std::size_t a = rng() % n;
    std::size_t b = rng() % (n - 1);
    if (b >= a)
        ++b;
    uint64_t la = load(a), lb = load(b);
    if (la != lb)
        return la < lb ? a : b;
    return std::min(a, b);
}

uint16_t LbState::select(LbPolicy policy, const LbKey& key, std::span<const uint16_t> eligible,
                         const QueueProbe& queue_bytes, std::mt19937_64& rng) {
    if (eligible.empty())
        throw std::invalid_argument("no eligible next hop");
    std::size_t n = eligible.size();
    if (n == 1)
        return eligible[0];

    switch (policy) {
    case LbPolicy::Ecmp:
        return eligible[mix64(key.flow ^ mix64(_salt)) % n];

    case LbPolicy::PacketSpray: {
        auto [it, fresh] = _cursor.try_emplace(key.flow, 0);
        if (fresh && _hashed_start)
            it->second = static_cast<uint32_t>(mix64(key.flow + _salt) % n);
        return eligible[it->second++ % n];
    }

    case LbPolicy::Drill: {
        // two random samples plus the remembered best for this destination
        std::size_t a = rng() % n, b = rng() % n;
        uint16_t best = eligible[a];
        uint64_t best_q = queue_bytes(best);
        auto consider = [&](uint16_t p) {
            uint64_t q = queue_bytes(p);
            if (q < best_q) {
                best = p;
                best_q = q;
            }
        };
        consider(eligible[b]);
        auto mem = _best.find(key.dst);
        if (mem != _best.end() && std::find(eligible.begin(), eligible.end(), mem->second) != eligible.end())
            consider(mem->second);
        _best[key.dst] = best;
        return best;
    }

    case LbPolicy::PowerOfTwo: {
        auto i = least_of_two(n, [&](std::size_t j) { return queue_bytes(eligible[j]); }, rng);
        return eligible[i];
    }

    case LbPolicy::Fksp: {
        auto [it, fresh] = _pinned.try_emplace(key.flow, 0);
        if (fresh)
            it->second = static_cast<uint16_t>(rng() % n);
        return eligible[it->second % n];
    }
    }
    return eligible[0];
}

void LbState::forget_flow(uint64_t flow) {
    _cursor.erase(flow);
    _pinned.erase(flow);
}

}  // namespace eunomia::sim
