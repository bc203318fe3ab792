// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <unordered_map>

namespace eunomia::sim {

enum class LbPolicy : uint8_t { Ecmp, PacketSpray, Drill, PowerOfTwo, Fksp };

const char* to_string(LbPolicy p);
std::optional<LbPolicy> lb_policy_from_string(std::string_view s);

// Source-routed policies pick a whole path at the sender's edge.
inline bool source_routed(LbPolicy p) { return p == LbPolicy::PowerOfTwo || p == LbPolicy::Fksp; }

uint64_t mix64(uint64_t x);

// What a switch knows about the packet being forwarded.
struct LbKey {
    uint64_t flow = 0;
    uint32_t dst = 0;
};

using QueueProbe = std::function<uint64_t(uint16_t port)>;

/// Per-switch load-balancer memory.
class LbState {
public:
    explicit LbState(uint64_t salt = 0, bool hashed_spray_start = false)
        : _salt(salt), _hashed_start(hashed_spray_start) {}

    uint16_t select(LbPolicy policy, const LbKey& key, std::span<const uint16_t> eligible,
                    const QueueProbe& queue_bytes, std::mt19937_64& rng);

    void forget_flow(uint64_t flow);

private:
    uint64_t _salt;
    bool _hashed_start;
    std::unordered_map<uint64_t, uint32_t> _cursor;   // spray position per flow
    std::unordered_map<uint32_t, uint16_t> _best;     // DRILL memory per destination
    std::unordered_map<uint64_t, uint16_t> _pinned;   // flow-level random choice
};

// Index of the smaller of two distinct random candidates.
std::size_t least_of_two(std::size_t n, const std::function<uint64_t(std::size_t)>& load, std::mt19937_64& rng);

}  // namespace eunomia::sim
