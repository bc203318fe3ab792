// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace eunomia {

// Packet sequence number within one connection. Consecutive, no wraparound.
struct SeqNum {
    uint32_t value = 0;

    constexpr SeqNum() = default;
    constexpr explicit SeqNum(uint32_t v) : value(v) {}

    constexpr SeqNum next() const { return SeqNum(value + 1); }
    constexpr SeqNum operator+(uint32_t d) const { return SeqNum(value + d); }
    constexpr uint32_t operator-(SeqNum o) const { return value - o.value; }
    constexpr auto operator<=>(const SeqNum&) const = default;
};

// One byte wide: matches the connection field of a metadata_start_index entry.
struct ConnectionId {
    uint8_t value = 0;

    constexpr ConnectionId() = default;
    constexpr explicit ConnectionId(uint8_t v) : value(v) {}
    constexpr auto operator<=>(const ConnectionId&) const = default;
};

enum class Verb : uint8_t { SendRecv, Write };

// Header model. The baseline is Ethernet + IPv4 + UDP + BTH + ICRC.
inline constexpr uint32_t kBaseHeaderBytes = 14 + 20 + 8 + 12 + 4;
// 32-bit head + 1-bit last flag, rounded up to whole bytes.
inline constexpr uint32_t kReorderMetadataBytes = 5;
// AETH carries the cumulative sequence.
inline constexpr uint32_t kAckHeaderBytes = kBaseHeaderBytes + 4;
// A SACK carries one extra sequence number.
inline constexpr uint32_t kSackExtraBytes = 4;

struct WirePacket {
    ConnectionId conn;
    SeqNum seq;
    SeqNum head;          // first sequence number of the connection
    bool is_last = false;
    uint32_t size_bytes = 0;  // payload
    uint64_t flow_remaining_bytes = 0;
    Verb verb = Verb::SendRecv;

    uint32_t wire_bytes() const { return size_bytes + kBaseHeaderBytes + kReorderMetadataBytes; }
};

enum class ControlKind : uint8_t { Ack, Sack, Nack };

struct ControlPacket {
    ConnectionId conn;
    ControlKind kind = ControlKind::Ack;
    SeqNum cumulative;             // next expected in-order sequence
    std::optional<SeqNum> sacked;  // required for SACK; optional on NACK (receiver kept the packet)

    uint32_t wire_bytes() const { return kAckHeaderBytes + (sacked ? kSackExtraBytes : 0); }
};

inline const char* to_string(ControlKind k) {
    switch (k) {
    case ControlKind::Ack: return "ACK";
    case ControlKind::Sack: return "SACK";
    case ControlKind::Nack: return "NACK";
    }
    return "?";
}

inline ControlPacket make_ack(ConnectionId c, SeqNum cumulative) {
    return ControlPacket{c, ControlKind::Ack, cumulative, std::nullopt};
}

inline ControlPacket make_sack(ConnectionId c, SeqNum cumulative, SeqNum sacked) {
    if (!(sacked > cumulative))
        throw std::invalid_argument("SACK must acknowledge a sequence beyond the cumulative point");
    return ControlPacket{c, ControlKind::Sack, cumulative, sacked};
}

inline ControlPacket make_nack(ConnectionId c, SeqNum cumulative,
                               std::optional<SeqNum> kept = std::nullopt) {
    return ControlPacket{c, ControlKind::Nack, cumulative, kept};
}

// Simulation time in picoseconds.
using SimTime = int64_t;
inline constexpr SimTime kPsPerNs = 1000;
inline constexpr SimTime kPsPerUs = 1000 * kPsPerNs;
inline constexpr SimTime kPsPerMs = 1000 * kPsPerUs;

inline constexpr SimTime ns_to_ps(double ns) { return static_cast<SimTime>(ns * kPsPerNs + 0.5); }
inline constexpr double ps_to_ns(SimTime ps) { return static_cast<double>(ps) / kPsPerNs; }

}  // namespace eunomia
