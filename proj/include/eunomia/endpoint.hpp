// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "eunomia/core.hpp"
#include "eunomia/tracker.hpp"

namespace eunomia {

enum class RecoveryMode : uint8_t { GoBackN, SelectiveRepeat };

const char* to_string(RecoveryMode m);
std::optional<RecoveryMode> recovery_mode_from_string(std::string_view s);

struct SenderConfig {
    RecoveryMode mode = RecoveryMode::GoBackN;
    uint32_t window_packets = 16;
    SimTime timeout = 30 * kPsPerUs;
    // Repeated NACKs for the same hole within this interval do not restart
    // recovery; they come from packets sent before the previous one.
    SimTime rtt_estimate = 10 * kPsPerUs;
    bool write_hold = false;
    uint32_t payload_bytes = 1000;
};

/// Sender-side agent plus the fixed-window transport it sits on.
class SenderAgent {
public:
    enum class EmitStatus : uint8_t { Ok, WindowFull, LastHeld, Done };

    struct Emit {
        EmitStatus status = EmitStatus::Done;
        std::optional<WirePacket> packet;
        bool retransmission = false;
    };

    SenderAgent(ConnectionId conn, SeqNum first_seq, uint64_t flow_bytes, Verb verb, SenderConfig cfg);

    // Next packet to put on the wire. Retransmissions go first.
    Emit emit(SimTime now);
    bool can_emit() const;

    // Returns the sequences scheduled for retransmission.
    std::vector<SeqNum> on_control(const ControlPacket& ctrl, SimTime now);
    std::vector<SeqNum> on_timeout(SimTime now);
    bool timeout_due(SimTime now) const;
    SimTime timer_deadline() const { return _last_heard + _cfg.timeout; }
    bool outstanding() const { return _snd_una < _high_water; }

    bool finished() const { return _snd_una > _last_seq; }

    ConnectionId conn() const { return _conn; }
    SeqNum first_seq() const { return _first; }
    SeqNum last_seq() const { return _last_seq; }
    SeqNum next_seq() const { return _next_seq; }
    SeqNum snd_una() const { return _snd_una; }
    SeqNum high_water() const { return _high_water; }
    const std::set<uint32_t>& sacked() const { return _sacked; }
    uint32_t packet_count() const { return _last_seq - _first + 1; }
    uint64_t flow_bytes() const { return _flow_bytes; }
    const SenderConfig& config() const { return _cfg; }

    uint64_t retransmissions() const { return _retransmissions; }
    uint64_t recovery_triggers() const { return _recovery_triggers; }
    uint64_t timeouts() const { return _timeouts; }

    // Test hooks: place the window at an arbitrary point.
    void force_state(SeqNum snd_una, SeqNum next_seq, std::set<uint32_t> sacked = {});

private:
    uint32_t payload_of(SeqNum s) const;
    WirePacket build(SeqNum s) const;
    std::vector<SeqNum> recover(SimTime now, bool from_timeout, SeqNum cumulative);
    void advance_una(SeqNum cumulative);

    ConnectionId _conn;
    SeqNum _first;
    SeqNum _last_seq;
    uint64_t _flow_bytes;
    Verb _verb;
    SenderConfig _cfg;

    SeqNum _next_seq;
    SeqNum _snd_una;
    SeqNum _high_water;  // one past the highest sequence ever sent
    std::set<uint32_t> _sacked;
    std::deque<uint32_t> _rtx_queue;
    std::set<uint32_t> _rtx_pending;
    std::map<uint32_t, SimTime> _last_rtx;
    SimTime _last_heard = 0;
    std::optional<SeqNum> _last_recovery_point;
    SimTime _last_recovery_time = 0;

    uint64_t _retransmissions = 0;
    uint64_t _recovery_triggers = 0;
    uint64_t _timeouts = 0;
};

struct ReceiverConfig {
    TrackerKind tracker = TrackerKind::HdBitmap;
    RecoveryMode mode = RecoveryMode::GoBackN;
    uint32_t block_size_bits = 16;
    uint32_t cap_blocks = 16;
    uint32_t static_bits = 256;
    // Selective-repeat receivers without an ordering layer keep this many
    // packets beyond the expected one, but still NACK every gap.
    uint32_t sr_buffer_packets = 16;
};

struct ReceiveResult {
    SeqNum delivered_from;
    SeqNum delivered_to;  // half-open
    ControlPacket control;
    bool out_of_order = false;  // arrived ahead of the expected sequence
    bool dropped = false;
    bool tracker_created = false;
    std::optional<TrackOutcome> outcome;

    uint32_t delivered() const { return delivered_to - delivered_from; }
};

/// Receiver-side agent: packet driver dispatch, acknowledgment
/// generation, completion hold-off and garbage collection.
class ReceiverAgent {
public:
    ReceiverAgent(ConnectionId conn, SeqNum first_seq, ReceiverConfig cfg, MemController* ctrl = nullptr);

    ReceiveResult on_packet(const WirePacket& pkt);
    // True exactly once, when the in-order prefix covers the last sequence.
    // Releases the tracker on that transition.
    bool completion();

    ConnectionId conn() const { return _conn; }
    SeqNum expected_seq() const { return _expected; }
    SeqNum delivered_prefix() const { return _expected; }
    std::optional<SeqNum> last_seq() const { return _last_seq; }
    bool conn_module_valid() const { return _tracker != nullptr; }
    bool completion_notified() const { return _notified; }
    const ReorderTracker* tracker() const { return _tracker.get(); }
    const ReceiverConfig& config() const { return _cfg; }

    std::size_t bitmap_bytes() const { return _tracker ? _tracker->bitmap_bytes() : 0; }
    std::size_t metadata_bytes() const { return _tracker ? _tracker->metadata_bytes() : 0; }
    std::size_t max_bitmap_bytes() const { return _max_bitmap_bytes; }

    uint64_t arrivals() const { return _arrivals; }
    uint64_t ooo_arrivals() const { return _ooo_arrivals; }
    uint64_t sacks_sent() const { return _sacks; }
    uint64_t nacks_sent() const { return _nacks; }

private:
    std::unique_ptr<ReorderTracker> make_tracker(SeqNum head);
    ControlPacket respond(ReceiveResult& r, SeqNum seq, TrackOutcome o);

    ConnectionId _conn;
    SeqNum _first;
    ReceiverConfig _cfg;
    MemController* _ctrl;

    SeqNum _expected;
    std::optional<SeqNum> _last_seq;
    std::unique_ptr<ReorderTracker> _tracker;
    bool _any_received = false;
    bool _notified = false;
    std::size_t _max_bitmap_bytes = 0;

    uint64_t _arrivals = 0;
    uint64_t _ooo_arrivals = 0;
    uint64_t _sacks = 0;
    uint64_t _nacks = 0;
};

}  // namespace eunomia
