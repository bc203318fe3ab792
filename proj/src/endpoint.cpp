// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/endpoint.hpp"

#include <algorithm>

namespace eunomia {

const char* to_string(RecoveryMode m) {
    return m == RecoveryMode::GoBackN ? "gbn" : "sr";
}

std::optional<RecoveryMode> recovery_mode_from_string(std::string_view s) {
    if (s == "gbn") return RecoveryMode::GoBackN;
    if (s == "sr") return RecoveryMode::SelectiveRepeat;
    return std::nullopt;
}

////////////////////////////////////////////////////////////////
//  Sender
////////////////////////////////////////////////////////////////

SenderAgent::SenderAgent(ConnectionId conn, SeqNum first_seq, uint64_t flow_bytes, Verb verb, SenderConfig cfg)
    : _conn(conn), _first(first_seq), _flow_bytes(flow_bytes), _verb(verb), _cfg(cfg),
      _next_seq(first_seq), _snd_una(first_seq), _high_water(first_seq) {
    if (cfg.payload_bytes == 0 || cfg.window_packets == 0)
        throw std::invalid_argument("payload and window must be positive");
    uint64_t n = std::max<uint64_t>(1, (flow_bytes + cfg.payload_bytes - 1) / cfg.payload_bytes);
    _last_seq = first_seq + static_cast<uint32_t>(n - 1);
}

uint32_t SenderAgent::payload_of(SeqNum s) const {
    if (s < _last_seq || _flow_bytes == 0)
        return s < _last_seq ? _cfg.payload_bytes : 0;
    uint64_t rem = _flow_bytes - uint64_t{_last_seq - _first} * _cfg.payload_bytes;
    return static_cast<uint32_t>(rem);
}

WirePacket SenderAgent::build(SeqNum s) const {
    WirePacket p;
    p.conn = _conn;
    p.seq = s;
    p.head = _first;
    p.is_last = (s == _last_seq);
    p.size_bytes = payload_of(s);
    uint64_t sent_before = uint64_t{s - _first} * _cfg.payload_bytes;
    p.flow_remaining_bytes = _flow_bytes > sent_before ? _flow_bytes - sent_before : 0;
    p.verb = _verb;
    return p;
}

bool SenderAgent::can_emit() const {
    if (finished())
        return false;
    for (uint32_t s : _rtx_queue)
        if (SeqNum(s) >= _snd_una && !_sacked.count(s))
            return true;
    if (_next_seq > _last_seq)
        return false;
    if (_next_seq >= _snd_una + _cfg.window_packets)
        return false;
    if (_verb == Verb::Write && _cfg.write_hold && _next_seq == _last_seq && _snd_una < _last_seq)
        return false;
    return true;
}

SenderAgent::Emit SenderAgent::emit(SimTime now) {
    Emit e;
    if (finished())
        return e;

    while (!_rtx_queue.empty()) {
        uint32_t s = _rtx_queue.front();
        _rtx_queue.pop_front();
        _rtx_pending.erase(s);
        if (SeqNum(s) < _snd_una || _sacked.count(s))
            continue;
        if (!outstanding())
            _last_heard = now;
        e.status = EmitStatus::Ok;
        e.packet = build(SeqNum(s));
        e.retransmission = true;
        _last_rtx[s] = now;
        ++_retransmissions;
        return e;
    }

    if (_next_seq > _last_seq) {
        e.status = EmitStatus::Done;
        return e;
    }
    if (_next_seq >= _snd_una + _cfg.window_packets) {
        e.status = EmitStatus::WindowFull;
        return e;
    }
    if (_verb == Verb::Write && _cfg.write_hold && _next_seq == _last_seq && _snd_una < _last_seq) {
        e.status = EmitStatus::LastHeld;
        return e;
    }

    if (!outstanding())
        _last_heard = now;
    e.status = EmitStatus::Ok;
    e.packet = build(_next_seq);
    e.retransmission = _next_seq < _high_water;
    if (e.retransmission)
        ++_retransmissions;
    _next_seq = _next_seq.next();
    _high_water = std::max(_high_water, _next_seq);
    return e;
}

void SenderAgent::advance_una(SeqNum cumulative) {
    cumulative = std::min(cumulative, _last_seq.next());
    if (cumulative <= _snd_una)
        return;
    _snd_una = cumulative;
    _sacked.erase(_sacked.begin(), _sacked.lower_bound(_snd_una.value));
    _last_rtx.erase(_last_rtx.begin(), _last_rtx.lower_bound(_snd_una.value));
    if (_next_seq < _snd_una)
        _next_seq = _snd_una;
    _high_water = std::max(_high_water, _snd_una);
}

std::vector<SeqNum> SenderAgent::on_control(const ControlPacket& ctrl, SimTime now) {
    if (ctrl.conn != _conn)
        throw std::invalid_argument("control packet for a different connection");
    if (ctrl.cumulative < _snd_una && !ctrl.sacked)
        return {};

    advance_una(ctrl.cumulative);
    _last_heard = now;

    bool sr = _cfg.mode == RecoveryMode::SelectiveRepeat;
    switch (ctrl.kind) {
    case ControlKind::Ack:
        return {};
    case ControlKind::Sack:
        // Never a recovery trigger. GBN ignores the selective part.
        if (sr && ctrl.sacked && *ctrl.sacked >= _snd_una && *ctrl.sacked < _high_water)
            _sacked.insert(ctrl.sacked->value);
        return {};
    case ControlKind::Nack:
        ++_recovery_triggers;
        if (sr && ctrl.sacked && *ctrl.sacked >= _snd_una && *ctrl.sacked < _high_water)
            _sacked.insert(ctrl.sacked->value);
        return recover(now, false, ctrl.cumulative);
    }
    return {};
}

std::vector<SeqNum> SenderAgent::on_timeout(SimTime now) {
    if (finished() || !outstanding())
        return {};
    ++_timeouts;
    ++_recovery_triggers;
    _last_heard = now;
    return recover(now, true, _snd_una);
}

bool SenderAgent::timeout_due(SimTime now) const {
    return !finished() && outstanding() && now - _last_heard >= _cfg.timeout;
}

std::vector<SeqNum> SenderAgent::recover(SimTime now, bool from_timeout, SeqNum cumulative) {
    std::vector<SeqNum> out;
    if (!outstanding())
        return out;

    if (_cfg.mode == RecoveryMode::GoBackN) {
        if (!from_timeout && _last_recovery_point == cumulative &&
            now - _last_recovery_time < _cfg.rtt_estimate)
            return out;
        for (SeqNum s = _snd_una; s < _next_seq; s = s.next())
            out.push_back(s);
        _next_seq = _snd_una;
        _last_recovery_point = _snd_una;
        _last_recovery_time = now;
        return out;
    }

    for (SeqNum s = _snd_una; s < _next_seq; s = s.next()) {
        if (_sacked.count(s.value) || _rtx_pending.count(s.value))
            continue;
        if (!from_timeout) {
            auto it = _last_rtx.find(s.value);
            if (it != _last_rtx.end() && now - it->second < _cfg.rtt_estimate)
                continue;
        }
        out.push_back(s);
        _rtx_queue.push_back(s.value);
        _rtx_pending.insert(s.value);
    }
    return out;
}

void SenderAgent::force_state(SeqNum snd_una, SeqNum next_seq, std::set<uint32_t> sacked) {
    _snd_una = snd_una;
    _next_seq = next_seq;
    _high_water = next_seq;
    _sacked = _cfg.mode == RecoveryMode::SelectiveRepeat ? std::move(sacked) : std::set<uint32_t>{};
    _rtx_queue.clear();
    _rtx_pending.clear();
    _last_rtx.clear();
    _last_recovery_point.reset();
}

////////////////////////////////////////////////////////////////
//  Receiver
////////////////////////////////////////////////////////////////

ReceiverAgent::ReceiverAgent(ConnectionId conn, SeqNum first_seq, ReceiverConfig cfg, MemController* ctrl)
    : _conn(conn), _first(first_seq), _cfg(cfg), _ctrl(ctrl), _expected(first_seq) {
    // Fixed-size structures exist for the whole connection.
    if (cfg.tracker == TrackerKind::StaticBitmap)
        _tracker = std::make_unique<StaticBitmapTracker>(first_seq, cfg.static_bits);
    else if (cfg.tracker == TrackerKind::NoOrdering && cfg.mode == RecoveryMode::SelectiveRepeat)
        _tracker = std::make_unique<StaticBitmapTracker>(first_seq, cfg.sr_buffer_packets);
}

std::unique_ptr<ReorderTracker> ReceiverAgent::make_tracker(SeqNum head) {
    switch (_cfg.tracker) {
    case TrackerKind::HdBitmap: {
        auto t = HdTracker::create(head, _cfg.block_size_bits, _cfg.cap_blocks, _ctrl, _conn);
        if (t && _last_seq)
            t->set_last_seq(*_last_seq);
        return t;
    }
    case TrackerKind::IdealOrderingLayer:
        return std::make_unique<IdealTracker>(head);
    case TrackerKind::StaticBitmap:
        return std::make_unique<StaticBitmapTracker>(head, _cfg.static_bits);
    case TrackerKind::NoOrdering:
        return nullptr;
    }
    return nullptr;
}

ControlPacket ReceiverAgent::respond(ReceiveResult& r, SeqNum seq, TrackOutcome o) {
    bool nack_mode = _cfg.tracker == TrackerKind::NoOrdering;
    switch (o.kind) {
    case TrackOutcome::Kind::InOrder:
        r.delivered_from = _expected;
        r.delivered_to = o.new_head;
        _expected = o.new_head;
        return make_ack(_conn, _expected);
    case TrackOutcome::Kind::TrackedOOO:
    case TrackOutcome::Kind::GrewAndTracked:
        if (nack_mode) {
            ++_nacks;
            return make_nack(_conn, _expected, seq);
        }
        ++_sacks;
        return make_sack(_conn, _expected, seq);
    case TrackOutcome::Kind::Duplicate:
        return make_ack(_conn, _expected);
    case TrackOutcome::Kind::Untrackable:
        r.dropped = true;
        ++_nacks;
        return make_nack(_conn, _expected);
    }
    return make_ack(_conn, _expected);
}

ReceiveResult ReceiverAgent::on_packet(const WirePacket& pkt) {
    if (pkt.conn != _conn)
        throw std::invalid_argument("data packet for a different connection");
    ReceiveResult r;
    r.delivered_from = r.delivered_to = _expected;
    ++_arrivals;
    r.out_of_order = pkt.seq > _expected;
    if (r.out_of_order)
        ++_ooo_arrivals;

    if (pkt.is_last && !_last_seq) {
        _last_seq = pkt.seq;
        if (_tracker)
            _tracker->set_last_seq(pkt.seq);
    }
    bool first_arrival = !_any_received;
    _any_received = true;

    if (!_tracker) {
        if (pkt.seq == _expected) {
            _expected = _expected.next();
            r.delivered_to = _expected;
            r.control = make_ack(_conn, _expected);
        } else if (pkt.seq < _expected) {
            r.control = make_ack(_conn, _expected);
        } else if (_cfg.tracker == TrackerKind::NoOrdering || _notified) {
            r.dropped = true;
            ++_nacks;
            r.control = make_nack(_conn, _expected);
        } else {
            // First out-of-order arrival: the bitmap is created now.
            SeqNum head = first_arrival ? pkt.head : _expected;
            _tracker = make_tracker(head);
            if (!_tracker) {
                r.dropped = true;
                ++_nacks;
                r.control = make_nack(_conn, _expected);
            } else {
                r.tracker_created = true;
                if (_last_seq)
                    _tracker->set_last_seq(*_last_seq);
                TrackOutcome o = _tracker->track(pkt.seq);
                r.outcome = o;
                r.control = respond(r, pkt.seq, o);
            }
        }
    } else {
        TrackOutcome o = _tracker->track(pkt.seq);
        r.outcome = o;
        r.control = respond(r, pkt.seq, o);
    }

    _max_bitmap_bytes = std::max(_max_bitmap_bytes, bitmap_bytes());
    return r;
}

bool ReceiverAgent::completion() {
    if (_notified || !_last_seq || !(_expected > *_last_seq))
        return false;
    _notified = true;
    if (_tracker) {
        _tracker->release();
        _tracker.reset();
    }
    return true;
}

}  // namespace eunomia
