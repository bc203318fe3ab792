// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/tracker.hpp"

namespace eunomia {

const char* to_string(TrackerKind k) {
    switch (k) {
    case TrackerKind::HdBitmap: return "hd_bitmap";
    case TrackerKind::StaticBitmap: return "static_bitmap";
    case TrackerKind::IdealOrderingLayer: return "ideal";
    case TrackerKind::NoOrdering: return "none";
    }
    return "?";
}

std::optional<TrackerKind> tracker_kind_from_string(std::string_view s) {
    if (s == "hd_bitmap") return TrackerKind::HdBitmap;
    if (s == "static_bitmap") return TrackerKind::StaticBitmap;
    if (s == "ideal") return TrackerKind::IdealOrderingLayer;
    if (s == "none") return TrackerKind::NoOrdering;
    return std::nullopt;
}

bool ControllerBlockStorage::can_append(std::size_t count) const {
    return _ctrl.bitmap_block_count(_conn) + count <= _ctrl.config().bitmap_cap_blocks &&
           _ctrl.can_alloc_blocks(count);
}

bool ControllerBlockStorage::test(std::size_t block, std::size_t bit) const {
    return _ctrl.bit_access(_conn, static_cast<uint32_t>(block), static_cast<uint32_t>(bit));
}

void ControllerBlockStorage::assign(std::size_t block, std::size_t bit, bool value) {
    _ctrl.bit_access(_conn, static_cast<uint32_t>(block), static_cast<uint32_t>(bit), value);
}

std::unique_ptr<HdTracker> HdTracker::create(SeqNum head, uint32_t block_bits, uint32_t cap_blocks,
                                             MemController* ctrl, ConnectionId conn) {
    std::unique_ptr<HdTracker> t(new HdTracker());
    t->_ctrl = ctrl;
    t->_conn = conn;
    if (!ctrl) {
        t->_bm = std::make_unique<HdBitmap>(head, block_bits, cap_blocks);
        return t;
    }
    if (block_bits != ctrl->config().block_bits())
        throw std::invalid_argument("bitmap block size must match the controller block size");
    try {
        ctrl->init_connection(conn);
    } catch (const ControllerError&) {
        return nullptr;
    }
    auto storage = std::make_unique<ControllerBlockStorage>(*ctrl, conn);
    if (!storage->can_append(1)) {
        ctrl->release(conn);
        return nullptr;
    }
    t->_bm = std::make_unique<HdBitmap>(head, block_bits, cap_blocks, std::move(storage));
    t->sync_state();
    return t;
}

HdTracker::~HdTracker() { release(); }

void HdTracker::sync_state() {
    if (!_ctrl || _released)
        return;
    const HdBitmapState& s = _bm->state();
    _ctrl->state_access(_conn, StateField::Head, s.head.value);
    _ctrl->state_access(_conn, StateField::Tail, s.tail.value);
    _ctrl->state_access(_conn, StateField::LastSeq, s.last_seq ? s.last_seq->value : 0xFFFFFFFFu);
    _ctrl->state_access(_conn, StateField::HeadBmId, s.head_bm_id);
    _ctrl->state_access(_conn, StateField::HeadBmIndex, s.head_bm_index);
    _ctrl->state_access(_conn, StateField::CircularBmSize, s.circular_size);
    _ctrl->state_access(_conn, StateField::DynamicSize, s.dynamic_size);
}

TrackOutcome HdTracker::track(SeqNum seq) {
    TrackOutcome o = _bm->track(seq);
    if (o.kind != TrackOutcome::Kind::Duplicate && o.kind != TrackOutcome::Kind::Untrackable)
        sync_state();
    return o;
}

void HdTracker::set_last_seq(SeqNum s) {
    _bm->set_last_seq(s);
    sync_state();
}

std::size_t HdTracker::metadata_bytes() const {
    if (_released)
        return 0;
    if (_ctrl)
        return _ctrl->config().metadata_bytes();
    return MetadataLayout::required_bytes(_bm->state().dynamic_size);
}

void HdTracker::release() {
    if (_released)
        return;
    _released = true;
    if (_ctrl && _ctrl->has_connection(_conn))
        _ctrl->release(_conn);
}

StaticBitmapTracker::StaticBitmapTracker(SeqNum head, uint32_t bits) : _head(head), _bits(bits, false) {
    if (bits == 0)
        throw std::invalid_argument("static bitmap needs at least one bit");
}

TrackOutcome StaticBitmapTracker::track(SeqNum seq) {
    if (seq < _head)
        return TrackOutcome::duplicate();
    uint32_t off = seq - _head;
    if (off >= _bits.size())
        return TrackOutcome::untrackable();
    std::size_t pos = (_head_index + off) % _bits.size();
    if (_bits[pos])
        return TrackOutcome::duplicate();
    _bits[pos] = true;
    if (off != 0)
        return TrackOutcome::tracked();
    while (_bits[_head_index]) {
        _bits[_head_index] = false;
        _head_index = (_head_index + 1) % _bits.size();
        _head = _head.next();
    }
    return TrackOutcome::in_order(_head);
}

TrackOutcome IdealTracker::track(SeqNum seq) {
    if (seq < _head || _held.count(seq.value))
        return TrackOutcome::duplicate();
    if (seq != _head) {
        _held.insert(seq.value);
        return TrackOutcome::tracked();
    }
    _head = _head.next();
    while (!_held.empty() && *_held.begin() == _head.value) {
        _held.erase(_held.begin());
        _head = _head.next();
    }
    return TrackOutcome::in_order(_head);
}

}  // namespace eunomia
