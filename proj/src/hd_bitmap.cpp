// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/hd_bitmap.hpp"

#include <bit>
#include <stdexcept>

namespace eunomia {

void VectorBlockStorage::append_block() {
    ++_blocks;
    _words.resize((_blocks * _block_bits + 63) / 64, 0);
}

bool VectorBlockStorage::test(std::size_t block, std::size_t bit) const {
    std::size_t p = block * _block_bits + bit;
    return (_words[p / 64] >> (p % 64)) & 1u;
}

void VectorBlockStorage::assign(std::size_t block, std::size_t bit, bool value) {
    std::size_t p = block * _block_bits + bit;
    uint64_t mask = uint64_t{1} << (p % 64);
    if (value)
        _words[p / 64] |= mask;
    else
        _words[p / 64] &= ~mask;
}

const char* to_string(TrackOutcome::Kind k) {
    switch (k) {
    case TrackOutcome::Kind::InOrder: return "InOrder";
    case TrackOutcome::Kind::TrackedOOO: return "TrackedOOO";
    case TrackOutcome::Kind::GrewAndTracked: return "GrewAndTracked";
    case TrackOutcome::Kind::Duplicate: return "Duplicate";
    case TrackOutcome::Kind::Untrackable: return "Untrackable";
    }
    return "?";
}

HdBitmap::HdBitmap(SeqNum head, uint32_t block_size_bits, uint32_t cap_blocks,
                   std::unique_ptr<BlockStorage> storage)
    : _storage(std::move(storage)) {
    if (block_size_bits == 0)
        throw std::invalid_argument("block_size_bits must be positive");
    if (!_storage)
        _storage = std::make_unique<VectorBlockStorage>(block_size_bits);
    if (!_storage->can_append(1))
        throw std::runtime_error("no space for the first bitmap block");
    _storage->append_block();

    _st.head = head;
    _st.block_size_bits = block_size_bits;
    _st.cap_blocks = cap_blocks;
    _st.circular_size = 1;
    _st.dynamic_size = 1;
    _st.tail = head + (block_size_bits - 1);
}

SeqNum HdBitmap::linear_end() const {
    uint32_t lin = (_st.dynamic_size - _st.circular_size) * _st.block_size_bits;
    return _st.tail + lin;
}

std::optional<SeqNum> HdBitmap::capacity_end() const {
    if (_st.cap_blocks == kUncapped)
        return std::nullopt;
    return linear_end() + (_st.cap_blocks - _st.dynamic_size) * _st.block_size_bits;
}

void HdBitmap::set_head_position(std::size_t pos) {
    _st.head_bm_id = static_cast<uint32_t>(pos / _st.block_size_bits);
    _st.head_bm_index = static_cast<uint32_t>(pos % _st.block_size_bits);
}

bool HdBitmap::test_pos(std::size_t pos) const {
    return _storage->test(pos / _st.block_size_bits, pos % _st.block_size_bits);
}

void HdBitmap::assign_pos(std::size_t pos, bool v) {
    _storage->assign(pos / _st.block_size_bits, pos % _st.block_size_bits, v);
}

std::optional<std::size_t> HdBitmap::position_of(SeqNum seq) const {
    if (seq < _st.head)
        return std::nullopt;
    if (seq <= _st.tail)
        return (head_position() + (seq - _st.head)) % circular_bits();
    if (seq <= linear_end())
        return circular_bits() + (seq - _st.tail - 1);
    return std::nullopt;
}

bool HdBitmap::is_set(SeqNum seq) const {
    auto p = position_of(seq);
    return p && test_pos(*p);
}

std::size_t HdBitmap::popcount() const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < bit_count(); ++p)
        n += test_pos(p) ? 1 : 0;
    return n;
}

TrackOutcome HdBitmap::track(SeqNum seq) {
    if (seq < _st.head)
        return TrackOutcome::duplicate();

    bool grew = false;
    if (seq > linear_end()) {
        uint32_t need = (seq - linear_end() + _st.block_size_bits - 1) / _st.block_size_bits;
        if (_st.cap_blocks != kUncapped && _st.dynamic_size + need > _st.cap_blocks)
            return TrackOutcome::untrackable();
        if (!_storage->can_append(need))
            return TrackOutcome::untrackable();
        for (uint32_t i = 0; i < need; ++i)
            _storage->append_block();
        _st.dynamic_size += need;
        ++_growth_events;
        grew = true;
    }

    std::size_t pos = *position_of(seq);
    if (test_pos(pos))
        return TrackOutcome::duplicate();
    assign_pos(pos, true);

    if (seq == _st.head) {
        flush();
        return TrackOutcome::in_order(_st.head);
    }
    if (grew)
        return TrackOutcome::grew(_st.dynamic_size);
    return TrackOutcome::tracked();
}

void HdBitmap::flush() {
    SeqNum cursor = _st.head;
    SeqNum end = linear_end();
    while (cursor <= end) {
        std::size_t p = *position_of(cursor);
        if (!test_pos(p))
            break;
        assign_pos(p, false);
        cursor = cursor.next();
    }
    uint32_t advance = cursor - _st.head;
    std::size_t old_head_pos = head_position();

    if (has_linear() && cursor > _st.tail) {
        // Circular portion is empty: absorb the linear blocks.
        std::size_t pos = circular_bits() + (cursor - _st.tail - 1);
        _st.circular_size = _st.dynamic_size;
        _st.head = cursor;
        set_head_position(pos % circular_bits());
        _st.tail = _st.head + static_cast<uint32_t>(circular_bits() - 1);
        ++_merge_events;
        return;
    }

    _st.head = cursor;
    set_head_position((old_head_pos + advance) % circular_bits());
    if (!has_linear())
        _st.tail = _st.head + static_cast<uint32_t>(circular_bits() - 1);
}

}  // namespace eunomia
