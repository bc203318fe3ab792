// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "eunomia/core.hpp"

namespace eunomia {

// Backing store for bitmap blocks. Blocks are addressed by their
// connection-local number, in allocation order.
class BlockStorage {
public:
    virtual ~BlockStorage() = default;

    virtual bool can_append(std::size_t count) const = 0;
    virtual void append_block() = 0;
    virtual std::size_t block_count() const = 0;
    virtual bool test(std::size_t block, std::size_t bit) const = 0;
    virtual void assign(std::size_t block, std::size_t bit, bool value) = 0;
};

// Plain heap storage; used when no memory controller is modeled.
class VectorBlockStorage final : public BlockStorage {
public:
    explicit VectorBlockStorage(std::size_t block_bits) : _block_bits(block_bits) {}

    bool can_append(std::size_t) const override { return true; }
    void append_block() override;
    std::size_t block_count() const override { return _blocks; }
    bool test(std::size_t block, std::size_t bit) const override;
    void assign(std::size_t block, std::size_t bit, bool value) override;

private:
    std::size_t _block_bits;
    std::size_t _blocks = 0;
    std::vector<uint64_t> _words;
};

inline constexpr uint32_t kUncapped = 0;

struct TrackOutcome {
    enum class Kind : uint8_t { InOrder, TrackedOOO, GrewAndTracked, Duplicate, Untrackable };

    Kind kind = Kind::Duplicate;
    SeqNum new_head;               // InOrder
    uint32_t new_dynamic_size = 0; // GrewAndTracked

    bool operator==(const TrackOutcome&) const = default;

    static TrackOutcome in_order(SeqNum h) { return {Kind::InOrder, h, 0}; }
    static TrackOutcome tracked() { return {Kind::TrackedOOO, {}, 0}; }
    static TrackOutcome grew(uint32_t size) { return {Kind::GrewAndTracked, {}, size}; }
    static TrackOutcome duplicate() { return {Kind::Duplicate, {}, 0}; }
    static TrackOutcome untrackable() { return {Kind::Untrackable, {}, 0}; }
};

const char* to_string(TrackOutcome::Kind k);

// Per-connection tracking state, kept for each connection that faces reordering.
struct HdBitmapState {
    SeqNum head;
    SeqNum tail;
    std::optional<SeqNum> last_seq;
    uint32_t head_bm_id = 0;
    uint32_t head_bm_index = 0;
    uint32_t circular_size = 1;
    uint32_t dynamic_size = 1;
    uint32_t block_size_bits = 16;
    uint32_t cap_blocks = 16;  // kUncapped means no limit
};

/// Hybrid-dynamic reorder bitmap.
///
/// The bitmap is a table of fixed-size blocks. The first `circular_size`
/// blocks form a circular array anchored at the head; blocks appended
/// after that form a linear array whose first bit is the sequence after
/// the tail. While a linear portion exists the tail is frozen, so neither
/// portion ever has to be remapped. Once the head moves past the tail the
/// circular portion is empty and the linear blocks are absorbed into it.
class HdBitmap {
public:
    HdBitmap(SeqNum head, uint32_t block_size_bits, uint32_t cap_blocks,
             std::unique_ptr<BlockStorage> storage = nullptr);

    TrackOutcome track(SeqNum seq);

    void set_last_seq(SeqNum s) { _st.last_seq = s; }
    bool is_complete() const { return _st.last_seq && _st.head > *_st.last_seq; }

    // Bitmap-only footprint; metadata is accounted by the memory controller.
    std::size_t memory_bytes() const {
        return (static_cast<std::size_t>(_st.dynamic_size) * _st.block_size_bits + 7) / 8;
    }

    const HdBitmapState& state() const { return _st; }
    SeqNum head() const { return _st.head; }
    bool has_linear() const { return _st.dynamic_size > _st.circular_size; }
    // Highest sequence currently representable without growth.
    SeqNum linear_end() const;
    // Highest sequence representable if the bitmap grew to its cap.
    std::optional<SeqNum> capacity_end() const;

    // Where the bit for `seq` lives, if it is inside the covered range.
    std::optional<std::size_t> position_of(SeqNum seq) const;
    bool is_set(SeqNum seq) const;
    std::size_t popcount() const;

    // Lifetime counters, mostly for traces and tests.
    uint32_t growth_events() const { return _growth_events; }
    uint32_t merge_events() const { return _merge_events; }

private:
    std::size_t bit_count() const { return static_cast<std::size_t>(_st.dynamic_size) * _st.block_size_bits; }
    std::size_t circular_bits() const { return static_cast<std::size_t>(_st.circular_size) * _st.block_size_bits; }
    std::size_t head_position() const {
        return static_cast<std::size_t>(_st.head_bm_id) * _st.block_size_bits + _st.head_bm_index;
    }
    void set_head_position(std::size_t pos);
    bool test_pos(std::size_t pos) const;
    void assign_pos(std::size_t pos, bool v);
    void flush();

    HdBitmapState _st;
    std::unique_ptr<BlockStorage> _storage;
    uint32_t _growth_events = 0;
    uint32_t _merge_events = 0;
};

}  // namespace eunomia
