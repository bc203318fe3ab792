// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string_view>
#include <vector>

#include "eunomia/hd_bitmap.hpp"
#include "eunomia/mem_controller.hpp"

namespace eunomia {

enum class TrackerKind : uint8_t { HdBitmap, StaticBitmap, IdealOrderingLayer, NoOrdering };

const char* to_string(TrackerKind k);
std::optional<TrackerKind> tracker_kind_from_string(std::string_view s);

// Receiver-side reorder state for one connection.
class ReorderTracker {
public:
    virtual ~ReorderTracker() = default;

    virtual TrackOutcome track(SeqNum seq) = 0;
    virtual void set_last_seq(SeqNum s) = 0;
    virtual SeqNum head() const = 0;
    virtual std::size_t bitmap_bytes() const = 0;
    virtual std::size_t metadata_bytes() const = 0;
    // Frees whatever the tracker holds in NIC memory. Idempotent.
    virtual void release() {}
};

// Routes bitmap block accesses through the memory controller.
class ControllerBlockStorage final : public BlockStorage {
public:
    ControllerBlockStorage(MemController& ctrl, ConnectionId conn) : _ctrl(ctrl), _conn(conn) {}

    bool can_append(std::size_t count) const override;
    void append_block() override { _ctrl.alloc_bitmap_block(_conn); }
    std::size_t block_count() const override { return _ctrl.bitmap_block_count(_conn); }
    bool test(std::size_t block, std::size_t bit) const override;
    void assign(std::size_t block, std::size_t bit, bool value) override;

private:
    MemController& _ctrl;
    ConnectionId _conn;
};

/// HD bitmap tracker. With a controller, the metadata region is set up on
/// construction, bitmap blocks live in the master array, and the state
/// fields are written back after every update. Without one (uncapped
/// bitmaps), storage is on the heap and only the byte counts are modeled.
class HdTracker final : public ReorderTracker {
public:
    // Returns nullptr when the controller has no room for the connection.
    static std::unique_ptr<HdTracker> create(SeqNum head, uint32_t block_bits, uint32_t cap_blocks,
                                             MemController* ctrl, ConnectionId conn);
    ~HdTracker() override;

    TrackOutcome track(SeqNum seq) override;
    void set_last_seq(SeqNum s) override;
    SeqNum head() const override { return _bm->head(); }
    std::size_t bitmap_bytes() const override { return _released ? 0 : _bm->memory_bytes(); }
    std::size_t metadata_bytes() const override;
    void release() override;

    const HdBitmap& bitmap() const { return *_bm; }

private:
    HdTracker() = default;
    void sync_state();

    MemController* _ctrl = nullptr;
    ConnectionId _conn;
    std::unique_ptr<HdBitmap> _bm;
    bool _released = false;
};

/// Fixed-size circular bitmap, allocated for the whole connection lifetime.
/// Auxiliary state is head (4 B), last sequence (4 B) and head index (1 B).
class StaticBitmapTracker final : public ReorderTracker {
public:
    static constexpr std::size_t kAuxBytes = 9;

    StaticBitmapTracker(SeqNum head, uint32_t bits);

    TrackOutcome track(SeqNum seq) override;
    void set_last_seq(SeqNum s) override { _last = s; }
    SeqNum head() const override { return _head; }
    std::size_t bitmap_bytes() const override { return _released ? 0 : (_bits.size() + 7) / 8; }
    std::size_t metadata_bytes() const override { return _released ? 0 : kAuxBytes; }
    void release() override { _released = true; }

    uint32_t bits() const { return static_cast<uint32_t>(_bits.size()); }

private:
    SeqNum _head;
    std::optional<SeqNum> _last;
    std::size_t _head_index = 0;
    std::vector<bool> _bits;
    bool _released = false;
};

// Unbounded buffer underneath the NIC; never runs out of room.
class IdealTracker final : public ReorderTracker {
public:
    explicit IdealTracker(SeqNum head) : _head(head) {}

    TrackOutcome track(SeqNum seq) override;
    void set_last_seq(SeqNum) override {}
    SeqNum head() const override { return _head; }
    std::size_t bitmap_bytes() const override { return 0; }
    std::size_t metadata_bytes() const override { return 0; }
    std::size_t buffered() const { return _held.size(); }

private:
    SeqNum _head;
    std::set<uint32_t> _held;
};

}  // namespace eunomia
