// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eunomia/core.hpp"

namespace eunomia {

struct ControllerConfig {
    uint32_t total_blocks = 1024;
    uint32_t block_bytes = 2;
    uint32_t metadata_blocks = 24;
    uint32_t max_connections = 64;
    uint32_t bitmap_cap_blocks = 16;  // relative-address table length

    uint32_t block_bits() const { return block_bytes * 8; }
    uint32_t metadata_bytes() const { return metadata_blocks * block_bytes; }
    // Throws std::invalid_argument when the layout cannot hold the state.
    void validate() const;
};

// The fixed-state fields, in storage order.
enum class StateField : uint8_t {
    Head,
    Tail,
    LastSeq,
    HeadBmId,
    HeadBmIndex,
    CircularBmSize,
    DynamicSize,
    HdBitmapAddr,
};

struct FieldSlot {
    uint32_t offset;
    uint32_t width;
};

// Byte layout of a metadata region. The 16 bytes of state variables come
// first, then the bitmap addressing: the base address of block 0 followed
// by one signed 16-bit relative offset per further block.
struct MetadataLayout {
    static constexpr uint32_t kStateBytes = 16;
    static constexpr uint32_t kBaseAddrBytes = 2;
    static constexpr uint32_t kRelativeEntryBytes = 2;

    static FieldSlot slot(StateField f);
    static std::optional<StateField> field_from_name(std::string_view name);
    static const char* name(StateField f);
    static uint32_t relative_entry_offset(uint32_t block_no) {
        return kStateBytes + kBaseAddrBytes + (block_no - 1) * kRelativeEntryBytes;
    }
    static uint32_t required_bytes(uint32_t cap_blocks) {
        return kStateBytes + kBaseAddrBytes + (cap_blocks > 0 ? cap_blocks - 1 : 0) * kRelativeEntryBytes;
    }
};

class ControllerError : public std::runtime_error {
public:
    enum class Code {
        OutOfMemory,
        DuplicateConnection,
        DirectoryFull,
        UnknownConnection,
        CapReached,
        UnallocatedBlock,
        IndexOutOfRange,
        UnknownField,
    };

    ControllerError(Code c, const std::string& what) : std::runtime_error(what), _code(c) {}
    Code code() const { return _code; }

private:
    Code _code;
};

const char* to_string(ControllerError::Code c);

struct ConnectionUsage {
    ConnectionId conn;
    uint32_t start_index = 0;
    uint32_t bitmap_blocks = 0;
};

struct Utilization {
    std::size_t bitmap_bytes_in_use = 0;
    std::size_t metadata_bytes_in_use = 0;
    std::size_t total_bytes_in_use = 0;
    std::vector<ConnectionUsage> per_connection;
};

/// NIC memory controller: one master array of fixed-size blocks, an
/// allocation bitmap over it, and a small directory of
/// (connection, metadata start index) entries.
///
/// Metadata regions are carved from the tail of the master array with a
/// backward search for a consecutive run; bitmap blocks come from a
/// forward first-fit scan from the head.
class MemController {
public:
    explicit MemController(ControllerConfig cfg = {});

    const ControllerConfig& config() const { return _cfg; }

    uint32_t init_connection(ConnectionId conn);
    uint32_t alloc_bitmap_block(ConnectionId conn);
    bool bit_access(ConnectionId conn, uint32_t bitmap_no, uint32_t bit_index,
                    std::optional<bool> write = std::nullopt);
    uint32_t state_access(ConnectionId conn, StateField field,
                          std::optional<uint32_t> write = std::nullopt);
    uint32_t state_access(ConnectionId conn, std::string_view field,
                          std::optional<uint32_t> write = std::nullopt);
    uint32_t release(ConnectionId conn);
    Utilization utilization() const;

    bool has_connection(ConnectionId conn) const { return find(conn) >= 0; }
    uint32_t bitmap_block_count(ConnectionId conn) const;
    // Master-array index of a connection's bitmap block, resolved through
    // the base address and relative table.
    uint32_t resolve_block(ConnectionId conn, uint32_t bitmap_no) const;
    std::optional<uint32_t> metadata_start(ConnectionId conn) const;

    bool block_allocated(uint32_t block) const { return _alloc[block]; }
    std::size_t allocated_blocks() const { return _allocated; }
    std::size_t free_blocks() const { return _cfg.total_blocks - _allocated; }
    std::size_t live_connections() const { return _live; }
    // True when a forward scan would find `count` free blocks.
    bool can_alloc_blocks(std::size_t count) const { return free_blocks() >= count; }

    const std::vector<uint8_t>& master() const { return _master; }

private:
    struct DirEntry {
        bool valid = false;
        ConnectionId conn;
        uint16_t start_index = 0;
        // Bookkeeping mirrored from the region; the hardware keeps it in
        // the Dynamic Size field.
        uint16_t bitmap_blocks = 0;
    };

    int find(ConnectionId conn) const;
    const DirEntry& entry(ConnectionId conn) const;
    DirEntry& entry(ConnectionId conn);
    uint32_t region_byte(const DirEntry& e, uint32_t offset) const {
        return e.start_index * _cfg.block_bytes + offset;
    }
    uint32_t read_le(uint32_t byte_addr, uint32_t width) const;
    void write_le(uint32_t byte_addr, uint32_t width, uint32_t value);
    void mark(uint32_t block, bool used);

    ControllerConfig _cfg;
    std::vector<uint8_t> _master;
    std::vector<bool> _alloc;
    std::vector<DirEntry> _dir;
    std::size_t _allocated = 0;
    std::size_t _live = 0;
};

}  // namespace eunomia
