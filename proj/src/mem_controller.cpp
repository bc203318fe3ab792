// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/mem_controller.hpp"

#include <algorithm>
#include <array>

namespace eunomia {

namespace {

struct NamedSlot {
    StateField field;
    const char* name;
    FieldSlot slot;
};

// Field order of the per-connection state, byte-packed.
constexpr std::array<NamedSlot, 8> kSlots{{
    {StateField::Head, "Head", {0, 4}},
    {StateField::Tail, "Tail", {4, 4}},
    {StateField::LastSeq, "LastSeq", {8, 4}},
    {StateField::HeadBmId, "HeadBmId", {12, 1}},
    {StateField::HeadBmIndex, "HeadBmIndex", {13, 1}},
    {StateField::CircularBmSize, "CircularBmSize", {14, 1}},
    {StateField::DynamicSize, "DynamicSize", {15, 1}},
    {StateField::HdBitmapAddr, "HdBitmapAddr", {16, 2}},
}};

// Relative offsets and base addresses are 16-bit byte quantities.
constexpr uint32_t kAddressableBytes = 32768;

}  // namespace

void ControllerConfig::validate() const {
    if (block_bytes == 0 || total_blocks == 0 || metadata_blocks == 0)
        throw std::invalid_argument("controller sizes must be positive");
    if (uint64_t{total_blocks} * block_bytes > kAddressableBytes)
        throw std::invalid_argument("master array exceeds the 16-bit relative address range");
    if (bitmap_cap_blocks == 0 || bitmap_cap_blocks > 255)
        throw std::invalid_argument("bitmap cap must be in [1, 255] blocks");
    if (metadata_bytes() < MetadataLayout::required_bytes(bitmap_cap_blocks))
        throw std::invalid_argument("metadata region too small for the state and address table");
    if (max_connections == 0 || max_connections > 256)
        throw std::invalid_argument("max_connections must be in [1, 256]");
    if (metadata_blocks > total_blocks)
        throw std::invalid_argument("metadata region larger than the master array");
}

FieldSlot MetadataLayout::slot(StateField f) {
    for (const auto& s : kSlots)
        if (s.field == f)
            return s.slot;
    throw ControllerError(ControllerError::Code::UnknownField, "unknown state field");
}

std::optional<StateField> MetadataLayout::field_from_name(std::string_view name) {
    for (const auto& s : kSlots)
        if (name == s.name)
            return s.field;
    return std::nullopt;
}

const char* MetadataLayout::name(StateField f) {
    for (const auto& s : kSlots)
        if (s.field == f)
            return s.name;
    return "?";
}

const char* to_string(ControllerError::Code c) {
    using C = ControllerError::Code;
    switch (c) {
    case C::OutOfMemory: return "OutOfMemory";
    case C::DuplicateConnection: return "DuplicateConnection";
    case C::DirectoryFull: return "DirectoryFull";
    case C::UnknownConnection: return "UnknownConnection";
    case C::CapReached: return "CapReached";
    case C::UnallocatedBlock: return "UnallocatedBlock";
    case C::IndexOutOfRange: return "IndexOutOfRange";
    case C::UnknownField: return "UnknownField";
    }
    return "?";
}

MemController::MemController(ControllerConfig cfg) : _cfg(cfg) {
    _cfg.validate();
    _master.assign(std::size_t{_cfg.total_blocks} * _cfg.block_bytes, 0);
    _alloc.assign(_cfg.total_blocks, false);
    _dir.resize(_cfg.max_connections);
}

int MemController::find(ConnectionId conn) const {
    for (std::size_t i = 0; i < _dir.size(); ++i)
        if (_dir[i].valid && _dir[i].conn == conn)
            return static_cast<int>(i);
    return -1;
}

const MemController::DirEntry& MemController::entry(ConnectionId conn) const {
    int i = find(conn);
    if (i < 0)
        throw ControllerError(ControllerError::Code::UnknownConnection,
                              "connection " + std::to_string(conn.value) + " has no metadata");
    return _dir[i];
}

MemController::DirEntry& MemController::entry(ConnectionId conn) {
    return const_cast<DirEntry&>(static_cast<const MemController*>(this)->entry(conn));
}

uint32_t MemController::read_le(uint32_t addr, uint32_t width) const {
    uint32_t v = 0;
    for (uint32_t i = 0; i < width; ++i)
        v |= uint32_t{_master[addr + i]} << (8 * i);
    return v;
}

void MemController::write_le(uint32_t addr, uint32_t width, uint32_t value) {
    for (uint32_t i = 0; i < width; ++i)
        _master[addr + i] = static_cast<uint8_t>(value >> (8 * i));
}

void MemController::mark(uint32_t block, bool used) {
    if (_alloc[block] == used)
        return;
    _alloc[block] = used;
    if (used)
        ++_allocated;
    else
        --_allocated;
}

uint32_t MemController::init_connection(ConnectionId conn) {
    if (find(conn) >= 0)
        throw ControllerError(ControllerError::Code::DuplicateConnection,
                              "connection " + std::to_string(conn.value) + " already initialized");
    DirEntry* slot = nullptr;
    for (auto& e : _dir)
        if (!e.valid) {
            slot = &e;
            break;
        }
    if (!slot)
        throw ControllerError(ControllerError::Code::DirectoryFull, "metadata directory full");

    // Tail to head, looking for a run of free blocks.
    uint32_t run = 0;
    std::optional<uint32_t> start;
    for (uint32_t i = _cfg.total_blocks; i-- > 0;) {
        if (_alloc[i]) {
            run = 0;
            continue;
        }
        if (++run == _cfg.metadata_blocks) {
            start = i;
            break;
        }
    }
    if (!start)
        throw ControllerError(ControllerError::Code::OutOfMemory,
                              "no consecutive run for connection metadata");

    for (uint32_t b = *start; b < *start + _cfg.metadata_blocks; ++b)
        mark(b, true);
    slot->valid = true;
    slot->conn = conn;
    slot->start_index = static_cast<uint16_t>(*start);
    slot->bitmap_blocks = 0;
    ++_live;

    uint32_t base = region_byte(*slot, 0);
    std::fill(_master.begin() + base, _master.begin() + base + _cfg.metadata_bytes(), 0);
    return *start;
}

uint32_t MemController::alloc_bitmap_block(ConnectionId conn) {
    DirEntry& e = entry(conn);
    if (e.bitmap_blocks >= _cfg.bitmap_cap_blocks)
        throw ControllerError(ControllerError::Code::CapReached, "relative address table full");

    std::optional<uint32_t> block;
    for (uint32_t i = 0; i < _cfg.total_blocks; ++i)
        if (!_alloc[i]) {
            block = i;
            break;
        }
    if (!block)
        throw ControllerError(ControllerError::Code::OutOfMemory, "no free bitmap block");

    mark(*block, true);
    uint32_t addr = *block * _cfg.block_bytes;
    std::fill(_master.begin() + addr, _master.begin() + addr + _cfg.block_bytes, 0);

    uint32_t no = e.bitmap_blocks;
    FieldSlot base_slot = MetadataLayout::slot(StateField::HdBitmapAddr);
    if (no == 0) {
        write_le(region_byte(e, base_slot.offset), base_slot.width, addr);
    } else {
        uint32_t base_addr = read_le(region_byte(e, base_slot.offset), base_slot.width);
        auto rel = static_cast<int16_t>(static_cast<int32_t>(addr) - static_cast<int32_t>(base_addr));
        write_le(region_byte(e, MetadataLayout::relative_entry_offset(no)),
                 MetadataLayout::kRelativeEntryBytes, static_cast<uint16_t>(rel));
    }
    ++e.bitmap_blocks;
    return no;
}

uint32_t MemController::bitmap_block_count(ConnectionId conn) const {
    return entry(conn).bitmap_blocks;
}

std::optional<uint32_t> MemController::metadata_start(ConnectionId conn) const {
    int i = find(conn);
    if (i < 0)
        return std::nullopt;
    return _dir[i].start_index;
}

uint32_t MemController::resolve_block(ConnectionId conn, uint32_t bitmap_no) const {
    const DirEntry& e = entry(conn);
    if (bitmap_no >= e.bitmap_blocks)
        throw ControllerError(ControllerError::Code::UnallocatedBlock,
                              "bitmap block " + std::to_string(bitmap_no) + " not allocated");
    FieldSlot base_slot = MetadataLayout::slot(StateField::HdBitmapAddr);
    int32_t addr = static_cast<int32_t>(read_le(region_byte(e, base_slot.offset), base_slot.width));
    if (bitmap_no > 0) {
        auto rel = static_cast<int16_t>(read_le(region_byte(e, MetadataLayout::relative_entry_offset(bitmap_no)),
                                                MetadataLayout::kRelativeEntryBytes));
        addr += rel;
    }
    return static_cast<uint32_t>(addr) / _cfg.block_bytes;
}

bool MemController::bit_access(ConnectionId conn, uint32_t bitmap_no, uint32_t bit_index,
                               std::optional<bool> write) {
    if (bit_index >= _cfg.block_bits())
        throw ControllerError(ControllerError::Code::IndexOutOfRange,
                              "bit index " + std::to_string(bit_index) + " outside block");
    uint32_t block = resolve_block(conn, bitmap_no);
    uint32_t byte = block * _cfg.block_bytes + bit_index / 8;
    uint8_t mask = static_cast<uint8_t>(1u << (bit_index % 8));
    if (write) {
        if (*write)
            _master[byte] |= mask;
        else
            _master[byte] &= static_cast<uint8_t>(~mask);
    }
    return (_master[byte] & mask) != 0;
}

uint32_t MemController::state_access(ConnectionId conn, StateField field, std::optional<uint32_t> write) {
    const DirEntry& e = entry(conn);
    FieldSlot s = MetadataLayout::slot(field);
    uint32_t addr = region_byte(e, s.offset);
    if (write) {
        uint32_t v = *write;
        if (s.width < 4)
            v &= (1u << (8 * s.width)) - 1;
        write_le(addr, s.width, v);
    }
    return read_le(addr, s.width);
}

uint32_t MemController::state_access(ConnectionId conn, std::string_view field, std::optional<uint32_t> write) {
    auto f = MetadataLayout::field_from_name(field);
    if (!f)
        throw ControllerError(ControllerError::Code::UnknownField, "unknown state field " + std::string(field));
    return state_access(conn, *f, write);
}

uint32_t MemController::release(ConnectionId conn) {
    int i = find(conn);
    if (i < 0)
        throw ControllerError(ControllerError::Code::UnknownConnection,
                              "connection " + std::to_string(conn.value) + " has no metadata");
    DirEntry& e = _dir[i];
    uint32_t released = 0;
    for (uint32_t b = 0; b < e.bitmap_blocks; ++b) {
        mark(resolve_block(conn, b), false);
        ++released;
    }
    for (uint32_t b = e.start_index; b < e.start_index + _cfg.metadata_blocks; ++b) {
        mark(b, false);
        ++released;
    }
    e = DirEntry{};
    --_live;
    return released;
}

Utilization MemController::utilization() const {
    Utilization u;
    for (const auto& e : _dir) {
        if (!e.valid)
            continue;
        u.per_connection.push_back({e.conn, e.start_index, e.bitmap_blocks});
        u.bitmap_bytes_in_use += std::size_t{e.bitmap_blocks} * _cfg.block_bytes;
        u.metadata_bytes_in_use += _cfg.metadata_bytes();
    }
    u.total_bytes_in_use = u.bitmap_bytes_in_use + u.metadata_bytes_in_use;
    return u;
}

}  // namespace eunomia
