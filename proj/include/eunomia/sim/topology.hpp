// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eunomia::sim {

class InfeasibleSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class TopologyKind : uint8_t { Clos, FatTree, Jellyfish, Custom };

const char* to_string(TopologyKind k);

struct PortRef {
    uint32_t peer = 0;       // node at the other end
    uint32_t peer_port = 0;  // port index on that node
    uint32_t link = 0;
};

struct Link {
    uint32_t a = 0, a_port = 0;
    uint32_t b = 0, b_port = 0;
    bool switch_link = false;  // both ends are switches
};

using Path = std::vector<uint32_t>;  // node ids, endpoints included

/// Nodes 0..host_count-1 are hosts, the rest switches. Every host has
/// exactly one port, towards its top-of-rack switch.
class Topology {
public:
    Topology() = default;

    static Topology clos(uint32_t spines, uint32_t leaves, uint32_t hosts_per_leaf);
    static Topology fat_tree(uint32_t k);
    // Random r-regular graph between switches; hosts spread round-robin.
    static Topology jellyfish(uint32_t switches, uint32_t degree, uint32_t hosts, uint64_t seed);
    // Switch graph from an edge list over switch indices, with hosts
    // attached round-robin. Used for small hand-built cases.
    static Topology from_edges(uint32_t switches, const std::vector<std::pair<uint32_t, uint32_t>>& edges,
                               uint32_t hosts);

    TopologyKind kind() const { return _kind; }
    uint32_t host_count() const { return _hosts; }
    uint32_t switch_count() const { return static_cast<uint32_t>(_ports.size()) - _hosts; }
    uint32_t node_count() const { return static_cast<uint32_t>(_ports.size()); }
    bool is_host(uint32_t node) const { return node < _hosts; }
    const std::vector<PortRef>& ports(uint32_t node) const { return _ports[node]; }
    const std::vector<Link>& links() const { return _links; }
    // Switch the host hangs off.
    uint32_t tor_of(uint32_t host) const { return _ports[host][0].peer; }
    // Switch-facing port count, per switch.
    uint32_t switch_degree(uint32_t node) const;

    // Hop distance between nodes over links marked up, hosts never transit.
    std::vector<uint32_t> distances_to(uint32_t dst, const std::vector<bool>& link_up) const;
    bool connected() const;
    uint32_t host_diameter() const;

    // Up to k loop-free paths, nondecreasing length, ties broken by
    // lexicographic node order (Yen's algorithm).
    std::vector<Path> k_shortest_paths(uint32_t src, uint32_t dst, uint32_t k) const;
    std::vector<Path> k_shortest_paths(uint32_t src, uint32_t dst, uint32_t k,
                                       const std::vector<bool>& link_up) const;

    // Port on `node` that leads to `next`, if linked directly.
    int port_towards(uint32_t node, uint32_t next) const;

private:
    uint32_t add_node();
    void connect(uint32_t a, uint32_t b);

    TopologyKind _kind = TopologyKind::Custom;
    uint32_t _hosts = 0;
    std::vector<std::vector<PortRef>> _ports;
    std::vector<Link> _links;
};

}  // namespace eunomia::sim
