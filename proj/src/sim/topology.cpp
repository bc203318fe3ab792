// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/sim/topology.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <random>
#include <set>

namespace eunomia::sim {

namespace {
constexpr uint32_t kInf = std::numeric_limits<uint32_t>::max();
}

const char* to_string(TopologyKind k) {
    switch (k) {
    case TopologyKind::Clos: return "clos";
    case TopologyKind::FatTree: return "fat_tree";
    case TopologyKind::Jellyfish: return "jellyfish";
    case TopologyKind::Custom: return "custom";
    }
    return "?";
}

uint32_t Topology::add_node() {
    _ports.emplace_back();
    return static_cast<uint32_t>(_ports.size() - 1);
}

void Topology::connect(uint32_t a, uint32_t b) {
    Link l;
    l.a = a;
    l.b = b;
    l.a_port = static_cast<uint32_t>(_ports[a].size());
    l.b_port = static_cast<uint32_t>(_ports[b].size());
    l.switch_link = !is_host(a) && !is_host(b);
    auto id = static_cast<uint32_t>(_links.size());
    _ports[a].push_back({b, l.b_port, id});
    _ports[b].push_back({a, l.a_port, id});
    _links.push_back(l);
}

Topology Topology::clos(uint32_t spines, uint32_t leaves, uint32_t hosts_per_leaf) {
    if (!spines || !leaves || !hosts_per_leaf)
        throw InfeasibleSpec("clos dimensions must be positive");
    Topology t;
    t._kind = TopologyKind::Clos;
    t._hosts = leaves * hosts_per_leaf;
    for (uint32_t i = 0; i < t._hosts + leaves + spines; ++i)
        t.add_node();
    uint32_t leaf0 = t._hosts, spine0 = t._hosts + leaves;
    for (uint32_t h = 0; h < t._hosts; ++h)
        t.connect(h, leaf0 + h / hosts_per_leaf);
    for (uint32_t l = 0; l < leaves; ++l)
        for (uint32_t s = 0; s < spines; ++s)
            t.connect(leaf0 + l, spine0 + s);
    return t;
}

Topology Topology::fat_tree(uint32_t k) {
    if (k < 2 || k % 2)
        throw InfeasibleSpec("fat-tree arity must be even and at least 2");
    Topology t;
    t._kind = TopologyKind::FatTree;
    uint32_t half = k / 2;
    t._hosts = k * k * k / 4;
    uint32_t edges = k * half, aggs = k * half, cores = half * half;
    for (uint32_t i = 0; i < t._hosts + edges + aggs + cores; ++i)
        t.add_node();
    uint32_t edge0 = t._hosts, agg0 = edge0 + edges, core0 = agg0 + aggs;
    for (uint32_t h = 0; h < t._hosts; ++h)
        t.connect(h, edge0 + h / half);
    for (uint32_t p = 0; p < k; ++p) {
        for (uint32_t e = 0; e < half; ++e)
            for (uint32_t a = 0; a < half; ++a)
                t.connect(edge0 + p * half + e, agg0 + p * half + a);
        for (uint32_t a = 0; a < half; ++a)
            for (uint32_t c = 0; c < half; ++c)
                t.connect(agg0 + p * half + a, core0 + a * half + c);
    }
    return t;
}

Topology Topology::from_edges(uint32_t switches, const std::vector<std::pair<uint32_t, uint32_t>>& edges,
                              uint32_t hosts) {
    Topology t;
    t._hosts = hosts;
    for (uint32_t i = 0; i < hosts + switches; ++i)
        t.add_node();
    if (switches == 0 && hosts)
        throw InfeasibleSpec("hosts need a switch");
    for (uint32_t h = 0; h < hosts; ++h)
        t.connect(h, hosts + h % switches);
    for (auto [a, b] : edges) {
        if (a >= switches || b >= switches || a == b)
            throw InfeasibleSpec("bad switch edge");
        t.connect(hosts + a, hosts + b);
    }
    return t;
}

Topology Topology::jellyfish(uint32_t switches, uint32_t degree, uint32_t hosts, uint64_t seed) {
    if (switches < 2 || degree == 0 || degree >= switches)
        throw InfeasibleSpec("jellyfish degree must be in [1, switches)");
    if ((uint64_t{switches} * degree) % 2)
        throw InfeasibleSpec("switches x degree must be even for a regular graph");
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        // Pair up port stubs; retry on self-loops, parallel edges or a
        // disconnected result.
        std::vector<uint32_t> stubs;
        for (uint32_t s = 0; s < switches; ++s)
            for (uint32_t d = 0; d < degree; ++d)
                stubs.push_back(s);
        std::shuffle(stubs.begin(), stubs.end(), rng);
        std::set<std::pair<uint32_t, uint32_t>> seen;
        std::vector<std::pair<uint32_t, uint32_t>> edges;
        bool ok = true;
        for (std::size_t i = 0; i < stubs.size(); i += 2) {
            uint32_t a = std::min(stubs[i], stubs[i + 1]), b = std::max(stubs[i], stubs[i + 1]);
            if (a == b || !seen.insert({a, b}).second) {
                ok = false;
                break;
            }
            edges.push_back({a, b});
        }
        if (!ok)
            continue;
        Topology t = from_edges(switches, edges, hosts);
        t._kind = TopologyKind::Jellyfish;
        if (t.connected())
            return t;
    }
    throw InfeasibleSpec("could not draw a connected regular graph");
}

uint32_t Topology::switch_degree(uint32_t node) const {
    uint32_t n = 0;
    for (const auto& p : _ports[node])
        n += !is_host(p.peer);
    return n;
}

int Topology::port_towards(uint32_t node, uint32_t next) const {
    for (std::size_t i = 0; i < _ports[node].size(); ++i)
        if (_ports[node][i].peer == next)
            return static_cast<int>(i);
    return -1;
}

std::vector<uint32_t> Topology::distances_to(uint32_t dst, const std::vector<bool>& link_up) const {
    std::vector<uint32_t> dist(node_count(), kInf);
    std::deque<uint32_t> q{dst};
    dist[dst] = 0;
    while (!q.empty()) {
        uint32_t n = q.front();
        q.pop_front();
        if (is_host(n) && n != dst)
            continue;
        for (const auto& p : _ports[n]) {
            if (!link_up.empty() && !link_up[p.link])
                continue;
            if (dist[p.peer] == kInf) {
                dist[p.peer] = dist[n] + 1;
                q.push_back(p.peer);
            }
        }
    }
    return dist;
}

bool Topology::connected() const {
    if (node_count() == 0)
        return true;
    // hosts are leaves, so start from a switch
    uint32_t start = _hosts < node_count() ? _hosts : 0;
    auto d = distances_to(start, {});
    return std::none_of(d.begin(), d.end(), [](uint32_t x) { return x == kInf; });
}

uint32_t Topology::host_diameter() const {
    uint32_t best = 0;
    for (uint32_t h = 0; h < _hosts; ++h) {
        auto d = distances_to(h, {});
        for (uint32_t g = 0; g < _hosts; ++g)
            if (g != h && d[g] != kInf)
                best = std::max(best, d[g]);
    }
    return best;
}

namespace {

// Lexicographically smallest shortest path, avoiding banned nodes and
// directed edges. Hosts other than the endpoints never transit.
Path shortest_lex(const Topology& t, uint32_t src, uint32_t dst, const std::vector<bool>& link_up,
                  const std::vector<bool>& banned_node, const std::set<std::pair<uint32_t, uint32_t>>& banned_edge) {
    std::vector<uint32_t> dist(t.node_count(), kInf);
    std::deque<uint32_t> q{dst};
    dist[dst] = 0;
    while (!q.empty()) {
        uint32_t n = q.front();
        q.pop_front();
        if (n != dst && t.is_host(n))
            continue;
        for (const auto& p : t.ports(n)) {
            uint32_t m = p.peer;
            if ((!link_up.empty() && !link_up[p.link]) || banned_node[m] || dist[m] != kInf)
                continue;
            if (banned_edge.count({m, n}))
                continue;
            dist[m] = dist[n] + 1;
            if (m == src)
                continue;  // src is never transited
            q.push_back(m);
        }
    }
    if (dist[src] == kInf)
        return {};
    Path path{src};
    uint32_t cur = src;
    while (cur != dst) {
        uint32_t best = kInf;
        for (const auto& p : t.ports(cur)) {
            uint32_t m = p.peer;
            if ((!link_up.empty() && !link_up[p.link]) || banned_node[m] || banned_edge.count({cur, m}))
                continue;
            if (dist[m] + 1 == dist[cur] && (m == dst || !t.is_host(m)))
                best = std::min(best, m);
        }
        cur = best;
        path.push_back(cur);
    }
    return path;
}

struct PathOrder {
    bool operator()(const Path& a, const Path& b) const {
        if (a.size() != b.size())
            return a.size() < b.size();
        return a < b;
    }
};

}  // namespace

std::vector<Path> Topology::k_shortest_paths(uint32_t src, uint32_t dst, uint32_t k) const {
    return k_shortest_paths(src, dst, k, {});
}

std::vector<Path> Topology::k_shortest_paths(uint32_t src, uint32_t dst, uint32_t k,
                                             const std::vector<bool>& link_up) const {
    if (src == dst)
        throw std::invalid_argument("k_shortest_paths needs distinct endpoints");
    std::vector<Path> found;
    if (k == 0)
        return found;
    std::vector<bool> no_nodes(node_count(), false);
    Path first = shortest_lex(*this, src, dst, link_up, no_nodes, {});
    if (first.empty())
        return found;
    found.push_back(first);
    std::set<Path, PathOrder> candidates;
    while (found.size() < k) {
        const Path prev = found.back();
        for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
            uint32_t spur = prev[i];
            Path root(prev.begin(), prev.begin() + static_cast<long>(i) + 1);
            std::set<std::pair<uint32_t, uint32_t>> banned_edges;
            for (const Path& p : found)
                if (p.size() > i && std::equal(root.begin(), root.end(), p.begin()))
                    banned_edges.insert({p[i], p[i + 1]});
            std::vector<bool> banned(node_count(), false);
            for (std::size_t j = 0; j < i; ++j)
                banned[root[j]] = true;
            Path tail = shortest_lex(*this, spur, dst, link_up, banned, banned_edges);
            if (tail.empty())
                continue;
            Path total = root;
            total.insert(total.end(), tail.begin() + 1, tail.end());
            if (std::find(found.begin(), found.end(), total) == found.end())
                candidates.insert(total);
        }
        if (candidates.empty())
            break;
        found.push_back(*candidates.begin());
        candidates.erase(candidates.begin());
    }
    return found;
}

}  // namespace eunomia::sim
