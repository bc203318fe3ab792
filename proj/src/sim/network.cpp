// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/sim/network.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

namespace eunomia::sim {

namespace {

constexpr uint32_t kUnreachable = std::numeric_limits<uint32_t>::max();

#ifndef EUNOMIA_DATA_DIR
#define EUNOMIA_DATA_DIR "data"
#endif

}  // namespace

Topology build_topology(const TopologyConfig& cfg) {
    switch (cfg.kind) {
    case TopologyKind::Clos: return Topology::clos(cfg.spines, cfg.leaves, cfg.hosts_per_leaf);
    case TopologyKind::FatTree: return Topology::fat_tree(cfg.k);
    case TopologyKind::Jellyfish: return Topology::jellyfish(cfg.switches, cfg.degree, cfg.hosts, cfg.graph_seed);
    case TopologyKind::Custom: break;
    }
    throw std::invalid_argument("topology kind cannot be built from config");
}

FlowSizeCdf load_cdf(const std::string& name) {
    if (name == "heavy_tailed" || name == "high_variance") {
        const char* env = std::getenv("EUNOMIA_DATA_DIR");
        std::filesystem::path dir = env ? env : EUNOMIA_DATA_DIR;
        return FlowSizeCdf::load((dir / (name + ".cdf")).string());
    }
    return FlowSizeCdf::load(name);
}

Workload generate_workload(const SimConfig& cfg, const Topology& topo) {
    Workload w;
    std::mt19937_64 rng(mix64(cfg.seed ^ 0x7472616666696367ull));
    double bps = cfg.topology.link_gbps * 1e9;
    SimTime window = ns_to_ps(cfg.traffic.duration_ns);
    uint32_t hosts = topo.host_count();
    const auto& t = cfg.traffic;
    switch (t.kind) {
    case TrafficKind::Poisson:
        w.flows = poisson_flows(hosts, bps, t.load, load_cdf(t.cdf), window, rng);
        break;
    case TrafficKind::Incast:
        if (t.incast_fan_in >= hosts)
            throw InfeasibleSpec("incast fan-in must be below the host count");
        incast_queries(hosts, bps, t.load, t.incast_fan_in, t.incast_flow_bytes, window, rng, w.flows, w.queries);
        if (t.background_load > 0) {
            auto bg = poisson_flows(hosts, bps, t.background_load, load_cdf(t.cdf), window, rng,
                                    static_cast<uint32_t>(w.flows.size()));
            w.flows.insert(w.flows.end(), bg.begin(), bg.end());
        }
        break;
    case TrafficKind::Single:
        if (t.single_src >= hosts || t.single_dst >= hosts)
            throw InfeasibleSpec("single flow endpoint outside the topology");
        w.flows.push_back({0, t.single_src, t.single_dst, t.single_bytes, 0, -1});
        break;
    }
    std::stable_sort(w.flows.begin(), w.flows.end(),
                     [](const FlowSpec& a, const FlowSpec& b) { return a.start < b.start; });
    // ids index the flow table
    std::vector<uint32_t> remap(w.flows.size());
    for (uint32_t i = 0; i < w.flows.size(); ++i) {
        remap[w.flows[i].id] = i;
        w.flows[i].id = i;
    }
    for (auto& q : w.queries)
        for (auto& f : q.flows)
            f = remap[f];
    return w;
}

Network::Network(const SimConfig& cfg) : _cfg(cfg) {
    _cfg.validate();
    _topo = build_topology(_cfg.topology);
    auto w = generate_workload(_cfg, _topo);
    _specs = std::move(w.flows);
    _queries = std::move(w.queries);
    init();
}

Network::Network(const SimConfig& cfg, Topology topo, std::vector<FlowSpec> flows, std::vector<QuerySpec> queries)
    : _cfg(cfg), _topo(std::move(topo)), _specs(std::move(flows)), _queries(std::move(queries)) {
    _cfg.validate();
    for (uint32_t i = 0; i < _specs.size(); ++i) {
        if (_specs[i].id != i)
            throw std::invalid_argument("flow ids must match their position");
        if (_specs[i].src >= _topo.host_count() || _specs[i].dst >= _topo.host_count() ||
            _specs[i].src == _specs[i].dst || _specs[i].bytes == 0)
            throw std::invalid_argument("bad flow endpoints or size");
    }
    init();
}

Network::~Network() = default;

SimTime Network::analytic_rtt(uint32_t hops, uint32_t data_wire) const {
    SimTime ack = serialization(kAckHeaderBytes);
    return SimTime(hops - 1) * serialization(data_wire) + SimTime(hops) * (2 * _prop + ack);
}

SimTime Network::ideal_fct(uint64_t bytes, uint32_t hops) const {
    uint32_t payload = _cfg.transport.payload_bytes;
    uint64_t n = (bytes + payload - 1) / payload;
    uint32_t last = static_cast<uint32_t>(bytes - (n - 1) * payload);
    WirePacket full, tail;
    full.size_bytes = payload;
    tail.size_bytes = last;
    return SimTime(n - 1) * serialization(full.wire_bytes()) + SimTime(hops) * serialization(tail.wire_bytes()) +
           SimTime(hops) * _prop;
}

void Network::init() {
    const uint32_t H = _topo.host_count();
    const uint32_t N = _topo.node_count();
    if (H < 2)
        throw InfeasibleSpec("need at least two hosts");
    _rng.seed(_cfg.seed);
    _ps_per_byte = static_cast<SimTime>(std::llround(8000.0 / _cfg.topology.link_gbps));
    _prop = ns_to_ps(_cfg.topology.prop_ns);
    WirePacket mtu;
    mtu.size_bytes = _cfg.transport.payload_bytes;
    _mtu_wire = mtu.wire_bytes();

    _ports.resize(N);
    for (uint32_t n = 0; n < N; ++n) {
        const auto& refs = _topo.ports(n);
        _ports[n].resize(refs.size());
        for (uint32_t i = 0; i < refs.size(); ++i) {
            Port& p = _ports[n][i];
            p.node = n;
            p.peer = refs[i].peer;
            p.peer_port = refs[i].peer_port;
            p.link = refs[i].link;
        }
    }
    _link_up.assign(_topo.links().size(), true);
    _link_epoch.assign(_topo.links().size(), 0);
    _host_port_at_tor.resize(H);
    for (uint32_t h = 0; h < H; ++h)
        _host_port_at_tor[h] = _topo.ports(h)[0].peer_port;

    _switches.resize(N - H);
    uint64_t prop_bytes = static_cast<uint64_t>(_prop / _ps_per_byte);
    for (uint32_t s = H; s < N; ++s) {
        SwitchRt& S = _switches[s - H];
        uint64_t nports = std::max<std::size_t>(1, _ports[s].size());
        S.buffer = _cfg.sw.buffer_bytes ? _cfg.sw.buffer_bytes : _cfg.sw.buffer_per_port_bytes * nports;
        uint64_t share = S.buffer / nports;
        S.qcap = _cfg.sw.queue_cap_bytes ? _cfg.sw.queue_cap_bytes
                                         : static_cast<uint64_t>(_cfg.sw.dt_alpha / (1 + _cfg.sw.dt_alpha) * S.buffer);
        if (_cfg.sw.pfc) {
            uint64_t headroom = 2 * prop_bytes + 2 * uint64_t{_mtu_wire};
            if (share <= headroom + 2 * uint64_t{_mtu_wire})
                throw InfeasibleSpec("switch buffer too small for PFC headroom");
            S.xoff = share - headroom;
            S.xon = S.xoff - 2 * uint64_t{_mtu_wire};
        }
        S.lb = std::make_unique<LbState>(mix64(_cfg.seed * 0x9e3779b97f4a7c15ull + s), _cfg.lb.hashed_spray_start);
    }

    compute_routes();

    uint32_t longest = _topo.host_diameter();
    _rtt = _cfg.transport.rtt_estimate_ns > 0 ? ns_to_ps(_cfg.transport.rtt_estimate_ns)
                                              : analytic_rtt(longest, _mtu_wire);
    if (_cfg.transport.timeout_ns > 0) {
        _timeout = ns_to_ps(_cfg.transport.timeout_ns);
    } else {
        // three round trips plus one full queue share drained at every switch
        uint64_t qmax = 0;
        for (const auto& s : _switches)
            qmax = std::max(qmax, _cfg.sw.pfc ? s.xoff + 2 * uint64_t{_mtu_wire} : s.qcap);
        _timeout = 3 * _rtt + SimTime(longest - 1) * SimTime(qmax) * _ps_per_byte;
    }
    if (_cfg.transport.window_packets) {
        _window = _cfg.transport.window_packets;
    } else {
        uint64_t bdp = static_cast<uint64_t>(_rtt / _ps_per_byte);
        _window = static_cast<uint32_t>(std::max<uint64_t>(1, (bdp + _mtu_wire - 1) / _mtu_wire));
    }

    _hosts.resize(H);
    const auto& rc = _cfg.reorder;
    for (auto& h : _hosts) {
        h.conn_used.assign(rc.max_connections, false);
        if (rc.tracker == TrackerKind::HdBitmap && rc.cap_blocks > 0) {
            ControllerConfig cc;
            cc.block_bytes = rc.block_size_bits / 8;
            cc.total_blocks = rc.controller_blocks;
            cc.max_connections = rc.max_connections;
            cc.bitmap_cap_blocks = rc.cap_blocks;
            cc.metadata_blocks = (MetadataLayout::required_bytes(rc.cap_blocks) + cc.block_bytes - 1) / cc.block_bytes;
            h.ctrl = std::make_unique<MemController>(cc);
        }
    }

    _flows.resize(_specs.size());
    for (const auto& f : _specs)
        schedule(f.start, EvFlowStart, f.id);
    _flows_outstanding = _specs.size();
    _starts_pending = _specs.size();
    _window_end = ns_to_ps(_cfg.traffic.duration_ns);

    _query_remaining.resize(_queries.size());
    _query_done.assign(_queries.size(), -1);
    for (uint32_t q = 0; q < _queries.size(); ++q)
        _query_remaining[q] = static_cast<int64_t>(_queries[q].flows.size());

    if (_cfg.failures.enabled) {
        SimTime first = _cfg.failures.first_at_ns > 0 ? ns_to_ps(_cfg.failures.first_at_ns)
                                                      : ns_to_ps(_cfg.failures.interval_ns);
        schedule(first, EvFailure);
    }
    schedule(ns_to_ps(_cfg.sample_interval_ns), EvSample);
}

void Network::schedule(SimTime t, EvKind k, uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
    _events.push(Event{t, k, _event_order++, a, b, c, d});
}

uint32_t Network::alloc_packet() {
    uint32_t id;
    if (!_free.empty()) {
        id = _free.back();
        _free.pop_back();
    } else {
        id = static_cast<uint32_t>(_pool.size());
        _pool.emplace_back();
    }
    _pool[id] = Packet{};
    _pool[id].live = true;
    _pool[id].uid = ++_uid;
    _pool[id].ttl = _cfg.sw.ttl;
    return id;
}

void Network::free_packet(uint32_t p) {
    _pool[p].live = false;
    _free.push_back(p);
}

void Network::trace(TraceEvent::Kind k, uint32_t node, uint32_t port, const Packet& p) {
    if (!_trace)
        return;
    _trace(TraceEvent{k, _now, node, port, p.flow, p.is_data ? p.data.seq.value : p.ctrl.cumulative.value, p.is_data,
                      p.uid});
}

void Network::compute_routes() {
    const uint32_t H = _topo.host_count();
    const uint32_t N = _topo.node_count();
    _next.assign(N - H, std::vector<std::vector<uint16_t>>(H));
    std::vector<std::vector<uint32_t>> dist_by_tor(N);
    for (uint32_t d = 0; d < H; ++d) {
        uint32_t tor = _topo.tor_of(d);
        if (dist_by_tor[tor].empty())
            dist_by_tor[tor] = _topo.distances_to(tor, _link_up);
        const auto& dist = dist_by_tor[tor];
        for (uint32_t s = H; s < N; ++s) {
            if (s == tor || dist[s] == kUnreachable)
                continue;
            auto& out = _next[s - H][d];
            for (uint32_t i = 0; i < _ports[s].size(); ++i) {
                const Port& p = _ports[s][i];
                if (_topo.is_host(p.peer) || !_link_up[p.link])
                    continue;
                if (dist[p.peer] != kUnreachable && dist[p.peer] + 1 == dist[s])
                    out.push_back(static_cast<uint16_t>(i));
            }
        }
    }

    if (!source_routed(_cfg.lb.policy))
        return;
    _path_sets.assign(N - H, std::vector<std::vector<int32_t>>(N - H));
    std::vector<bool> has_hosts(N, false);
    for (uint32_t h = 0; h < H; ++h)
        has_hosts[_topo.tor_of(h)] = true;
    for (uint32_t a = H; a < N; ++a) {
        if (!has_hosts[a])
            continue;
        for (uint32_t b = H; b < N; ++b) {
            if (a == b || !has_hosts[b])
                continue;
            for (auto& p : _topo.k_shortest_paths(a, b, _cfg.lb.k_paths, _link_up)) {
                _path_sets[a - H][b - H].push_back(static_cast<int32_t>(_paths.size()));
                _paths.push_back(std::move(p));
            }
        }
    }
}

uint64_t Network::path_load(const Path& p) const {
    uint64_t load = 0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        int port = _topo.port_towards(p[i], p[i + 1]);
        if (port >= 0)
            load += _ports[p[i]][port].data_bytes;
    }
    return load;
}

int32_t Network::choose_path(uint32_t flow, uint32_t src_tor, uint32_t dst_tor) {
    if (!source_routed(_cfg.lb.policy) || src_tor == dst_tor)
        return -1;
    const uint32_t H = _topo.host_count();
    const auto& set = _path_sets[src_tor - H][dst_tor - H];
    if (set.empty())
        return -1;
    if (_cfg.lb.policy == LbPolicy::Fksp) {
        FlowRt& F = _flows[flow];
        if (F.pinned_path < 0 || std::find(set.begin(), set.end(), F.pinned_path) == set.end())
            F.pinned_path = set[_rng() % set.size()];
        return F.pinned_path;
    }
    std::size_t i = least_of_two(set.size(), [&](std::size_t j) { return path_load(_paths[set[j]]); }, _rng);
    return set[i];
}

int Network::route(uint32_t sw, Packet& p) {
    if (_topo.tor_of(p.dst) == sw)
        return static_cast<int>(_host_port_at_tor[p.dst]);

    if (p.path >= 0) {
        const Path& P = _paths[p.path];
        if (p.path_hop + 1 < P.size() && P[p.path_hop] == sw) {
            int port = _topo.port_towards(sw, P[p.path_hop + 1]);
            if (port >= 0 && _link_up[_ports[sw][port].link]) {
                ++p.path_hop;
                return port;
            }
        }
        p.path = -1;
    }

    const auto& eligible = _next[sw - _topo.host_count()][p.dst];
    if (eligible.empty())
        return -1;
    LbPolicy policy = _cfg.lb.policy;
    if (!p.is_data || source_routed(policy))
        policy = LbPolicy::Ecmp;
    LbKey key{p.is_data ? p.flow : (uint64_t{p.flow} | (1ull << 40)), p.dst};
    auto probe = [this, sw](uint16_t port) { return _ports[sw][port].data_bytes; };
    return _switches[sw - _topo.host_count()].lb->select(policy, key, eligible, probe, _rng);
}

bool Network::queue_full(uint32_t sw, uint32_t port, uint32_t bytes) const {
    const SwitchRt& S = _switches[sw - _topo.host_count()];
    if (S.buffered + bytes > S.buffer)
        return true;
    if (_cfg.sw.pfc)
        return false;
    uint64_t q = _ports[sw][port].data_bytes + bytes;
    if (_cfg.sw.queue_cap_bytes)
        return q > _cfg.sw.queue_cap_bytes;
    return static_cast<double>(q) > _cfg.sw.dt_alpha * static_cast<double>(S.buffer - S.buffered);
}

void Network::enqueue_data(uint32_t sw, uint32_t port, uint32_t in_port, uint32_t pkt) {
    Packet& p = _pool[pkt];
    Port& e = _ports[sw][port];
    SwitchRt& S = _switches[sw - _topo.host_count()];
    uint64_t key = _cfg.sw.scheduling == Scheduling::Srpt ? p.data.flow_remaining_bytes : 0;
    p.ingress = in_port;
    e.data.insert({key, ++_enqueue_order, pkt});
    e.data_bytes += p.wire;
    S.buffered += p.wire;
    Port& in = _ports[sw][in_port];
    in.in_bytes += p.wire;
    if (_cfg.sw.pfc && !in.pause_sent && in.in_bytes > S.xoff) {
        in.pause_sent = true;
        if (_link_up[in.link])
            schedule(_now + _prop, EvPfc, in.peer, in.peer_port, 1);
    }
}

void Network::release_ingress(uint32_t sw, uint32_t in_port, uint32_t bytes) {
    SwitchRt& S = _switches[sw - _topo.host_count()];
    S.buffered -= bytes;
    Port& in = _ports[sw][in_port];
    in.in_bytes -= bytes;
    if (_cfg.sw.pfc && in.pause_sent && in.in_bytes <= S.xon) {
        in.pause_sent = false;
        if (_link_up[in.link])
            schedule(_now + _prop, EvPfc, in.peer, in.peer_port, 0);
    }
}

void Network::set_paused(Port& p, bool pause) {
    if (pause && !p.paused) {
        p.paused = true;
        p.pause_since = _now;
        ++p.pause_events;
    } else if (!pause && p.paused) {
        p.paused = false;
        p.paused_total += _now - p.pause_since;
    }
}

void Network::drop(uint32_t pkt, uint32_t node, uint32_t port, uint64_t Counters::*reason) {
    Packet& p = _pool[pkt];
    trace(TraceEvent::Kind::Drop, node, port, p);
    if (p.is_data) {
        ++_m.counters.dropped;
        ++(_m.counters.*reason);
        ++_ports[node][port].drops;
        if (reason == &Counters::drop_failure || reason == &Counters::drop_route)
            _flows[p.flow].affected = true;
    }
    free_packet(pkt);
}

void Network::try_tx(uint32_t node, uint32_t port) {
    Port& P = _ports[node][port];
    if (P.busy || !_link_up[P.link])
        return;
    bool host = _topo.is_host(node);
    uint32_t pkt;
    if (!P.ctrl.empty()) {
        pkt = P.ctrl.front();
        P.ctrl.pop_front();
    } else if (P.paused) {
        return;
    } else if (host) {
        auto o = host_pull(node);
        if (!o)
            return;
        pkt = *o;
    } else if (!P.data.empty()) {
        pkt = std::get<2>(*P.data.begin());
        P.data.erase(P.data.begin());
        uint32_t wire = _pool[pkt].wire;
        P.data_bytes -= wire;
        release_ingress(node, _pool[pkt].ingress, wire);
    } else {
        return;
    }

    Port& Q = _ports[node][port];
    const Packet& p = _pool[pkt];
    Q.busy = true;
    Q.tx_bytes += p.wire;
    if (host) {
        if (p.is_data) {
            ++_m.counters.injected;
            _m.counters.data_wire_bytes += p.wire;
            _m.counters.metadata_bytes += kReorderMetadataBytes;
        } else {
            ++_m.counters.control_packets;
            _m.counters.control_wire_bytes += p.wire;
        }
    }
    trace(TraceEvent::Kind::TxStart, node, port, p);
    schedule(_now + serialization(p.wire), EvTxDone, node, port, pkt, _link_epoch[Q.link]);
}

std::optional<uint32_t> Network::host_pull(uint32_t host) {
    HostRt& R = _hosts[host];
    std::size_t n = R.senders.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t idx = (R.rr + i) % n;
        uint32_t f = R.senders[idx];
        SenderAgent& s = *_flows[f].snd;
        if (!s.can_emit())
            continue;
        auto e = s.emit(_now);
        if (e.status != SenderAgent::EmitStatus::Ok || !e.packet)
            continue;
        R.rr = (idx + 1) % n;
        const FlowSpec& spec = _specs[f];
        uint32_t pkt = alloc_packet();
        Packet& p = _pool[pkt];
        p.is_data = true;
        p.data = *e.packet;
        p.flow = f;
        p.src = spec.src;
        p.dst = spec.dst;
        p.wire = e.packet->wire_bytes();
        p.path = choose_path(f, _topo.tor_of(spec.src), _topo.tor_of(spec.dst));
        p.path_hop = 0;
        arm_timer(f);
        return pkt;
    }
    return std::nullopt;
}

void Network::on_tx_done(uint32_t node, uint32_t port, uint32_t pkt, uint32_t epoch) {
    Port& P = _ports[node][port];
    P.busy = false;
    if (epoch != _link_epoch[P.link] || !_link_up[P.link])
        drop(pkt, node, port, &Counters::drop_failure);
    else
        schedule(_now + _prop, EvArrive, P.peer, P.peer_port, pkt, epoch);
    try_tx(node, port);
}

void Network::on_arrive(uint32_t node, uint32_t port, uint32_t pkt, uint32_t epoch) {
    const Port& P = _ports[node][port];
    if (epoch != _link_epoch[P.link]) {
        drop(pkt, P.peer, P.peer_port, &Counters::drop_failure);
        return;
    }
    trace(TraceEvent::Kind::Arrive, node, port, _pool[pkt]);
    if (_topo.is_host(node))
        host_receive(node, pkt);
    else
        switch_forward(node, port, pkt);
}

void Network::switch_forward(uint32_t sw, uint32_t in_port, uint32_t pkt) {
    Packet& p = _pool[pkt];
    if (p.is_data && --p.ttl == 0) {
        drop(pkt, sw, in_port, &Counters::drop_ttl);
        return;
    }
    int out = route(sw, p);
    if (out < 0) {
        drop(pkt, sw, in_port, &Counters::drop_route);
        return;
    }
    if (!p.is_data) {
        _ports[sw][out].ctrl.push_back(pkt);
        try_tx(sw, out);
        return;
    }
    if (queue_full(sw, out, p.wire)) {
        if (!_cfg.sw.deflection) {
            drop(pkt, sw, out, &Counters::drop_buffer);
            return;
        }
        std::vector<uint32_t> cand;
        for (uint32_t i = 0; i < _ports[sw].size(); ++i) {
            const Port& c = _ports[sw][i];
            if (!_topo.is_host(c.peer) && _link_up[c.link] && !queue_full(sw, i, p.wire))
                cand.push_back(i);
        }
        if (cand.empty()) {
            drop(pkt, sw, out, &Counters::drop_buffer);
            return;
        }
        out = static_cast<int>(cand[_rng() % cand.size()]);
        p.path = -1;
        ++_m.counters.deflections;
    }
    enqueue_data(sw, out, in_port, pkt);
    try_tx(sw, out);
}

uint64_t Network::payload_between(const FlowRt&, const FlowSpec& s, SeqNum from, SeqNum to) const {
    uint64_t payload = _cfg.transport.payload_bytes;
    auto upto = [&](SeqNum x) { return std::min<uint64_t>(uint64_t{x.value} * payload, s.bytes); };
    return upto(to) - upto(from);
}

void Network::host_receive(uint32_t host, uint32_t pkt) {
    Packet p = _pool[pkt];
    free_packet(pkt);
    FlowRt& F = _flows[p.flow];
    const FlowSpec& S = _specs[p.flow];

    if (p.is_data) {
        ++_m.counters.delivered;
        if (!F.rcv)
            return;
        auto r = F.rcv->on_packet(p.data);
        if (r.delivered()) {
            uint64_t bytes = payload_between(F, S, r.delivered_from, r.delivered_to);
            _interval_delivered += bytes;
            if (_now <= _window_end)
                _goodput_window += static_cast<double>(bytes);
        }
        F.max_bitmap = std::max<uint64_t>(F.max_bitmap, F.rcv->bitmap_bytes());

        uint32_t c = alloc_packet();
        Packet& cp = _pool[c];
        cp.is_data = false;
        cp.ctrl = r.control;
        cp.flow = p.flow;
        cp.src = host;
        cp.dst = S.src;
        cp.wire = r.control.wire_bytes();
        _ports[host][0].ctrl.push_back(c);
        try_tx(host, 0);

        if (F.rcv->completion()) {
            F.fct = _now - S.start;
            F.receiver_done = true;
            if (S.query >= 0 && --_query_remaining[S.query] == 0)
                _query_done[S.query] = _now;
            maybe_finish_flow(p.flow);
        }
        return;
    }

    if (!F.snd || F.sender_done)
        return;
    F.snd->on_control(p.ctrl, _now);
    if (F.snd->finished()) {
        F.sender_done = true;
        HostRt& R = _hosts[S.src];
        auto it = std::find(R.senders.begin(), R.senders.end(), p.flow);
        if (it != R.senders.end()) {
            std::size_t idx = static_cast<std::size_t>(it - R.senders.begin());
            R.senders.erase(it);
            if (idx < R.rr)
                --R.rr;
            if (R.rr >= R.senders.size())
                R.rr = 0;
        }
        maybe_finish_flow(p.flow);
    } else {
        arm_timer(p.flow);
    }
    kick_host(host);
}

void Network::arm_timer(uint32_t flow) {
    FlowRt& F = _flows[flow];
    if (F.timer_armed || F.sender_done || !F.snd->outstanding())
        return;
    F.timer_armed = true;
    schedule(std::max(_now, F.snd->timer_deadline()), EvTimer, flow);
}

void Network::on_timer(uint32_t flow) {
    FlowRt& F = _flows[flow];
    F.timer_armed = false;
    if (F.sender_done)
        return;
    if (F.snd->timeout_due(_now)) {
        F.snd->on_timeout(_now);
        kick_host(_specs[flow].src);
    }
    arm_timer(flow);
}

void Network::on_flow_start(uint32_t flow) {
    --_starts_pending;
    HostRt& R = _hosts[_specs[flow].dst];
    for (uint32_t i = 0; i < R.conn_used.size(); ++i)
        if (!R.conn_used[i]) {
            start_flow(flow, i);
            return;
        }
    R.waiting.push_back(flow);
}

void Network::start_flow(uint32_t flow, uint32_t conn) {
    const FlowSpec& S = _specs[flow];
    FlowRt& F = _flows[flow];
    _hosts[S.dst].conn_used[conn] = true;
    F.conn = ConnectionId(static_cast<uint8_t>(conn));
    F.started = true;

    const auto& tc = _cfg.transport;
    SenderConfig sc;
    sc.mode = tc.recovery;
    sc.window_packets = _window;
    sc.rtt_estimate = _rtt;
    sc.timeout = _timeout;
    sc.write_hold = tc.write_hold;
    sc.payload_bytes = tc.payload_bytes;
    F.snd = std::make_unique<SenderAgent>(F.conn, SeqNum(0), S.bytes, tc.verb, sc);

    const auto& rc = _cfg.reorder;
    ReceiverConfig rcv;
    rcv.tracker = rc.tracker;
    rcv.mode = tc.recovery;
    rcv.block_size_bits = rc.block_size_bits;
    rcv.cap_blocks = rc.cap_blocks;
    rcv.static_bits = rc.static_bits;
    rcv.sr_buffer_packets = rc.sr_buffer_packets ? rc.sr_buffer_packets : _window;
    F.rcv = std::make_unique<ReceiverAgent>(F.conn, SeqNum(0), rcv, _hosts[S.dst].ctrl.get());

    _hosts[S.src].senders.push_back(flow);
    kick_host(S.src);
}

void Network::maybe_finish_flow(uint32_t flow) {
    FlowRt& F = _flows[flow];
    if (F.finished || !F.receiver_done || !F.sender_done)
        return;
    F.finished = true;
    --_flows_outstanding;
    for (auto& s : _switches)
        s.lb->forget_flow(flow);
    HostRt& R = _hosts[_specs[flow].dst];
    R.conn_used[F.conn.value] = false;
    if (!R.waiting.empty()) {
        uint32_t next = R.waiting.front();
        R.waiting.pop_front();
        start_flow(next, F.conn.value);
    }
}

void Network::fail_link(uint32_t l) {
    _link_up[l] = false;
    ++_link_epoch[l];
    const Link& L = _topo.links()[l];
    for (auto [node, port] : {std::pair{L.a, L.a_port}, std::pair{L.b, L.b_port}}) {
        Port& P = _ports[node][port];
        while (!P.ctrl.empty()) {
            free_packet(P.ctrl.front());
            P.ctrl.pop_front();
        }
        while (!P.data.empty()) {
            uint32_t pkt = std::get<2>(*P.data.begin());
            P.data.erase(P.data.begin());
            uint32_t wire = _pool[pkt].wire;
            P.data_bytes -= wire;
            release_ingress(node, _pool[pkt].ingress, wire);
            drop(pkt, node, port, &Counters::drop_failure);
        }
        set_paused(P, false);
        P.pause_sent = false;
        if (!_topo.is_host(node)) {
            for (auto& ports : _next[node - _topo.host_count()])
                ports.erase(std::remove(ports.begin(), ports.end(), static_cast<uint16_t>(port)), ports.end());
        }
    }
}

void Network::restore_link(uint32_t l) {
    _link_up[l] = true;
    const Link& L = _topo.links()[l];
    try_tx(L.a, L.a_port);
    try_tx(L.b, L.b_port);
}

void Network::on_failure_tick() {
    for (uint32_t l : _failed)
        restore_link(l);
    _failed.clear();

    std::vector<uint32_t> cand;
    for (uint32_t l = 0; l < _topo.links().size(); ++l)
        if (_topo.links()[l].switch_link)
            cand.push_back(l);
    double want = _cfg.failures.fraction * static_cast<double>(cand.size());
    auto count = static_cast<std::size_t>(std::floor(want));
    if (std::uniform_real_distribution<double>(0, 1)(_rng) < want - std::floor(want))
        ++count;
    count = std::min(count, cand.size());
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + _rng() % (cand.size() - i);
        std::swap(cand[i], cand[j]);
        _failed.push_back(cand[i]);
        fail_link(cand[i]);
    }
    _m.counters.link_failures += count;
    schedule(_now + ns_to_ps(_cfg.failures.reroute_delay_ns), EvReroute);
    schedule(_now + ns_to_ps(_cfg.failures.interval_ns), EvFailure);
}

void Network::on_sample() {
    TimeSample s;
    s.time_ns = ps_to_ns(_now);
    for (const auto& F : _flows) {
        if (!F.rcv || !F.rcv->conn_module_valid())
            continue;
        ++s.conn_count;
        s.bitmap_bytes += F.rcv->bitmap_bytes();
        s.metadata_bytes += F.rcv->metadata_bytes();
    }
    s.total_bytes = s.bitmap_bytes + s.metadata_bytes;
    double interval_ns = _cfg.sample_interval_ns;
    s.throughput_gbps = static_cast<double>(_interval_delivered) * 8.0 / interval_ns;
    _interval_delivered = 0;
    _m.series.push_back(s);
    schedule(_now + ns_to_ps(_cfg.sample_interval_ns), EvSample);
}

RunMetrics Network::run() {
    SimTime horizon = ns_to_ps(_cfg.horizon_ns);
    while (!_events.empty() && (_flows_outstanding > 0 || _starts_pending > 0)) {
        Event ev = _events.top();
        if (ev.t > horizon)
            break;
        _events.pop();
        _now = ev.t;
        ++_m.counters.events;
        switch (ev.kind) {
        case EvTxDone: on_tx_done(ev.a, ev.b, ev.c, ev.d); break;
        case EvArrive: on_arrive(ev.a, ev.b, ev.c, ev.d); break;
        case EvPfc:
            set_paused(_ports[ev.a][ev.b], ev.c != 0);
            if (ev.c == 0)
                try_tx(ev.a, ev.b);
            break;
        case EvTimer: on_timer(ev.a); break;
        case EvFlowStart: on_flow_start(ev.a); break;
        case EvFailure: on_failure_tick(); break;
        case EvReroute: compute_routes(); break;
        case EvSample: on_sample(); break;
        }
    }

    RunMetrics& m = _m;
    m.end_ns = ps_to_ns(_now);
    m.window_ns = _cfg.traffic.duration_ns;
    m.goodput_bytes_in_window = _goodput_window;
    m.rtt_estimate_ns = ps_to_ns(_rtt);
    m.window_packets = _window;
    m.host_count = _topo.host_count();
    m.all_complete = _flows_outstanding == 0;
    for (const auto& p : _pool)
        if (p.live && p.is_data)
            ++m.counters.in_flight;

    for (uint32_t n = 0; n < _ports.size(); ++n)
        for (uint32_t i = 0; i < _ports[n].size(); ++i) {
            const Port& P = _ports[n][i];
            PortRecord r;
            r.node = n;
            r.port = i;
            r.peer = P.peer;
            r.host_port = _topo.is_host(n);
            SimTime paused = P.paused_total + (P.paused ? _now - P.pause_since : 0);
            r.paused_ns = ps_to_ns(paused);
            r.pause_events = P.pause_events;
            r.tx_bytes = P.tx_bytes;
            r.drops = P.drops;
            m.ports.push_back(r);
        }

    std::vector<std::vector<uint32_t>> dist_by_tor(_topo.node_count());
    std::vector<bool> all_up(_topo.links().size(), true);
    for (uint32_t i = 0; i < _specs.size(); ++i) {
        const FlowSpec& S = _specs[i];
        const FlowRt& F = _flows[i];
        FlowRecord r;
        r.flow_id = S.id;
        r.query_id = S.query;
        r.src = S.src;
        r.dst = S.dst;
        r.size_bytes = S.bytes;
        r.start_ns = ps_to_ns(S.start);
        r.fct_ns = F.fct >= 0 ? ps_to_ns(F.fct) : -1;
        uint32_t tor = _topo.tor_of(S.dst);
        if (dist_by_tor[tor].empty())
            dist_by_tor[tor] = _topo.distances_to(tor, all_up);
        uint32_t hops = dist_by_tor[tor][_topo.tor_of(S.src)] + 2;
        r.ideal_fct_ns = ps_to_ns(ideal_fct(S.bytes, hops));
        if (F.snd) {
            r.retransmissions = F.snd->retransmissions();
            r.recovery_triggers = F.snd->recovery_triggers();
            r.timeouts = F.snd->timeouts();
        }
        if (F.rcv) {
            r.max_bitmap_bytes = F.max_bitmap;
            r.sack_count = F.rcv->sacks_sent();
            r.nack_count = F.rcv->nacks_sent();
            r.data_arrivals = F.rcv->arrivals();
            r.ooo_arrivals = F.rcv->ooo_arrivals();
        }
        r.affected = F.affected;
        m.flows.push_back(r);
    }

    for (uint32_t q = 0; q < _queries.size(); ++q) {
        QueryRecord r;
        r.query_id = _queries[q].id;
        r.receiver = _queries[q].receiver;
        r.start_ns = ps_to_ns(_queries[q].start);
        r.qct_ns = _query_done[q] >= 0 ? ps_to_ns(_query_done[q] - _queries[q].start) : -1;
        m.queries.push_back(r);
    }
    return std::move(m);
}

}  // namespace eunomia::sim
