// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "eunomia/endpoint.hpp"
#include "eunomia/mem_controller.hpp"
#include "eunomia/sim/config.hpp"
#include "eunomia/sim/lb.hpp"
#include "eunomia/sim/metrics.hpp"
#include "eunomia/sim/topology.hpp"
#include "eunomia/sim/traffic.hpp"

namespace eunomia::sim {

struct TraceEvent {
    enum class Kind : uint8_t { TxStart, Arrive, Drop };
    Kind kind;
    SimTime time;
    uint32_t node;
    uint32_t port;
    uint32_t flow;
    uint32_t seq;
    bool data;
    uint64_t packet_uid;
};

Topology build_topology(const TopologyConfig& cfg);
// Bundled distribution name ("heavy_tailed", "high_variance") or a file path.
FlowSizeCdf load_cdf(const std::string& name_or_path);

struct Workload {
    std::vector<FlowSpec> flows;
    std::vector<QuerySpec> queries;
};

Workload generate_workload(const SimConfig& cfg, const Topology& topo);

/// One simulated network: topology, switches, host NICs and the flows
/// running over them. Single-threaded; construct one per run.
class Network {
public:
    explicit Network(const SimConfig& cfg);
    // Explicit topology and flows; the traffic section of cfg is ignored.
    Network(const SimConfig& cfg, Topology topo, std::vector<FlowSpec> flows,
            std::vector<QuerySpec> queries = {});
    ~Network();

    RunMetrics run();

    const Topology& topology() const { return _topo; }
    const std::vector<FlowSpec>& flows() const { return _specs; }
    SimTime rtt_estimate() const { return _rtt; }
    uint32_t window_packets() const { return _window; }
    SimTime timeout() const { return _timeout; }
    SimTime serialization(uint32_t wire_bytes) const { return SimTime(wire_bytes) * _ps_per_byte; }
    SimTime prop() const { return _prop; }
    // Unloaded round trip over `hops` links: data out, ACK back.
    SimTime analytic_rtt(uint32_t hops, uint32_t data_wire_bytes) const;
    // Unloaded completion time of a flow over `hops` links.
    SimTime ideal_fct(uint64_t bytes, uint32_t hops) const;

    void set_trace(std::function<void(const TraceEvent&)> fn) { _trace = std::move(fn); }

private:
    enum EvKind : uint8_t { EvTxDone, EvArrive, EvPfc, EvTimer, EvFlowStart, EvFailure, EvReroute, EvSample };

    struct Event {
        SimTime t;
        uint8_t kind;
        uint64_t order;
        uint32_t a, b, c, d;
        bool operator>(const Event& o) const {
            return std::tie(t, kind, order) > std::tie(o.t, o.kind, o.order);
        }
    };

    struct Packet {
        bool is_data = true;
        WirePacket data;
        ControlPacket ctrl;
        uint32_t flow = 0;
        uint32_t src = 0, dst = 0;
        uint32_t wire = 0;
        uint32_t ttl = 64;
        int32_t path = -1;
        uint32_t path_hop = 0;
        uint32_t ingress = 0;
        uint64_t uid = 0;
        bool live = false;
    };

    using QueueKey = std::tuple<uint64_t, uint64_t, uint32_t>;

    struct Port {
        uint32_t node = 0, peer = 0, peer_port = 0, link = 0;
        std::deque<uint32_t> ctrl;
        std::set<QueueKey> data;
        uint64_t data_bytes = 0;
        bool busy = false;
        bool paused = false;
        SimTime pause_since = 0;
        SimTime paused_total = 0;
        uint64_t pause_events = 0;
        uint64_t in_bytes = 0;  // buffered bytes that entered through this port
        bool pause_sent = false;
        uint64_t tx_bytes = 0;
        uint64_t drops = 0;
    };

    struct SwitchRt {
        uint64_t buffered = 0;
        uint64_t buffer = 0;
        uint64_t xoff = 0, xon = 0, qcap = 0;
        std::unique_ptr<LbState> lb;
    };

    struct HostRt {
        std::unique_ptr<MemController> ctrl;
        std::vector<uint32_t> senders;
        std::size_t rr = 0;
        std::vector<bool> conn_used;
        std::deque<uint32_t> waiting;
    };

    struct FlowRt {
        std::unique_ptr<SenderAgent> snd;
        std::unique_ptr<ReceiverAgent> rcv;
        ConnectionId conn;
        bool started = false;
        bool receiver_done = false;
        bool sender_done = false;
        bool timer_armed = false;
        bool affected = false;
        bool finished = false;
        int32_t pinned_path = -1;
        SimTime fct = -1;
        uint64_t max_bitmap = 0;
    };

    void init();
    void schedule(SimTime t, EvKind k, uint32_t a = 0, uint32_t b = 0, uint32_t c = 0, uint32_t d = 0);
    uint32_t alloc_packet();
    void free_packet(uint32_t p);
    void trace(TraceEvent::Kind k, uint32_t node, uint32_t port, const Packet& p);

    void try_tx(uint32_t node, uint32_t port);
    std::optional<uint32_t> host_pull(uint32_t host);
    void on_tx_done(uint32_t node, uint32_t port, uint32_t pkt, uint32_t epoch);
    void on_arrive(uint32_t node, uint32_t port, uint32_t pkt, uint32_t epoch);
    void on_pfc(uint32_t node, uint32_t port, bool pause);
    void on_timer(uint32_t flow);
    void on_flow_start(uint32_t flow);
    void on_failure_tick();
    void on_sample();

    void switch_forward(uint32_t sw, uint32_t in_port, uint32_t pkt);
    int route(uint32_t sw, Packet& p);
    bool queue_full(uint32_t sw, uint32_t port, uint32_t bytes) const;
    void enqueue_data(uint32_t sw, uint32_t port, uint32_t in_port, uint32_t pkt);
    void release_ingress(uint32_t sw, uint32_t in_port, uint32_t bytes);
    void drop(uint32_t pkt, uint32_t node, uint32_t port, uint64_t Counters::*reason);
    void host_receive(uint32_t host, uint32_t pkt);
    void arm_timer(uint32_t flow);
    void kick_host(uint32_t host) { try_tx(host, 0); }
    void maybe_finish_flow(uint32_t flow);
    void start_flow(uint32_t flow, uint32_t conn);
    int32_t choose_path(uint32_t flow, uint32_t src_tor, uint32_t dst_tor);
    uint64_t path_load(const Path& p) const;

    void compute_routes();
    void fail_link(uint32_t link);
    void restore_link(uint32_t link);
    void set_paused(Port& port, bool pause);

    uint64_t payload_between(const FlowRt& f, const FlowSpec& s, SeqNum from, SeqNum to) const;

    SimConfig _cfg;
    Topology _topo;
    std::vector<FlowSpec> _specs;
    std::vector<QuerySpec> _queries;
    std::mt19937_64 _rng;

    SimTime _now = 0;
    SimTime _ps_per_byte = 800;
    SimTime _prop = 0;
    SimTime _rtt = 0;
    SimTime _timeout = 0;
    SimTime _window_end = 0;
    uint32_t _window = 16;
    uint32_t _mtu_wire = 0;
    uint64_t _event_order = 0;
    uint64_t _enqueue_order = 0;
    uint64_t _uid = 0;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> _events;

    std::vector<Packet> _pool;
    std::vector<uint32_t> _free;
    std::vector<std::vector<Port>> _ports;
    std::vector<SwitchRt> _switches;
    std::vector<HostRt> _hosts;
    std::vector<FlowRt> _flows;
    std::vector<bool> _link_up;
    std::vector<uint32_t> _link_epoch;
    std::vector<uint32_t> _failed;
    std::vector<uint32_t> _host_port_at_tor;  // per host, its port index on the ToR

    // _next[switch - hosts][dst host] = eligible egress ports
    std::vector<std::vector<std::vector<uint16_t>>> _next;
    std::vector<Path> _paths;
    std::vector<std::vector<std::vector<int32_t>>> _path_sets;  // [src tor][dst tor] -> path ids

    uint64_t _flows_outstanding = 0;
    uint64_t _starts_pending = 0;
    uint64_t _interval_delivered = 0;
    double _goodput_window = 0;
    std::vector<int64_t> _query_remaining;
    std::vector<SimTime> _query_done;

    RunMetrics _m;
    std::function<void(const TraceEvent&)> _trace;
};

}  // namespace eunomia::sim
