// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/exp/config_io.hpp"

#include <fstream>
#include <sstream>

namespace eunomia::exp {

using nlohmann::json;
using namespace eunomia::sim;

namespace {

const char* verb_name(Verb v) { return v == Verb::Write ? "write" : "send_recv"; }

template <typename E>
E parse_enum(const json& j, const std::string& key, std::initializer_list<std::pair<const char*, E>> table) {
    if (!j.is_string())
        throw ConfigError(key + ": expected a string");
    auto s = j.get<std::string>();
    std::string choices;
    for (const auto& [name, value] : table) {
        if (s == name)
            return value;
        choices += choices.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(key + ": unknown value \"" + s + "\" (one of " + choices + ")");
}

class Reader {
public:
    Reader(const json& j, std::string prefix) : _j(j), _prefix(std::move(prefix)) {}

    const json& at(const char* k) const { return _j.at(k); }
    std::string path(const char* k) const { return _prefix + k; }

    uint64_t u64(const char* k) const {
        const json& v = at(k);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<int64_t>() < 0))
            throw ConfigError(path(k) + ": expected a non-negative integer");
        return v.get<uint64_t>();
    }
    uint32_t u32(const char* k) const {
        uint64_t v = u64(k);
        if (v > UINT32_MAX)
            throw ConfigError(path(k) + ": out of range");
        return static_cast<uint32_t>(v);
    }
    double num(const char* k) const {
        if (!at(k).is_number())
            throw ConfigError(path(k) + ": expected a number");
        return at(k).get<double>();
    }
    bool flag(const char* k) const {
        if (!at(k).is_boolean())
            throw ConfigError(path(k) + ": expected true or false");
        return at(k).get<bool>();
    }
    std::string str(const char* k) const {
        if (!at(k).is_string())
            throw ConfigError(path(k) + ": expected a string");
        return at(k).get<std::string>();
    }
    Reader sub(const char* k) const { return Reader(at(k), path(k) + "."); }

private:
    const json& _j;
    std::string _prefix;
};

json encode(const SimConfig& c) {
    const auto& t = c.topology;
    const auto& tr = c.transport;
    const auto& r = c.reorder;
    const auto& f = c.traffic;
    const auto& fl = c.failures;
    return json{
        {"topology",
         {{"kind", to_string(t.kind)}, {"spines", t.spines}, {"leaves", t.leaves},
          {"hosts_per_leaf", t.hosts_per_leaf}, {"k", t.k}, {"switches", t.switches},
          {"degree", t.degree}, {"hosts", t.hosts}, {"graph_seed", t.graph_seed},
          {"link_gbps", t.link_gbps}, {"prop_ns", t.prop_ns}}},
        {"transport",
         {{"payload_bytes", tr.payload_bytes}, {"window_packets", tr.window_packets},
          {"rtt_estimate_ns", tr.rtt_estimate_ns}, {"timeout_ns", tr.timeout_ns},
          {"recovery", to_string(tr.recovery)}, {"verb", verb_name(tr.verb)}, {"write_hold", tr.write_hold}}},
        {"reorder",
         {{"tracker", to_string(r.tracker)}, {"block_size_bits", r.block_size_bits},
          {"cap_blocks", r.cap_blocks}, {"static_bits", r.static_bits},
          {"sr_buffer_packets", r.sr_buffer_packets}, {"controller_blocks", r.controller_blocks},
          {"max_connections", r.max_connections}}},
        {"switch",
         {{"buffer_bytes", c.sw.buffer_bytes}, {"buffer_per_port_bytes", c.sw.buffer_per_port_bytes},
          {"queue_cap_bytes", c.sw.queue_cap_bytes}, {"dt_alpha", c.sw.dt_alpha},
          {"pfc", c.sw.pfc}, {"deflection", c.sw.deflection}, {"ttl", c.sw.ttl},
          {"scheduling", to_string(c.sw.scheduling)}}},
        {"lb",
         {{"policy", to_string(c.lb.policy)}, {"k_paths", c.lb.k_paths},
          {"hashed_spray_start", c.lb.hashed_spray_start}}},
        {"traffic",
         {{"kind", to_string(f.kind)}, {"load", f.load}, {"cdf", f.cdf}, {"duration_ns", f.duration_ns},
          {"incast_fan_in", f.incast_fan_in}, {"incast_flow_bytes", f.incast_flow_bytes},
          {"background_load", f.background_load}, {"single_src", f.single_src},
          {"single_dst", f.single_dst}, {"single_bytes", f.single_bytes}}},
        {"failures",
         {{"enabled", fl.enabled}, {"fraction", fl.fraction}, {"interval_ns", fl.interval_ns},
          {"reroute_delay_ns", fl.reroute_delay_ns}, {"first_at_ns", fl.first_at_ns}}},
        {"horizon_ns", c.horizon_ns},
        {"sample_interval_ns", c.sample_interval_ns},
    };
}

SimConfig decode(const json& j) {
    SimConfig c;
    Reader root(j, "");
    {
        Reader t = root.sub("topology");
        c.topology.kind = parse_enum<TopologyKind>(t.at("kind"), t.path("kind"),
                                                   {{"clos", TopologyKind::Clos},
                                                    {"fat_tree", TopologyKind::FatTree},
                                                    {"jellyfish", TopologyKind::Jellyfish}});
        c.topology.spines = t.u32("spines");
        c.topology.leaves = t.u32("leaves");
        c.topology.hosts_per_leaf = t.u32("hosts_per_leaf");
        c.topology.k = t.u32("k");
        c.topology.switches = t.u32("switches");
        c.topology.degree = t.u32("degree");
        c.topology.hosts = t.u32("hosts");
        c.topology.graph_seed = t.u64("graph_seed");
        c.topology.link_gbps = t.num("link_gbps");
        c.topology.prop_ns = t.num("prop_ns");
    }
    {
        Reader t = root.sub("transport");
        c.transport.payload_bytes = t.u32("payload_bytes");
        c.transport.window_packets = t.u32("window_packets");
        c.transport.rtt_estimate_ns = t.num("rtt_estimate_ns");
        c.transport.timeout_ns = t.num("timeout_ns");
        c.transport.recovery = parse_enum<RecoveryMode>(
            t.at("recovery"), t.path("recovery"),
            {{"gbn", RecoveryMode::GoBackN}, {"sr", RecoveryMode::SelectiveRepeat}});
        c.transport.verb = parse_enum<Verb>(t.at("verb"), t.path("verb"),
                                            {{"send_recv", Verb::SendRecv}, {"write", Verb::Write}});
        c.transport.write_hold = t.flag("write_hold");
    }
    {
        Reader t = root.sub("reorder");
        c.reorder.tracker = parse_enum<TrackerKind>(t.at("tracker"), t.path("tracker"),
                                                    {{"hd_bitmap", TrackerKind::HdBitmap},
                                                     {"static_bitmap", TrackerKind::StaticBitmap},
                                                     {"ideal", TrackerKind::IdealOrderingLayer},
                                                     {"none", TrackerKind::NoOrdering}});
        c.reorder.block_size_bits = t.u32("block_size_bits");
        c.reorder.cap_blocks = t.u32("cap_blocks");
        c.reorder.static_bits = t.u32("static_bits");
        c.reorder.sr_buffer_packets = t.u32("sr_buffer_packets");
        c.reorder.controller_blocks = t.u32("controller_blocks");
        c.reorder.max_connections = t.u32("max_connections");
    }
    {
        Reader t = root.sub("switch");
        c.sw.buffer_bytes = t.u64("buffer_bytes");
        c.sw.buffer_per_port_bytes = t.u64("buffer_per_port_bytes");
        c.sw.queue_cap_bytes = t.u64("queue_cap_bytes");
        c.sw.dt_alpha = t.num("dt_alpha");
        c.sw.pfc = t.flag("pfc");
        c.sw.deflection = t.flag("deflection");
        c.sw.ttl = t.u32("ttl");
        c.sw.scheduling = parse_enum<Scheduling>(t.at("scheduling"), t.path("scheduling"),
                                                 {{"fifo", Scheduling::Fifo}, {"srpt", Scheduling::Srpt}});
    }
    {
        Reader t = root.sub("lb");
        c.lb.policy = parse_enum<LbPolicy>(t.at("policy"), t.path("policy"),
                                           {{"ecmp", LbPolicy::Ecmp},
                                            {"packet_spray", LbPolicy::PacketSpray},
                                            {"drill", LbPolicy::Drill},
                                            {"po2", LbPolicy::PowerOfTwo},
                                            {"fksp", LbPolicy::Fksp}});
        c.lb.k_paths = t.u32("k_paths");
        c.lb.hashed_spray_start = t.flag("hashed_spray_start");
    }
    {
        Reader t = root.sub("traffic");
        c.traffic.kind = parse_enum<TrafficKind>(t.at("kind"), t.path("kind"),
                                                 {{"poisson", TrafficKind::Poisson},
                                                  {"incast", TrafficKind::Incast},
                                                  {"single", TrafficKind::Single}});
        c.traffic.load = t.num("load");
        c.traffic.cdf = t.str("cdf");
        c.traffic.duration_ns = t.num("duration_ns");
        c.traffic.incast_fan_in = t.u32("incast_fan_in");
        c.traffic.incast_flow_bytes = t.u64("incast_flow_bytes");
        c.traffic.background_load = t.num("background_load");
        c.traffic.single_src = t.u32("single_src");
        c.traffic.single_dst = t.u32("single_dst");
        c.traffic.single_bytes = t.u64("single_bytes");
    }
    {
        Reader t = root.sub("failures");
        c.failures.enabled = t.flag("enabled");
        c.failures.fraction = t.num("fraction");
        c.failures.interval_ns = t.num("interval_ns");
        c.failures.reroute_delay_ns = t.num("reroute_delay_ns");
        c.failures.first_at_ns = t.num("first_at_ns");
    }
    c.horizon_ns = root.num("horizon_ns");
    c.sample_interval_ns = root.num("sample_interval_ns");
    return c;
}

void merge(json& base, const json& user, const std::string& prefix) {
    if (!user.is_object())
        throw ConfigError((prefix.empty() ? std::string("config") : prefix) + ": expected an object");
    for (const auto& [k, v] : user.items()) {
        std::string key = prefix.empty() ? k : prefix + "." + k;
        if (!base.contains(k))
            throw ConfigError("unknown key \"" + key + "\"");
        if (base[k].is_object())
            merge(base[k], v, key);
        else
            base[k] = v;
    }
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
    json j = encode(cfg.sim);
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir;
    j["preset"] = cfg.preset;
    j["buckets"] = cfg.buckets;
    j["workers"] = cfg.workers;
    return j;
}

json default_config_json() { return to_json(ExperimentConfig{}); }

void apply_override(json& tree, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override \"" + assignment + "\" is not key=value");
    std::string key = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);
    json* node = &tree;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part))
            throw ConfigError("unknown key \"" + key + "\"");
        node = &(*node)[part];
    }
    if (node->is_object())
        throw ConfigError("override \"" + key + "\" names a section, not a value");
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded())
        value = raw;
    *node = value;
}

ExperimentConfig parse_config(const json& user, const std::vector<std::string>& overrides) {
    json tree = default_config_json();
    merge(tree, user, "");
    for (const auto& o : overrides)
        apply_override(tree, o);

    ExperimentConfig cfg;
    try {
        cfg.sim = decode(tree);
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    Reader root(tree, "");
    const json& seeds = tree.at("seeds");
    if (!seeds.is_array() || seeds.empty())
        throw ConfigError("seeds: expected a non-empty array");
    cfg.seeds.clear();
    for (const auto& s : seeds) {
        if (!s.is_number_integer() || s.get<int64_t>() < 0)
            throw ConfigError("seeds: expected non-negative integers");
        cfg.seeds.push_back(s.get<uint64_t>());
    }
    cfg.output_dir = root.str("output_dir");
    cfg.preset = root.str("preset");
    cfg.workers = root.u32("workers");
    const json& b = tree.at("buckets");
    if (!b.is_array())
        throw ConfigError("buckets: expected an array");
    for (const auto& e : b) {
        if (!e.is_number_integer() || e.get<int64_t>() <= 0)
            throw ConfigError("buckets: expected positive integers");
        if (!cfg.buckets.empty() && e.get<uint64_t>() <= cfg.buckets.back())
            throw ConfigError("buckets: edges must increase");
        cfg.buckets.push_back(e.get<uint64_t>());
    }
    if (!cfg.preset.empty() && cfg.preset != "fig13-memory" && cfg.preset != "clos-lb-sweep")
        throw ConfigError("preset: unknown preset \"" + cfg.preset + "\"");
    cfg.sim.seed = cfg.seeds.front();
    try {
        cfg.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path);
    json user = json::parse(in, nullptr, false, true);
    if (user.is_discarded())
        throw ConfigError(path + ": not valid JSON");
    return parse_config(user, overrides);
}

}  // namespace eunomia::exp
