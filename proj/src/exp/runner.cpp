// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "eunomia/exp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "eunomia/exp/memory.hpp"
#include "eunomia/sim/network.hpp"

namespace eunomia::exp {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string num(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string num(uint64_t v) { return std::to_string(v); }
std::string num(uint32_t v) { return std::to_string(v); }
std::string num(int32_t v) { return std::to_string(v); }
std::string num(bool v) { return v ? "1" : "0"; }

template <typename... T>
std::string row(const T&... v) {
    std::string out;
    ((out += num(v), out += ','), ...);
    out.back() = '\n';
    return out;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << body;
    if (!out)
        throw std::runtime_error("write failed for " + p.string());
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Rows of a CSV with a header, checked against the expected columns.
std::vector<std::vector<std::string_view>> parse_csv(const std::string& text, std::string_view header,
                                                     const fs::path& p) {
    std::vector<std::vector<std::string_view>> rows;
    std::string_view all(text);
    std::size_t nl = all.find('\n');
    if (all.substr(0, nl) != header)
        throw std::runtime_error(p.string() + ": unexpected header");
    std::size_t cols = std::count(header.begin(), header.end(), ',') + 1;
    std::size_t pos = nl == std::string_view::npos ? all.size() : nl + 1;
    while (pos < all.size()) {
        std::size_t end = all.find('\n', pos);
        if (end == std::string_view::npos)
            end = all.size();
        std::string_view line = all.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty())
            continue;
        std::vector<std::string_view> f;
        std::size_t s = 0;
        while (true) {
            std::size_t c = line.find(',', s);
            f.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
            if (c == std::string_view::npos)
                break;
            s = c + 1;
        }
        if (f.size() != cols)
            throw std::runtime_error(p.string() + ": wrong column count");
        rows.push_back(std::move(f));
    }
    return rows;
}

template <typename T>
T parse_field(std::string_view s) {
    T v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::runtime_error("malformed field \"" + std::string(s) + "\"");
    return v;
}

constexpr std::string_view kFlowsHeader =
    "flow_id,query_id,src,dst,size_bytes,start_ns,fct_ns,ideal_fct_ns,slowdown,retransmissions,"
    "recovery_triggers,timeouts,max_bitmap_bytes,sack_count,nack_count,data_arrivals,ooo_arrivals,affected";
constexpr std::string_view kPortsHeader = "node,port,peer,host_port,paused_ns,pause_events,tx_bytes,drops";
constexpr std::string_view kSeriesHeader =
    "time_ns,conn_count,bitmap_bytes,metadata_bytes,total_bytes,throughput_gbps";
constexpr std::string_view kQueriesHeader = "query_id,receiver,start_ns,qct_ns";

json stats_json(const sim::FctStats& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"p99", s.p99}};
}

json counters_json(const sim::Counters& c) {
    return {{"injected", c.injected},
            {"delivered", c.delivered},
            {"dropped", c.dropped},
            {"in_flight", c.in_flight},
            {"drop_buffer", c.drop_buffer},
            {"drop_ttl", c.drop_ttl},
            {"drop_failure", c.drop_failure},
            {"drop_route", c.drop_route},
            {"deflections", c.deflections},
            {"data_wire_bytes", c.data_wire_bytes},
            {"metadata_bytes", c.metadata_bytes},
            {"control_wire_bytes", c.control_wire_bytes},
            {"control_packets", c.control_packets},
            {"events", c.events},
            {"link_failures", c.link_failures}};
}

sim::Counters counters_from(const json& j) {
    sim::Counters c;
    c.injected = j.at("injected");
    c.delivered = j.at("delivered");
    c.dropped = j.at("dropped");
    c.in_flight = j.at("in_flight");
    c.drop_buffer = j.at("drop_buffer");
    c.drop_ttl = j.at("drop_ttl");
    c.drop_failure = j.at("drop_failure");
    c.drop_route = j.at("drop_route");
    c.deflections = j.at("deflections");
    c.data_wire_bytes = j.at("data_wire_bytes");
    c.metadata_bytes = j.at("metadata_bytes");
    c.control_wire_bytes = j.at("control_wire_bytes");
    c.control_packets = j.at("control_packets");
    c.events = j.at("events");
    c.link_failures = j.at("link_failures");
    return c;
}

std::vector<fs::path> seed_dirs(const fs::path& dir) {
    if (fs::exists(dir / "summary.json"))
        return {dir};
    std::vector<fs::path> out;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && e.path().filename().string().rfind("seed-", 0) == 0 &&
                fs::exists(e.path() / "summary.json"))
                out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string load_tag(double load) { return "load" + std::to_string(std::lround(load * 100)); }

}  // namespace

json summary_json(const sim::RunMetrics& m, const std::vector<uint64_t>& buckets, uint64_t seed) {
    sim::Summary s = sim::summarize(m, buckets);
    json by_bucket = json::object();
    for (const auto& [b, st] : s.fct_by_bucket)
        by_bucket[std::to_string(b)] = stats_json(st);
    return {
        {"artifact_version", kArtifactVersion},
        {"seed", seed},
        {"buckets", buckets},
        {"flows", s.flows},
        {"completed", s.completed},
        {"fct", stats_json(s.fct)},
        {"fct_by_bucket", by_bucket},
        {"reorder_fraction", s.reorder_fraction},
        {"recovery_triggers", s.recovery_triggers},
        {"retransmissions", s.retransmissions},
        {"timeouts", s.timeouts},
        {"drops", s.drops},
        {"overhead_fraction", s.overhead_fraction},
        {"host_paused_ns_mean", s.host_paused_ns_mean},
        {"host_pause_fraction", s.host_pause_fraction},
        {"switch_paused_ns_mean", s.switch_paused_ns_mean},
        {"mean_bitmap_bytes", s.mean_bitmap_bytes},
        {"mean_total_memory_bytes", s.mean_total_memory_bytes},
        {"goodput_gbps", s.goodput_gbps},
        {"qct", stats_json(s.qct)},
        {"affected_slowdown", stats_json(s.affected_slowdown)},
        {"affected_flows", s.affected_flows},
        {"raw",
         {{"counters", counters_json(m.counters)},
          {"end_ns", m.end_ns},
          {"window_ns", m.window_ns},
          {"goodput_bytes_in_window", m.goodput_bytes_in_window},
          {"rtt_estimate_ns", m.rtt_estimate_ns},
          {"window_packets", m.window_packets},
          {"host_count", m.host_count},
          {"all_complete", m.all_complete},
          {"conserved", m.conserved()}}},
    };
}

void write_run_dir(const fs::path& dir, const sim::RunMetrics& m, const std::vector<uint64_t>& buckets,
                   uint64_t seed) {
    fs::create_directories(dir);

    std::string flows(kFlowsHeader);
    flows += '\n';
    for (const auto& f : m.flows)
        flows += row(f.flow_id, f.query_id, f.src, f.dst, f.size_bytes, f.start_ns, f.fct_ns, f.ideal_fct_ns,
                     f.slowdown(), f.retransmissions, f.recovery_triggers, f.timeouts, f.max_bitmap_bytes,
                     f.sack_count, f.nack_count, f.data_arrivals, f.ooo_arrivals, f.affected);
    write_file(dir / "flows.csv", flows);

    std::string ports(kPortsHeader);
    ports += '\n';
    for (const auto& p : m.ports)
        ports += row(p.node, p.port, p.peer, p.host_port, p.paused_ns, p.pause_events, p.tx_bytes, p.drops);
    write_file(dir / "ports.csv", ports);

    std::string series(kSeriesHeader);
    series += '\n';
    for (const auto& t : m.series)
        series += row(t.time_ns, t.conn_count, t.bitmap_bytes, t.metadata_bytes, t.total_bytes, t.throughput_gbps);
    write_file(dir / "timeseries.csv", series);

    std::string queries(kQueriesHeader);
    queries += '\n';
    for (const auto& q : m.queries)
        queries += row(q.query_id, q.receiver, q.start_ns, q.qct_ns);
    write_file(dir / "queries.csv", queries);

    write_file(dir / "summary.json", summary_json(m, buckets, seed).dump(2) + "\n");
}

sim::RunMetrics read_run_dir(const fs::path& dir) {
    sim::RunMetrics m;

    std::string text = read_file(dir / "flows.csv");
    for (const auto& f : parse_csv(text, kFlowsHeader, dir / "flows.csv")) {
        sim::FlowRecord r;
        r.flow_id = parse_field<uint32_t>(f[0]);
        r.query_id = parse_field<int32_t>(f[1]);
        r.src = parse_field<uint32_t>(f[2]);
        r.dst = parse_field<uint32_t>(f[3]);
        r.size_bytes = parse_field<uint64_t>(f[4]);
        r.start_ns = parse_field<double>(f[5]);
        r.fct_ns = parse_field<double>(f[6]);
        r.ideal_fct_ns = parse_field<double>(f[7]);
        r.retransmissions = parse_field<uint64_t>(f[9]);
        r.recovery_triggers = parse_field<uint64_t>(f[10]);
        r.timeouts = parse_field<uint64_t>(f[11]);
        r.max_bitmap_bytes = parse_field<uint64_t>(f[12]);
        r.sack_count = parse_field<uint64_t>(f[13]);
        r.nack_count = parse_field<uint64_t>(f[14]);
        r.data_arrivals = parse_field<uint64_t>(f[15]);
        r.ooo_arrivals = parse_field<uint64_t>(f[16]);
        r.affected = parse_field<uint32_t>(f[17]) != 0;
        m.flows.push_back(r);
    }

    text = read_file(dir / "ports.csv");
    for (const auto& f : parse_csv(text, kPortsHeader, dir / "ports.csv")) {
        sim::PortRecord p;
        p.node = parse_field<uint32_t>(f[0]);
        p.port = parse_field<uint32_t>(f[1]);
        p.peer = parse_field<uint32_t>(f[2]);
        p.host_port = parse_field<uint32_t>(f[3]) != 0;
        p.paused_ns = parse_field<double>(f[4]);
        p.pause_events = parse_field<uint64_t>(f[5]);
        p.tx_bytes = parse_field<uint64_t>(f[6]);
        p.drops = parse_field<uint64_t>(f[7]);
        m.ports.push_back(p);
    }

    text = read_file(dir / "timeseries.csv");
    for (const auto& f : parse_csv(text, kSeriesHeader, dir / "timeseries.csv")) {
        sim::TimeSample t;
        t.time_ns = parse_field<double>(f[0]);
        t.conn_count = parse_field<uint64_t>(f[1]);
        t.bitmap_bytes = parse_field<uint64_t>(f[2]);
        t.metadata_bytes = parse_field<uint64_t>(f[3]);
        t.total_bytes = parse_field<uint64_t>(f[4]);
        t.throughput_gbps = parse_field<double>(f[5]);
        m.series.push_back(t);
    }

    text = read_file(dir / "queries.csv");
    for (const auto& f : parse_csv(text, kQueriesHeader, dir / "queries.csv")) {
        sim::QueryRecord q;
        q.query_id = parse_field<uint32_t>(f[0]);
        q.receiver = parse_field<uint32_t>(f[1]);
        q.start_ns = parse_field<double>(f[2]);
        q.qct_ns = parse_field<double>(f[3]);
        m.queries.push_back(q);
    }

    json s = json::parse(read_file(dir / "summary.json"));
    const json& raw = s.at("raw");
    m.counters = counters_from(raw.at("counters"));
    m.end_ns = raw.at("end_ns");
    m.window_ns = raw.at("window_ns");
    m.goodput_bytes_in_window = raw.at("goodput_bytes_in_window");
    m.rtt_estimate_ns = raw.at("rtt_estimate_ns");
    m.window_packets = raw.at("window_packets");
    m.host_count = raw.at("host_count");
    m.all_complete = raw.at("all_complete");
    return m;
}

void verify_run_dir(const fs::path& dir) {
    json stored = json::parse(read_file(dir / "summary.json"));
    sim::RunMetrics m = read_run_dir(dir);
    if (!m.conserved())
        throw InvariantViolation(dir.string() + ": injected != delivered + dropped + in flight");
    json again = summary_json(m, stored.at("buckets").get<std::vector<uint64_t>>(), stored.at("seed"));
    if (again != stored) {
        std::string which;
        for (auto it = stored.begin(); it != stored.end(); ++it)
            if (!again.contains(it.key()) || again[it.key()] != it.value())
                which += " " + it.key();
        throw InvariantViolation(dir.string() + ": summary differs from the records in:" + which);
    }
}

std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
    if (cfg.preset.empty())
        return {Cell{"", cfg.sim}};
    if (cfg.preset == "fig13-memory")
        return {};
    if (cfg.preset != "clos-lb-sweep")
        throw ConfigError("preset: unknown preset \"" + cfg.preset + "\"");

    std::vector<Cell> cells;
    for (double load : {0.3, 0.5, 0.8})
        for (auto policy : {sim::LbPolicy::Ecmp, sim::LbPolicy::PacketSpray, sim::LbPolicy::Drill,
                            sim::LbPolicy::PowerOfTwo})
            for (auto tracker : {TrackerKind::NoOrdering, TrackerKind::HdBitmap, TrackerKind::IdealOrderingLayer}) {
                Cell c;
                c.sim = cfg.sim;
                c.sim.topology.kind = sim::TopologyKind::Clos;
                c.sim.traffic.load = load;
                c.sim.lb.policy = policy;
                c.sim.reorder.tracker = tracker;
                c.name = load_tag(load) + "-" + sim::to_string(policy) + "-" + to_string(tracker);
                cells.push_back(std::move(c));
            }
    return cells;
}

namespace {

void run_memory_preset(const ExperimentConfig& cfg, RunReport& report) {
    MemoryExperimentConfig mc;
    mc.block_bits = cfg.sim.reorder.block_size_bits;
    mc.cap_blocks = cfg.sim.reorder.cap_blocks;
    mc.static_bits = cfg.sim.reorder.static_bits;
    try {
        mc.validate();
        if (mc.cap_blocks == 0)
            throw std::invalid_argument("fig13-memory needs a capped bitmap");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    for (uint64_t seed : cfg.seeds) {
        mc.seed = seed;
        auto points = run_memory_experiment(mc);
        fs::path dir = report.out / ("seed-" + std::to_string(seed));
        fs::create_directories(dir);
        std::string csv = "ooo_fraction,eunomia_bitmap_bytes,eunomia_total_bytes,static_bitmap_bytes,"
                          "static_total_bytes,nacks\n";
        for (const auto& p : points)
            csv += row(p.ooo_fraction, p.bitmap_bytes, p.total_bytes, p.static_bitmap_bytes, p.static_total_bytes,
                       p.nacks);
        write_file(dir / "memory.csv", csv);
        report.run_dirs.push_back(dir);
    }
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    RunReport report;
    report.out = cfg.output_dir;
    std::vector<Cell> cells = expand_cells(cfg);

    // Everything that can be rejected is rejected before the first file.
    for (const Cell& c : cells) {
        try {
            c.sim.validate();
            sim::Network probe(c.sim);
        } catch (const std::exception& e) {
            throw ConfigError((c.name.empty() ? std::string() : c.name + ": ") + e.what());
        }
    }

    fs::create_directories(report.out);
    if (cfg.preset == "fig13-memory") {
        run_memory_preset(cfg, report);
    } else {
        struct Task {
            const Cell* cell;
            uint64_t seed;
            fs::path dir;
        };
        std::vector<Task> tasks;
        for (const Cell& c : cells)
            for (uint64_t seed : cfg.seeds) {
                fs::path base = c.name.empty() ? report.out : report.out / c.name;
                tasks.push_back({&c, seed, base / ("seed-" + std::to_string(seed))});
            }

        unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
        workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr first_error;
        auto work = [&] {
            for (std::size_t i = next++; i < tasks.size(); i = next++) {
                try {
                    sim::SimConfig sc = tasks[i].cell->sim;
                    sc.seed = tasks[i].seed;
                    sim::Network net(sc);
                    sim::RunMetrics m = net.run();
                    if (!m.conserved())
                        throw InvariantViolation(tasks[i].dir.string() + ": packet conservation violated");
                    write_run_dir(tasks[i].dir, m, cfg.buckets, tasks[i].seed);
                    verify_run_dir(tasks[i].dir);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
        if (first_error)
            std::rethrow_exception(first_error);
        for (const auto& t : tasks)
            report.run_dirs.push_back(t.dir);
    }

    json runs = json::array();
    for (const auto& d : report.run_dirs)
        runs.push_back(fs::relative(d, report.out).generic_string());
    json manifest = {{"artifact_version", kArtifactVersion}, {"config", to_json(cfg)}, {"runs", runs}};
    write_file(report.out / "manifest.json", manifest.dump(2) + "\n");
    return report;
}

ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path);
    json doc = json::parse(in, nullptr, false, true);
    if (doc.is_discarded())
        throw ConfigError(path + ": not valid JSON");
    if (doc.is_object() && doc.contains("artifact_version") && doc.contains("config"))
        return parse_config(doc.at("config"), overrides);
    return parse_config(doc, overrides);
}

double summary_metric(const json& summary, const std::string& metric) {
    auto it = summary.find(metric);
    if (it != summary.end() && it->is_number())
        return it->get<double>();
    for (std::size_t i = metric.find('_'); i != std::string::npos; i = metric.find('_', i + 1)) {
        auto sub = summary.find(metric.substr(0, i));
        if (sub != summary.end() && sub->is_object()) {
            try {
                return summary_metric(*sub, metric.substr(i + 1));
            } catch (const std::invalid_argument&) {
            }
        }
    }
    throw std::invalid_argument("unknown metric \"" + metric + "\"");
}

Comparison compare_runs(const std::vector<fs::path>& dirs, const std::string& metric, const fs::path& baseline) {
    struct Run {
        std::string name;
        std::map<uint64_t, json> by_seed;
    };
    std::vector<Run> runs;
    std::size_t base_index = dirs.size();
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        Run r;
        r.name = dirs[i].string();
        for (const auto& d : seed_dirs(dirs[i])) {
            json s = json::parse(read_file(d / "summary.json"));
            auto seed = s.at("seed").get<uint64_t>();
            r.by_seed[seed] = std::move(s);
        }
        if (r.by_seed.empty())
            throw IncompatibleRuns(r.name + ": no run summaries found");
        if (fs::weakly_canonical(dirs[i]) == fs::weakly_canonical(baseline))
            base_index = i;
        runs.push_back(std::move(r));
    }
    if (base_index == dirs.size())
        throw std::invalid_argument("baseline " + baseline.string() + " is not among the compared runs");

    const Run& base = runs[base_index];
    const json& edges = base.by_seed.begin()->second.at("buckets");
    for (const Run& r : runs)
        for (const auto& [seed, s] : r.by_seed)
            if (s.at("buckets") != edges)
                throw IncompatibleRuns(r.name + ": flow-size buckets differ from the baseline");

    std::vector<uint64_t> seeds;
    for (const auto& [seed, s] : base.by_seed) {
        bool everywhere = std::all_of(runs.begin(), runs.end(), [&](const Run& r) { return r.by_seed.count(seed); });
        if (everywhere)
            seeds.push_back(seed);
    }
    if (seeds.empty())
        throw IncompatibleRuns("the runs share no seed");

    auto fill = [](CompareRow& row) {
        if (row.baseline == 0) {
            row.ratio = row.value == 0 ? 1 : std::numeric_limits<double>::infinity();
            row.improvement_pct = 0;
        } else {
            row.ratio = row.value / row.baseline;
            row.improvement_pct = (row.baseline - row.value) / row.baseline * 100;
        }
    };

    Comparison cmp;
    cmp.metric = metric;
    cmp.baseline = base.name;
    for (const Run& r : runs) {
        CompareRow mean;
        mean.run = r.name;
        for (uint64_t seed : seeds) {
            CompareRow row;
            row.run = r.name;
            row.seed = seed;
            row.value = summary_metric(r.by_seed.at(seed), metric);
            row.baseline = summary_metric(base.by_seed.at(seed), metric);
            fill(row);
            mean.value += row.value;
            mean.baseline += row.baseline;
            cmp.rows.push_back(row);
        }
        mean.value /= static_cast<double>(seeds.size());
        mean.baseline /= static_cast<double>(seeds.size());
        fill(mean);
        cmp.means.push_back(mean);
    }
    return cmp;
}

std::string Comparison::csv() const {
    std::string out = "run,seed,metric,value,baseline,ratio,improvement_pct\n";
    auto line = [&](const CompareRow& r, const std::string& seed) {
        out += r.run + "," + seed + "," + metric + "," + num(r.value) + "," + num(r.baseline) + "," + num(r.ratio) +
               "," + num(r.improvement_pct) + "\n";
    };
    for (const auto& r : rows)
        line(r, std::to_string(r.seed));
    for (const auto& r : means)
        line(r, "mean");
    return out;
}

std::string Comparison::table() const {
    std::size_t w = 3;
    for (const auto& r : means)
        w = std::max(w, r.run.size());
    std::ostringstream os;
    os << metric << " relative to " << baseline << "\n";
    os << std::left << std::setw(static_cast<int>(w)) << "run" << "  " << std::setw(6) << "seed" << std::right
       << std::setw(14) << "value" << std::setw(14) << "baseline" << std::setw(10) << "ratio" << std::setw(12)
       << "change" << "\n";
    auto line = [&](const CompareRow& r, const std::string& seed) {
        os << std::left << std::setw(static_cast<int>(w)) << r.run << "  " << std::setw(6) << seed << std::right
           << std::setw(14) << std::setprecision(6) << r.value << std::setw(14) << r.baseline << std::setw(10)
           << std::fixed << std::setprecision(3) << r.ratio << std::setw(11) << std::setprecision(1)
           << (0.0 - r.improvement_pct) << "%" << std::defaultfloat << "\n";
    };
    for (const auto& r : rows)
        line(r, std::to_string(r.seed));
    for (const auto& r : means)
        line(r, "mean");
    return os.str();
}

}  // namespace eunomia::exp
