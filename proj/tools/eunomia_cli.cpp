// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
// eunomia-cli: run simulation experiments and compare their outputs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eunomia/exp/config_io.hpp"
#include "eunomia/exp/runner.hpp"

namespace fs = std::filesystem;
using namespace eunomia::exp;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kConfig = 2, kIncompatible = 3, kInvariant = 4 };

int do_run(const std::string& config, const std::optional<uint64_t>& seed, const std::string& preset,
           const std::string& out, std::vector<std::string> overrides) {
    if (!preset.empty())
        overrides.push_back("preset=\"" + preset + "\"");
    if (!out.empty())
        overrides.push_back("output_dir=" + nlohmann::json(out).dump());
    if (seed)
        overrides.push_back("seeds=[" + std::to_string(*seed) + "]");
    ExperimentConfig cfg = load_experiment(config, overrides);
    RunReport report = run_experiment(cfg);
    for (const auto& dir : report.run_dirs) {
        std::cout << dir.string();
        if (fs::exists(dir / "summary.json")) {
            std::ifstream in(dir / "summary.json");
            auto s = nlohmann::json::parse(in);
            std::cout << "  flows " << s["completed"] << "/" << s["flows"] << "  fct_mean_ns " << s["fct"]["mean"]
                      << "  reorder " << s["reorder_fraction"] << "  drops " << s["drops"];
        }
        std::cout << "\n";
    }
    std::cout << "manifest: " << (report.out / "manifest.json").string() << "\n";
    return kOk;
}

int do_compare(const std::vector<std::string>& dirs, const std::string& metric, std::string baseline,
               const std::string& csv_path) {
    if (baseline.empty())
        baseline = dirs.front();
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    Comparison cmp = compare_runs(paths, metric, baseline);
    std::cout << cmp.table();
    if (csv_path.empty()) {
        std::cout << "\n" << cmp.csv();
    } else {
        std::ofstream out(csv_path);
        if (!out)
            throw std::runtime_error("cannot write " + csv_path);
        out << cmp.csv();
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eunomia reordering simulator and experiment runner"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment config (or replay a manifest.json)");
    std::string config, preset, out;
    std::optional<uint64_t> seed;
    std::vector<std::string> overrides;
    run->add_option("config", config, "experiment config file")->required();
    run->add_option("--seed", seed, "run only this seed");
    run->add_option("--preset", preset, "fig13-memory or clos-lb-sweep");
    run->add_option("--out", out, "output directory");
    run->add_option("--override", overrides, "dotted.key=value, repeatable")->take_all();

    auto* cmp = app.add_subcommand("compare", "compare run directories on one summary metric");
    std::vector<std::string> dirs;
    std::string metric = "fct_mean", baseline, csv_path;
    cmp->add_option("dirs", dirs, "run output directories")->required()->expected(2, -1);
    cmp->add_option("--metric", metric, "summary metric, e.g. fct_mean, fct_p99, reorder_fraction");
    cmp->add_option("--baseline", baseline, "baseline directory (default: the first)");
    cmp->add_option("--csv", csv_path, "write the CSV table here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return do_run(config, seed, preset, out, overrides);
        return do_compare(dirs, metric, baseline, csv_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const IncompatibleRuns& e) {
        std::cerr << "incompatible runs: " << e.what() << "\n";
        return kIncompatible;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violated: " << e.what() << "\n";
        return kInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
