// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eunomia/exp/config_io.hpp"
#include "eunomia/sim/metrics.hpp"

namespace eunomia::exp {

inline constexpr const char* kArtifactVersion = "1.0.0";

class IncompatibleRuns : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A run produced records that contradict its own summary or the packet
// conservation law.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// summary.json body: the derived scalars plus the raw run-level fields the
// scalars need, so that read_run_dir() + summarize() reproduces it.
nlohmann::json summary_json(const sim::RunMetrics& m, const std::vector<uint64_t>& buckets, uint64_t seed);

// flows.csv, ports.csv, timeseries.csv, queries.csv and summary.json.
void write_run_dir(const std::filesystem::path& dir, const sim::RunMetrics& m,
                   const std::vector<uint64_t>& buckets, uint64_t seed);
sim::RunMetrics read_run_dir(const std::filesystem::path& dir);
// Recomputes summary.json from the CSVs; throws InvariantViolation on any
// difference.
void verify_run_dir(const std::filesystem::path& dir);

// One simulation configuration inside an experiment. Plain runs have a
// single cell with an empty name.
struct Cell {
    std::string name;
    sim::SimConfig sim;
};

std::vector<Cell> expand_cells(const ExperimentConfig& cfg);

struct RunReport {
    std::filesystem::path out;
    std::vector<std::filesystem::path> run_dirs;
};

// Validates every cell before touching the filesystem, runs all
// (cell, seed) pairs on a worker pool, then writes manifest.json.
RunReport run_experiment(const ExperimentConfig& cfg);

// Accepts either an experiment config or a manifest.json from a previous
// run, which replays the resolved config.
ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides = {});

struct CompareRow {
    std::string run;
    uint64_t seed = 0;
    double value = 0;
    double baseline = 0;
    double ratio = 0;
    double improvement_pct = 0;  // positive: lower than the baseline
};

struct Comparison {
    std::string metric;
    std::string baseline;
    std::vector<CompareRow> rows;   // per seed
    std::vector<CompareRow> means;  // across-seed mean per run, seed = 0

    std::string csv() const;
    std::string table() const;
};

// Each directory is a run output (seed-* subdirectories) or a single seed
// directory. Seeds are paired by number.
Comparison compare_runs(const std::vector<std::filesystem::path>& dirs, const std::string& metric,
                        const std::filesystem::path& baseline);

// Looks up a scalar in a summary.json: "fct_mean" resolves to fct.mean.
double summary_metric(const nlohmann::json& summary, const std::string& metric);

}  // namespace eunomia::exp
