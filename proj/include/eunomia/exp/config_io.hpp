// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eunomia/sim/config.hpp"

namespace eunomia::exp {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    sim::SimConfig sim;
    std::vector<uint64_t> seeds{1};
    std::string output_dir = "runs/out";
    std::string preset;                 // empty: a plain run
    std::vector<uint64_t> buckets;      // empty: powers of two
    uint32_t workers = 0;               // 0: one per hardware thread
};

// Every key with its default value; the published schema.
nlohmann::json default_config_json();
nlohmann::json to_json(const ExperimentConfig& cfg);

// Merges `user` over the defaults, then applies "dotted.key=value"
// overrides. Unknown keys, wrong types and invalid values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& user, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

void apply_override(nlohmann::json& tree, const std::string& assignment);

}  // namespace eunomia::exp
