#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hwq/dist.hpp"

namespace hwq {

// One experiment as declared in a JSON config file. Optional blocks stay
// unset when absent; validation happens per experiment kind in run().
struct ExperimentConfig {
    int schema_version = 1;
    std::string experiment;

    std::optional<DistSpec> arrival;
    std::optional<DistSpec> service;
    std::optional<HWScaling> scaling;

    std::vector<double> thresholds;
    double horizon = 0.0;
    double kappa = 5.0;
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;
    int workers = 1;

    std::string init = "all_busy_residual"; // simulate/sandwich initialization
    double sample_t0 = -1.0;  // < 0 means the default burn-in 20 n / mu
    double sample_stride = 0.0;

    double grid_spacing = 0.05;
    double grid_horizon = 0.0; // <= 0 means derive from the truncation rule
    std::uint64_t reps_for_v = 0;

    double fit_x_lo = 2.0;
    double fit_x_hi = 4.0;

    std::uint64_t lindley_steps = 0;

    int moment_r = 4;
    std::vector<double> moment_grid;
    std::vector<std::pair<int, double>> moment_nt;

    bool record_events = false;
    bool self_test_swap = false; // sandwich negative control

    std::string out_dir = ".";

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

struct RunRecord {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string code_version;
    double wall_seconds = 0.0;
    std::map<std::string, std::string> digests; // output file -> FNV-1a hex
    int flagged = 0;                            // self-test violation count
    std::string record_path;
};

extern const char* kCodeVersion;

// Executes the configured experiment, writes its CSVs plus a JSON run
// record into out_dir, and deletes partial outputs on failure.
RunRecord run(const ExperimentConfig& cfg);

// FNV-1a 64-bit digest of a file's bytes, hex-encoded.
std::string file_digest(const std::string& path);

} // namespace hwq
