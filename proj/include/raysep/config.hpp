// SPDX-License-Identifier: Apache-2.0
//
// JSON run configuration. Every object is checked for unknown keys, and errors
// name the offending field as a JSON path (e.g. "solver.delta_factor").
// The accepted layout is documented in configs/schema.json.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raysep/bench.hpp"
#include "raysep/estimate.hpp"
#include "raysep/simulator.hpp"

namespace raysep {

struct BandSpec {
    Band band{1000.0, 2000.0};
    int bins = 32;
    std::optional<double> focus_hz;
    bool narrowband = false;  // a single bin at `frequency_hz`

    double focus() const { return focus_hz ? *focus_hz : band.center(); }
};

struct RunConfig {
    ArrayGeometry geometry{11, 2.5};
    std::optional<WaveguideScenario> scenario;
    std::optional<RaypathSet> paths;
    AngleGrid grid = AngleGrid::default_grid();
    BandSpec band;
    int snapshots = 150;
    double snr_db = 0.0;  // +inf: noise-free
    Coherence coherence = Coherence::coherent();
    std::uint64_t seed = 1;
    std::optional<int> num_paths;  // estimator P; defaults to the truth path count
    std::vector<Algorithm> algorithms;
    EstimatorSettings estimator;
    std::vector<double> bench_snr_db;
    int bench_trials = 20;
    double match_window_deg = 3.0;
    std::filesystem::path output_dir = "out";
    std::string canonical;  // normalized JSON text the provenance hash is taken over

    RaypathSet truth() const;
    int estimator_paths() const;
    ExperimentPlan plan() const;
};

/// Throws ValidationError (message starts with the field path) on any schema violation.
RunConfig parse_config(const nlohmann::json& j);
/// Throws IoError when unreadable and ValidationError on malformed JSON.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace raysep
