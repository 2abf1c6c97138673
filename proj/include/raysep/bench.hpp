// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo harness: peak picking, peak-to-truth association, per-path RMSE.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raysep/array_model.hpp"
#include "raysep/estimate.hpp"
#include "raysep/simulator.hpp"

namespace raysep {

struct PeakList {
    std::vector<double> angles;  // ascending
    bool under_detected = false;
};

/// The P largest strict interior local maxima, returned in angle order. Equal
/// heights rank the lower angle first.
PeakList detect_peaks(const AngleGrid& grid, const Eigen::VectorXd& values, int num_peaks);

struct Matching {
    std::vector<std::optional<double>> estimate;  // per truth path, the matched peak angle
    int false_alarms = 0;
};

/// Greedy nearest-angle association: repeatedly pairs the closest remaining
/// (peak, truth) pair while the gap is within `window_deg`.
Matching match_peaks(const std::vector<double>& peaks, const std::vector<double>& truth,
                     double window_deg = 3.0);

/// sqrt(mean(e^2)); nullopt when empty.
std::optional<double> rmse_of(const std::vector<double>& errors_deg);

struct PathRmse {
    std::optional<double> rmse_deg;
    int trials_used = 0;  // trials in which the path was matched
};

/// Per-path RMSE over K trials of detected angles, after matching each trial.
std::vector<PathRmse> rmse(const std::vector<std::vector<double>>& estimates,
                           const std::vector<double>& truth, double window_deg = 3.0);

struct ExperimentPlan {
    ArrayGeometry geometry{11, 2.5};
    WaveguideScenario scenario;
    std::optional<RaypathSet> paths;  // explicit paths override the scenario
    AngleGrid grid = AngleGrid::default_grid();
    Band band{1000.0, 2000.0};
    int bins = 32;
    std::optional<double> focus_hz;  // default: band center
    int snapshots = 150;
    Coherence coherence = Coherence::coherent();
    std::vector<double> snr_db;      // +inf means noise-free
    int trials = 20;
    std::vector<Algorithm> algorithms{Algorithm::subspace_cs, Algorithm::music,
                                      Algorithm::reweighted_cs};
    std::uint64_t seed = 1;
    EstimatorSettings estimator;
    double match_window_deg = 3.0;

    void validate() const;
    double focus() const { return focus_hz ? *focus_hz : band.center(); }
    RaypathSet truth() const;
};

/// Seed of trial `trial` at SNR index `snr_index`; independent of execution order.
std::uint64_t trial_seed(std::uint64_t base, std::size_t snr_index, int trial);

struct TrialRecord {
    Algorithm algorithm = Algorithm::subspace_cs;
    std::size_t snr_index = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";  // ok | infeasible | numerical
    std::vector<double> peaks;
    bool under_detected = false;
    std::vector<std::optional<double>> matched;
    int false_alarms = 0;
};

struct PathStat {
    Algorithm algorithm = Algorithm::subspace_cs;
    double snr_db = 0.0;
    int path_index = 0;
    std::optional<double> rmse_deg;
    double detection_rate = 0.0;  // matched trials / all trials
    int trials_used = 0;
};

struct RmseReport {
    std::vector<double> truth_deg;
    std::vector<double> snr_db;
    std::vector<Algorithm> algorithms;
    int trials = 0;
    std::vector<PathStat> stats;        // algorithm-major, then SNR, then path
    std::vector<TrialRecord> records;   // algorithm-major, then SNR, then trial

    const PathStat& stat(Algorithm a, std::size_t snr_index, int path) const;
    /// Trials of (a, snr) with every path matched within `tol_deg` of its truth.
    int full_detections(Algorithm a, std::size_t snr_index, double tol_deg) const;
};

/// Runs every (SNR, trial) cell; trials run on `threads` workers. The report is
/// identical for any thread count.
RmseReport run_experiment(const ExperimentPlan& plan, int threads = 1);

/// CSV columns: algorithm, snr_db, path_index, rmse_deg, detection_rate, trials_used.
void write_report_csv(std::ostream& os, const RmseReport& report);
nlohmann::json report_to_json(const RmseReport& report);

}  // namespace raysep
