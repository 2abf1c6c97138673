// SPDX-License-Identifier: Apache-2.0
//
// End-to-end estimators from multi-bin snapshot data to a spectrum over the grid.
//
// subspace_cs focuses and smooths every bin to the focus frequency. The other
// algorithms see a single bin only: the one closest to the focus frequency
// (lower one on ties), with the dictionary built at that bin's frequency.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "raysep/array_model.hpp"
#include "raysep/simulator.hpp"
#include "raysep/solvers.hpp"

namespace raysep {

enum class Algorithm { subspace_cs, reweighted_cs, bpdn, music, cbf };

std::string to_string(Algorithm a);
/// Throws ValidationError on an unknown name.
Algorithm parse_algorithm(const std::string& name);

struct EstimatorSettings {
    double delta_factor = 1.5;        // subspace_cs: delta = factor * noise eigenvalue norm
    // When delta is below the smallest residual any nonnegative fit reaches (coherent
    // cross terms the lifted dictionary cannot express), refit with
    // delta = (1 + margin) * that residual. Unset: report the infeasibility.
    std::optional<double> infeasible_margin = 0.1;
    CrossTermMode cross_terms = CrossTermMode::folded;
    double cross_term_factor = 0.25;  // joint mode kappa
    double epsilon_factor = 1.0;      // reweighted_cs / bpdn: eps = factor * expected noise norm
    std::optional<double> reweight_xi;
    int max_reweight_iters = 10;
    double inner_tol = 1e-8;
    int inner_max_iters = 20000;

    void validate() const;
};

struct Estimate {
    Algorithm algorithm = Algorithm::subspace_cs;
    AngleGrid grid = AngleGrid::default_grid();
    Eigen::VectorXd values;
    std::optional<SolveDiagnostics> diagnostics;  // sparse solvers only
};

/// Index of the bin used by the single-bin algorithms.
std::size_t focus_bin(const std::vector<SnapshotMatrix>& bins, double focus_hz);

/// Mean of the M - P smallest eigenvalues of the sample covariance.
double noise_floor_estimate(const SnapshotMatrix& bin, int num_paths);

Estimate run_algorithm(Algorithm algorithm, const std::vector<SnapshotMatrix>& bins,
                       double focus_hz, int num_paths, const AngleGrid& grid,
                       const ArrayGeometry& geom, const EstimatorSettings& settings);

}  // namespace raysep
