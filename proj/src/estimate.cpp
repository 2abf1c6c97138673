// SPDX-License-Identifier: Apache-2.0
#include "raysep/estimate.hpp"

#include <cmath>

#include "raysep/baselines.hpp"
#include "raysep/error.hpp"
#include "raysep/spectral.hpp"
#include "raysep/subspace.hpp"

namespace raysep {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::subspace_cs: return "subspace_cs";
        case Algorithm::reweighted_cs: return "reweighted_cs";
        case Algorithm::bpdn: return "bpdn";
        case Algorithm::music: return "music";
        case Algorithm::cbf: return "cbf";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    for (auto a : {Algorithm::subspace_cs, Algorithm::reweighted_cs, Algorithm::bpdn,
                   Algorithm::music, Algorithm::cbf})
        if (to_string(a) == name) return a;
    throw ValidationError("unknown algorithm '" + name + "'");
}

void EstimatorSettings::validate() const {
    if (!(delta_factor >= 0.0) || !std::isfinite(delta_factor))
        throw ValidationError("delta_factor must be finite and nonnegative");
    if (infeasible_margin && !(*infeasible_margin > 0.0))
        throw ValidationError("infeasible_margin must be positive");
    if (!(cross_term_factor >= 0.0)) throw ValidationError("cross_term_factor must be nonnegative");
    if (!(epsilon_factor >= 0.0) || !std::isfinite(epsilon_factor))
        throw ValidationError("epsilon_factor must be finite and nonnegative");
    SolverConfig cfg;
    cfg.reweight_xi = reweight_xi;
    cfg.max_reweight_iters = max_reweight_iters;
    cfg.inner_tol = inner_tol;
    cfg.inner_max_iters = inner_max_iters;
    cfg.validate();
}

std::size_t focus_bin(const std::vector<SnapshotMatrix>& bins, double focus_hz) {
    if (bins.empty()) throw ValidationError("no frequency bins");
    std::size_t best = 0;
    for (std::size_t b = 1; b < bins.size(); ++b) {
        const double d = std::abs(bins[b].frequency - focus_hz);
        const double db = std::abs(bins[best].frequency - focus_hz);
        if (d < db || (d == db && bins[b].frequency < bins[best].frequency)) best = b;
    }
    return best;
}

double noise_floor_estimate(const SnapshotMatrix& bin, int num_paths) {
    const auto dec = decompose(estimate_spectral_matrix(bin), num_paths);
    const auto M = dec.size();
    return std::max(dec.eigenvalues.tail(M - num_paths).mean(), 0.0);
}

namespace {

SolverConfig solver_config(const EstimatorSettings& s, double eps) {
    SolverConfig cfg;
    cfg.epsilon = eps;
    cfg.reweight_xi = s.reweight_xi;
    cfg.max_reweight_iters = s.max_reweight_iters;
    cfg.inner_tol = s.inner_tol;
    cfg.inner_max_iters = s.inner_max_iters;
    return cfg;
}

void check_bins(const std::vector<SnapshotMatrix>& bins, const ArrayGeometry& geom) {
    if (bins.empty()) throw ValidationError("no frequency bins");
    for (const auto& b : bins) {
        if (b.num_sensors() != geom.num_sensors())
            throw ValidationError("snapshot rows do not match the array size");
        if (b.num_snapshots() < 1) throw ValidationError("a bin has no snapshots");
        if (!(b.frequency > 0.0)) throw ValidationError("bin frequency must be positive");
    }
}

}  // namespace

Estimate run_algorithm(Algorithm algorithm, const std::vector<SnapshotMatrix>& bins,
                       double focus_hz, int num_paths, const AngleGrid& grid,
                       const ArrayGeometry& geom, const EstimatorSettings& settings) {
    settings.validate();
    check_bins(bins, geom);
    const int M = geom.num_sensors();
    if (num_paths < 1 || num_paths >= M) throw ValidationError("need 1 <= P < M");

    Estimate out{algorithm, grid, {}, std::nullopt};

    if (algorithm == Algorithm::subspace_cs) {
        const SpectralMatrix r = bins.size() == 1 && bins[0].frequency == focus_hz
                                     ? estimate_spectral_matrix(bins[0])
                                     : focus_and_smooth(bins, focus_hz, grid, geom);
        const auto dec = decompose(r, num_paths);
        const SteeringDictionary dict(grid, focus_hz, geom);
        const auto sys = make_lifted_system(dec, dict);
        auto cfg = solver_config(settings, choose_delta(dec, settings.delta_factor));
        cfg.cross_terms = settings.cross_terms;
        if (cfg.cross_terms == CrossTermMode::joint)
            cfg.cross_term_bound = choose_cross_term_bound(dec, settings.cross_term_factor);
        SparseSpectrum spec{grid, {}, {}, {}, {}};
        try {
            spec = subspace_cs(sys, cfg);
        } catch (const InfeasibleError& e) {
            if (!settings.infeasible_margin) throw;
            cfg.epsilon = (1.0 + *settings.infeasible_margin) * e.min_residual();
            spec = subspace_cs(sys, cfg);
        }
        out.values = std::move(spec.values);
        out.diagnostics = std::move(spec.diagnostics);
        return out;
    }

    const SnapshotMatrix& bin = bins[focus_bin(bins, focus_hz)];
    const double freq = bin.frequency;
    switch (algorithm) {
        case Algorithm::music: {
            out.values = music_spectrum(estimate_spectral_matrix(bin), num_paths, grid, geom, freq).values;
            return out;
        }
        case Algorithm::cbf: {
            out.values = cbf_spectrum(estimate_spectral_matrix(bin), grid, geom, freq).values;
            return out;
        }
        case Algorithm::reweighted_cs: {
            const double sigma2 = noise_floor_estimate(bin, num_paths);
            const double L = bin.num_snapshots();
            const double eps = settings.epsilon_factor * std::sqrt(M * L * sigma2);
            const SteeringDictionary dict(grid, freq, geom);
            auto spec = reweighted_cs(dict, bin.data, solver_config(settings, eps));
            out.values = std::move(spec.values);
            out.diagnostics = std::move(spec.diagnostics);
            return out;
        }
        case Algorithm::bpdn: {
            // Snapshot average: the noise norm shrinks by sqrt(L).
            const double sigma2 = noise_floor_estimate(bin, num_paths);
            const double L = bin.num_snapshots();
            const CVector y = bin.data.rowwise().mean();
            const double eps = settings.epsilon_factor * std::sqrt(M * sigma2 / L);
            const SteeringDictionary dict(grid, freq, geom);
            auto spec = bpdn(dict, y, solver_config(settings, eps));
            out.values = std::move(spec.values);
            out.diagnostics = std::move(spec.diagnostics);
            return out;
        }
        case Algorithm::subspace_cs: break;
    }
    throw ValidationError("unsupported algorithm");
}

}  // namespace raysep
