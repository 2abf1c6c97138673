// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "raysep/bench.hpp"
#include "raysep/baselines.hpp"
#include "raysep/cli.hpp"
#include "raysep/io.hpp"
#include "raysep/solvers.hpp"
#include "raysep/spectral.hpp"
#include "raysep/subspace.hpp"

using namespace raysep;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const ArrayGeometry kArray{11, 2.5};
const AngleGrid kSector = AngleGrid::uniform(-11.0, 11.0, 0.2);

// Five lowest-order eigenrays, 100 m water, 2 km range, source 20 m, top sensor 50 m.
ExperimentPlan multipath_plan() {
    ExperimentPlan plan;
    plan.geometry = kArray;
    plan.scenario = WaveguideScenario::for_array(100.0, 2000.0, 20.0, 50.0, kArray, 5);
    plan.grid = kSector;
    plan.band = Band{750.0, 2250.0};
    plan.bins = 32;
    plan.focus_hz = 1500.0;
    plan.snapshots = 150;
    plan.coherence = Coherence::coherent();
    plan.trials = 20;
    plan.seed = 20240601;
    plan.estimator.delta_factor = 1.0;
    return plan;
}

Outcome lift_oracle() {
    const auto t0 = Clock::now();
    const AngleGrid grid = AngleGrid::default_grid();
    const auto dict = build_dictionary(grid, 1500.0, kArray);
    const CMatrix lifted = lift_dictionary(dict);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(grid.size()) - 1);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        const int q = pick(rng);
        const CVector g = dict.column(static_cast<std::size_t>(q));
        const CMatrix outer = g * g.adjoint();
        for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) worst = std::max(worst, std::abs(lifted(i * 11 + j, q) - outer(i, j)));
    }
    const double t = seconds_since(t0);
    return {worst < 1e-14 && t < 1.0, fmt("max|d|=%.3g over 100 columns, %.3f s", worst, t)};
}

Outcome eigen_reconstruction() {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> rank(1, 11);
    std::uniform_int_distribution<int> dim(1, 10);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        const CMatrix r = oracle::random_hermitian_psd(11, rank(rng), rng);
        const auto dec = decompose(r, dim(rng));
        worst = std::max(worst, (dec.signal_part + dec.noise_part - r).norm() / r.norm());
    }
    double eig_worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        const CMatrix r = oracle::random_hermitian_psd(3, 3, rng);
        const auto expect = oracle::cubic_eigenvalues(r);
        const auto dec = decompose(r, 1);
        for (int k = 0; k < 3; ++k) eig_worst = std::max(eig_worst, std::abs(dec.eigenvalues[k] - expect[k]));
    }
    return {worst < 1e-10 && eig_worst < 1e-10,
            fmt("reconstruction %.3g (M=11, 100 cases), eigenvalues vs cubic roots %.3g (M=3)", worst,
                eig_worst)};
}

Outcome exact_recovery() {
    const auto t0 = Clock::now();
    const auto dict = build_dictionary(kSector, 1500.0, kArray);
    const std::size_t q = kSector.nearest_index(2.0);
    const CVector g = dict.column(q);

    auto spike = [&](const Eigen::VectorXd& v, double& ratio) {
        Eigen::Index arg = 0;
        const double peak = v.maxCoeff(&arg);
        ratio = (v.cwiseAbs().sum() - std::abs(v[arg])) / peak;
        return static_cast<std::size_t>(arg) == q && ratio < 1e-6;
    };

    CMatrix y(11, 10);
    for (int l = 0; l < 10; ++l) y.col(l) = g;
    const auto dec = decompose(estimate_spectral_matrix(SnapshotMatrix{y, 1500.0, 0.0, 1.0}), 1);
    SolverConfig lifted_cfg;
    lifted_cfg.epsilon = choose_delta(dec);
    double r_scs = 0.0;
    double r_bp = 0.0;
    double r_rw = 0.0;
    const bool scs = spike(subspace_cs(make_lifted_system(dec, dict), lifted_cfg).values, r_scs);
    const bool bp = spike(bpdn(dict, g, SolverConfig{}).values, r_bp);
    const bool rw = spike(reweighted_cs(dict, y, SolverConfig{}).values, r_rw);
    const double t = seconds_since(t0);
    return {scs && bp && rw && t < 10.0,
            fmt("off-support/peak: subspace_cs %.2g, bpdn %.2g, reweighted_cs %.2g; %.2f s", r_scs, r_bp,
                r_rw, t)};
}

Outcome small_oracle() {
    const ArrayGeometry geom(8, 0.5);
    const AngleGrid grid = AngleGrid::uniform(-60.0, 60.0, 6.0);
    const auto dict = build_dictionary(grid, 1500.0, geom);
    const CMatrix lifted = lift_dictionary(dict);
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> pick(0, 20);
    std::uniform_real_distribution<double> mag(0.5, 2.0);
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    int agree_scs = 0;
    int agree_bp = 0;
    for (int c = 0; c < 50; ++c) {
        const int P = 1 + c % 2;
        std::vector<int> support;
        while (static_cast<int>(support.size()) < P) {
            const int q = pick(rng);
            if (std::find(support.begin(), support.end(), q) == support.end()) support.push_back(q);
        }
        Eigen::VectorXd powers = Eigen::VectorXd::Zero(21);
        CVector amps = CVector::Zero(21);
        for (int q : support) {
            powers[q] = mag(rng);
            amps[q] = std::polar(mag(rng), phase(rng));
        }

        LiftedSystem sys{lifted * powers.cast<cdouble>(), lifted, grid, 8, dict.matrix()};
        SolverConfig cfg;
        cfg.epsilon = 1e-9 * sys.r_v.norm();
        const auto fit = oracle::exhaustive_support(lifted, sys.r_v, 2, true);
        if (fit && oracle::matches(subspace_cs(sys, cfg).coefficients.col(0), *fit, 1e-5)) ++agree_scs;

        const CVector y = dict.matrix() * amps;
        const auto cfit = oracle::exhaustive_support(dict.matrix(), y, 2, false);
        if (cfit && oracle::matches(bpdn(dict, y, SolverConfig{}).coefficients.col(0), *cfit, 1e-5)) ++agree_bp;
    }
    return {agree_scs >= 49 && agree_bp >= 49,
            fmt("support and values match: subspace_cs %d/50, bpdn %d/50", agree_scs, agree_bp)};
}

// Trials in which fewer than all paths were found within `tol` of truth.
int partial_detections(const RmseReport& r, Algorithm a, std::size_t s, double tol) {
    return r.trials - r.full_detections(a, s, tol);
}

Outcome coherent_separation() {
    const auto t0 = Clock::now();
    auto plan = multipath_plan();
    plan.snr_db = {0.0};
    plan.algorithms = {Algorithm::subspace_cs, Algorithm::music};
    const auto report = run_experiment(plan, resolve_threads(std::nullopt));
    const int scs_full = report.full_detections(Algorithm::subspace_cs, 0, 0.6);
    const int music_missed = partial_detections(report, Algorithm::music, 0, 0.6);
    int music_short = 0;
    for (const auto& rec : report.records)
        if (rec.algorithm == Algorithm::music && rec.under_detected) ++music_short;
    const double t = seconds_since(t0);
    return {scs_full >= 16 && music_missed >= 16 && t < 600.0,
            fmt("subspace_cs all 5 within 0.6 deg in %d/20; MUSIC fewer than 5 in %d/20 "
                "(fewer than 5 maxima at all in %d/20); %.1f s",
                scs_full, music_missed, music_short, t)};
}

Outcome ranking() {
    auto plan = multipath_plan();
    plan.snr_db = {-5.0, 0.0, 5.0};
    plan.algorithms = {Algorithm::subspace_cs, Algorithm::reweighted_cs, Algorithm::music};
    const auto report = run_experiment(plan, resolve_threads(std::nullopt));
    int compared = 0;
    int violations = 0;
    std::string worst;
    double worst_ratio = 0.0;
    for (std::size_t s = 0; s < plan.snr_db.size(); ++s)
        for (int p = 0; p < 5; ++p) {
            const auto& scs = report.stat(Algorithm::subspace_cs, s, p);
            const auto& rw = report.stat(Algorithm::reweighted_cs, s, p);
            const auto& mu = report.stat(Algorithm::music, s, p);
            if (!scs.rmse_deg || !rw.rmse_deg || !mu.rmse_deg) continue;
            ++compared;
            for (const auto* other : {&rw, &mu}) {
                const double ratio = *scs.rmse_deg / std::max(*other->rmse_deg, 1e-300);
                if (ratio > worst_ratio) {
                    worst_ratio = ratio;
                    worst = fmt("%s at %g dB path %d", to_string(other->algorithm).c_str(), plan.snr_db[s], p);
                }
                if (*scs.rmse_deg > 1.1 * *other->rmse_deg) ++violations;
            }
        }
    return {compared > 0 && violations == 0,
            fmt("%d (snr, path) points compared, %d violations; largest subspace_cs/other ratio %.3f (%s)",
                compared, violations, worst_ratio, worst.c_str())};
}

Outcome rank_restoration() {
    const RaypathSet pair({{-5.0, 1.0, 0.0}, {5.0, 1.0, 4e-3}});
    int smoothed_ok = 0;
    int unsmoothed_ok = 0;
    for (int k = 0; k < 20; ++k) {
        const auto bins = synthesize_broadband(pair, {1350.0, 1650.0}, 32, 150,
                                               {10.0, trial_seed(7, 0, k)}, kArray);
        if (signal_rank(focus_and_smooth(bins, 1500.0, kSector, kArray)) >= 2) ++smoothed_ok;
        if (signal_rank(estimate_spectral_matrix(bins[focus_bin(bins, 1500.0)])) == 1) ++unsmoothed_ok;
    }
    return {smoothed_ok >= 18 && unsmoothed_ok == 20,
            fmt("smoothed rank >= 2 in %d/20, unsmoothed rank 1 in %d/20", smoothed_ok, unsmoothed_ok)};
}

Outcome rmse_arithmetic() {
    const double hand = *rmse_of({3.0, 4.0});
    const double d1 = std::abs(hand - std::sqrt(12.5));
    const double d2 = std::abs(*rmse_of({1.0}) - 1.0);
    const auto matched = rmse({{10.0, 23.0}, {10.0, 16.0}}, {10.0, 20.0}, 5.0);
    const double d3 = std::abs(*matched[1].rmse_deg - std::sqrt(12.5));
    const double d4 = *matched[0].rmse_deg;
    const bool missing = !rmse_of({}).has_value();
    return {d1 < 1e-12 && d2 < 1e-12 && d3 < 1e-12 && d4 == 0.0 && missing,
            fmt("rmse(3, 4) = %.4f, |d| = %.2g; unit and zero cases exact", hand, std::max({d1, d2, d3}))};
}

Outcome bench_determinism() {
    const fs::path dir = fs::temp_directory_path() / "raysep_acceptance_bench";
    fs::remove_all(dir);
    nlohmann::json cfg = {
        {"array", {{"sensors", 11}, {"spacing_m", 2.5}}},
        {"scenario", {{"source_depth_m", 20}, {"reference_depth_m", 50}, {"num_paths", 5}}},
        {"grid", {{"first_deg", -11}, {"last_deg", 11}, {"step_deg", 0.2}}},
        {"band", {{"low_hz", 750}, {"high_hz", 2250}, {"bins", 32}, {"focus_hz", 1500}}},
        {"snapshots", 150},
        {"seed", 99},
        {"algorithms", {"subspace_cs", "music", "cbf", "bpdn"}},
        {"solver", {{"delta_factor", 1.0}}},
        {"bench", {{"snr_db", {-5, 5}}, {"trials", 3}}}};
    write_text_file(dir / "plan.json", cfg.dump(2));
    std::vector<std::string> csv;
    std::ostringstream err;
    for (int threads : {1, 1, 2}) {
        const fs::path out = dir / ("run" + std::to_string(csv.size()));
        CliOptions opts;
        opts.config = dir / "plan.json";
        opts.out = out;
        opts.threads = threads;
        if (guarded([&] { cmd_bench(opts); }, err) != kExitOk) {
            fs::remove_all(dir);
            return {false, "cmd_bench failed: " + err.str()};
        }
        csv.push_back(read_text_file(out / "report.csv"));
    }
    fs::remove_all(dir);
    const bool same = csv[0] == csv[1] && csv[1] == csv[2];
    return {same, fmt("3 runs (1, 1, 2 threads), %zu bytes each, identical: %s", csv[0].size(),
                      same ? "yes" : "no")};
}

Outcome snr_calibration() {
    const RaypathSet rays({{0.86, 1.0, 0.0}, {-2.0, -1.0, 6.7e-4}, {4.1, 1.0, 1.3e-3}});
    constexpr double kOff = std::numeric_limits<double>::infinity();
    double worst = 0.0;
    auto check = [&](const std::vector<SnapshotMatrix>& noisy, const std::vector<SnapshotMatrix>& clean,
                     double snr) {
        double ps = 0.0;
        double pn = 0.0;
        for (std::size_t b = 0; b < noisy.size(); ++b) {
            ps += clean[b].data.squaredNorm();
            pn += (noisy[b].data - clean[b].data).squaredNorm();
        }
        worst = std::max(worst, std::abs(10.0 * std::log10(ps / pn) - snr));
    };
    for (double snr : {-10.0, 0.0, 10.0}) {
        // signal draws precede noise draws, so the same seed without noise gives the clean part
        for (auto coherence : {Coherence::coherent(), Coherence::incoherent()}) {
            check({synthesize_snapshots(rays, 1500.0, 10000, {snr, 31}, kArray, coherence)},
                  {synthesize_snapshots(rays, 1500.0, 10000, {kOff, 31}, kArray, coherence)}, snr);
        }
        const Band band{750.0, 2250.0};
        check(synthesize_broadband(rays, band, 4, 10000, {snr, 32}, kArray),
              synthesize_broadband(rays, band, 4, 10000, {kOff, 32}, kArray), snr);
    }
    return {worst <= 0.2, fmt("largest |empirical - nominal| = %.3f dB at L = 1e4", worst)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "lift-oracle equivalence", lift_oracle},
        {2, "eigen-reconstruction", eigen_reconstruction},
        {3, "noise-free exact recovery", exact_recovery},
        {4, "small-instance solver oracle", small_oracle},
        {5, "coherent separation", coherent_separation},
        {6, "RMSE ranking", ranking},
        {7, "frequency-smoothing rank restoration", rank_restoration},
        {8, "RMSE arithmetic", rmse_arithmetic},
        {9, "bench determinism", bench_determinism},
        {10, "SNR calibration", snr_calibration},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
