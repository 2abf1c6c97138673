// SPDX-License-Identifier: Apache-2.0
#include "raysep/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "raysep/baselines.hpp"
#include "raysep/bench.hpp"
#include "raysep/config.hpp"
#include "raysep/error.hpp"
#include "raysep/format.hpp"
#include "raysep/io.hpp"

namespace raysep {

namespace {

struct Prepared {
    RunConfig config;
    Provenance provenance;
    std::filesystem::path out_dir;
};

Prepared prepare(const CliOptions& opts) {
    Prepared p{load_config(opts.config), {}, {}};
    if (opts.seed) p.config.seed = *opts.seed;
    p.provenance.config_hash = config_hash(p.config.canonical);
    p.provenance.seed = p.config.seed;
    p.out_dir = opts.out ? *opts.out : p.config.output_dir;
    return p;
}

}  // namespace

void cmd_simulate(const CliOptions& opts) {
    const auto p = prepare(opts);
    const auto& c = p.config;
    const RaypathSet truth = c.truth();
    const NoiseSpec noise{c.snr_db, c.seed};
    std::vector<SnapshotMatrix> bins;
    if (c.band.narrowband) {
        bins.push_back(synthesize_snapshots(truth, c.band.focus(), c.snapshots, noise, c.geometry,
                                            c.coherence));
    } else {
        bins = synthesize_broadband(truth, c.band.band, c.band.bins, c.snapshots, noise, c.geometry,
                                    c.coherence);
    }
    std::ostringstream snap;
    write_snapshots(snap, bins, p.provenance);
    write_text_file(p.out_dir / "snapshots.csv", snap.str());
    write_text_file(p.out_dir / "truth.json", truth_to_json(truth, p.provenance).dump(2) + "\n");
}

void cmd_estimate(const CliOptions& opts) {
    const auto p = prepare(opts);
    const auto& c = p.config;
    if (c.algorithms.empty()) throw ValidationError("algorithms: required for estimate");
    if (!opts.snapshots) throw ValidationError("--snapshots: required for estimate");
    std::istringstream in(read_text_file(*opts.snapshots));
    const auto bins = read_snapshots(in);
    if (bins.front().num_sensors() != c.geometry.num_sensors())
        throw ValidationError("snapshots: " + std::to_string(bins.front().num_sensors()) +
                              " rows but array.sensors is " + std::to_string(c.geometry.num_sensors()));
    double focus = 0.0;
    if (c.band.focus_hz) {
        focus = *c.band.focus_hz;
    } else {
        double lo = bins.front().frequency;
        double hi = lo;
        for (const auto& b : bins) {
            lo = std::min(lo, b.frequency);
            hi = std::max(hi, b.frequency);
        }
        focus = 0.5 * (lo + hi);
    }
    const int P = c.estimator_paths();

    nlohmann::ordered_json peaks;
    peaks["provenance"] = p.provenance.to_json();
    nlohmann::ordered_json diag;
    diag["provenance"] = p.provenance.to_json();
    for (auto alg : c.algorithms) {
        auto est = run_algorithm(alg, bins, focus, P, c.grid, c.geometry, c.estimator);
        if (alg == Algorithm::music) est.values /= std::max(est.values.maxCoeff(), 1e-300);
        std::ostringstream csv;
        write_spectrum_csv(csv, c.grid, est.values, to_string(alg), p.provenance);
        write_text_file(p.out_dir / ("spectrum_" + to_string(alg) + ".csv"), csv.str());
        const auto found = detect_peaks(c.grid, est.values, P);
        peaks[to_string(alg)] = found.angles;
        if (est.diagnostics) diag[to_string(alg)] = to_json(*est.diagnostics);
    }
    write_text_file(p.out_dir / "peaks.json", peaks.dump(2) + "\n");
    write_text_file(p.out_dir / "diagnostics.json", diag.dump(2) + "\n");
}

void cmd_bench(const CliOptions& opts) {
    const auto p = prepare(opts);
    const auto& c = p.config;
    if (c.bench_snr_db.empty()) throw ValidationError("bench: required section is missing");
    if (c.algorithms.empty()) throw ValidationError("algorithms: required for bench");
    const auto report = run_experiment(c.plan(), resolve_threads(opts.threads));

    std::ostringstream csv;
    csv << p.provenance.header_line() << '\n';
    csv << "# trials=" << report.trials << " match_window_deg=" << c.match_window_deg << '\n';
    csv << "# truth_deg=";
    for (std::size_t i = 0; i < report.truth_deg.size(); ++i)
        csv << (i ? ";" : "") << format_double(report.truth_deg[i]);
    csv << '\n';
    write_report_csv(csv, report);
    write_text_file(p.out_dir / "report.csv", csv.str());

    nlohmann::ordered_json j;
    j["provenance"] = p.provenance.to_json();
    j["report"] = report_to_json(report);
    write_text_file(p.out_dir / "report.json", j.dump(2) + "\n");
}

int resolve_threads(std::optional<int> requested) {
    if (requested) {
        if (*requested < 1) throw ValidationError("--threads: must be at least 1");
        return *requested;
    }
    if (const char* env = std::getenv("RAYSEP_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096)
            throw ValidationError("RAYSEP_THREADS: expected a positive integer");
        return static_cast<int>(v);
    }
    return 1;
}

int guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const InfeasibleError& e) {
        err << "error: " << e.what() << " (smallest residual " << e.min_residual() << ")\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Raypath separation: simulate array data, estimate arrival angles, run Monte-Carlo benches"};
    app.require_subcommand(1);
    CliOptions opts;
    std::string out;
    std::string snapshots;
    std::uint64_t seed = 0;
    int threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "JSON run configuration")->required();
        sub->add_option("--out", out, "output directory (overrides output.directory)");
        sub->add_option("--seed", seed, "random seed (overrides the config seed)");
        sub->add_option("--threads", threads, "worker threads (default: RAYSEP_THREADS or 1)");
    };
    auto* simulate = app.add_subcommand("simulate", "synthesize snapshots and ground truth");
    auto* estimate = app.add_subcommand("estimate", "estimate spectra and peaks from snapshots");
    auto* bench = app.add_subcommand("bench", "Monte-Carlo RMSE sweep");
    for (auto* sub : {simulate, estimate, bench}) add_common(sub);
    estimate->add_option("--snapshots", snapshots, "snapshot file written by simulate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }
    auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
    CLI::App* chosen = simulate->parsed() ? simulate : estimate->parsed() ? estimate : bench;
    if (given(chosen, "--out")) opts.out = out;
    if (given(chosen, "--seed")) opts.seed = seed;
    if (given(chosen, "--threads")) opts.threads = threads;
    if (chosen == estimate) opts.snapshots = snapshots;

    return guarded(
        [&] {
            if (chosen == simulate) cmd_simulate(opts);
            else if (chosen == estimate) cmd_estimate(opts);
            else cmd_bench(opts);
        },
        std::cerr);
}

}  // namespace raysep
