// SPDX-License-Identifier: Apache-2.0
#include "raysep/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

#include "raysep/error.hpp"
#include "raysep/format.hpp"

namespace raysep {

PeakList detect_peaks(const AngleGrid& grid, const Eigen::VectorXd& values, int num_peaks) {
    if (num_peaks < 1) throw ValidationError("peak count must be at least 1");
    if (values.size() != static_cast<Eigen::Index>(grid.size()))
        throw ValidationError("spectrum length does not match the grid");
    std::vector<Eigen::Index> maxima;
    for (Eigen::Index q = 1; q + 1 < values.size(); ++q)
        if (values[q] > values[q - 1] && values[q] > values[q + 1]) maxima.push_back(q);
    std::stable_sort(maxima.begin(), maxima.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values[a] > values[b]; });
    PeakList out;
    out.under_detected = maxima.size() < static_cast<std::size_t>(num_peaks);
    if (!out.under_detected) maxima.resize(static_cast<std::size_t>(num_peaks));
    for (auto q : maxima) out.angles.push_back(grid[static_cast<std::size_t>(q)]);
    std::sort(out.angles.begin(), out.angles.end());
    return out;
}

Matching match_peaks(const std::vector<double>& peaks, const std::vector<double>& truth,
                     double window_deg) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < peaks.size(); ++i)
        for (std::size_t j = 0; j < truth.size(); ++j) {
            const double gap = std::abs(peaks[i] - truth[j]);
            if (gap <= window_deg) pairs.emplace_back(gap, i, j);
        }
    std::sort(pairs.begin(), pairs.end());
    Matching out;
    out.estimate.assign(truth.size(), std::nullopt);
    std::vector<char> used(peaks.size(), 0);
    int matched = 0;
    for (const auto& [gap, i, j] : pairs) {
        if (used[i] || out.estimate[j]) continue;
        used[i] = 1;
        out.estimate[j] = peaks[i];
        ++matched;
    }
    out.false_alarms = static_cast<int>(peaks.size()) - matched;
    return out;
}

std::optional<double> rmse_of(const std::vector<double>& errors_deg) {
    if (errors_deg.empty()) return std::nullopt;
    double sum = 0.0;
    for (double e : errors_deg) sum += e * e;
    return std::sqrt(sum / static_cast<double>(errors_deg.size()));
}

std::vector<PathRmse> rmse(const std::vector<std::vector<double>>& estimates,
                           const std::vector<double>& truth, double window_deg) {
    std::vector<std::vector<double>> errors(truth.size());
    for (const auto& trial : estimates) {
        const auto m = match_peaks(trial, truth, window_deg);
        for (std::size_t p = 0; p < truth.size(); ++p)
            if (m.estimate[p]) errors[p].push_back(*m.estimate[p] - truth[p]);
    }
    std::vector<PathRmse> out;
    for (const auto& e : errors) out.push_back({rmse_of(e), static_cast<int>(e.size())});
    return out;
}

void ExperimentPlan::validate() const {
    if (snr_db.empty()) throw ValidationError("snr list must not be empty");
    for (double s : snr_db)
        if (std::isnan(s) || s == -std::numeric_limits<double>::infinity())
            throw ValidationError("snr values must be numbers or +inf");
    if (trials < 1) throw ValidationError("trials must be at least 1");
    if (algorithms.empty()) throw ValidationError("algorithm list must not be empty");
    if (bins < 1) throw ValidationError("bins must be at least 1");
    if (snapshots < 1) throw ValidationError("snapshots must be at least 1");
    if (!(band.low_hz > 0.0) || !(band.high_hz > band.low_hz))
        throw ValidationError("band must satisfy 0 < low < high");
    if (focus_hz && !(*focus_hz >= band.low_hz && *focus_hz <= band.high_hz))
        throw ValidationError("focus frequency must lie inside the band");
    if (!(coherence.correlation >= 0.0 && coherence.correlation <= 1.0))
        throw ValidationError("coherence must lie in [0, 1]");
    if (!(match_window_deg > 0.0)) throw ValidationError("match window must be positive");
    estimator.validate();
    if (!paths) scenario.validate();
    truth().validate_for(geometry);
    if (grid.size() <= static_cast<std::size_t>(geometry.num_sensors()))
        throw ValidationError("grid must have more points than sensors");
}

RaypathSet ExperimentPlan::truth() const { return paths ? *paths : eigenray_angles(scenario); }

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, std::size_t snr_index, int trial) {
    return splitmix(splitmix(splitmix(base) ^ snr_index) ^ static_cast<std::uint64_t>(trial));
}

const PathStat& RmseReport::stat(Algorithm a, std::size_t snr_index, int path) const {
    const auto it = std::find(algorithms.begin(), algorithms.end(), a);
    if (it == algorithms.end() || snr_index >= snr_db.size() || path < 0 ||
        static_cast<std::size_t>(path) >= truth_deg.size())
        throw ValidationError("no statistic for the requested cell");
    const auto ai = static_cast<std::size_t>(it - algorithms.begin());
    return stats.at((ai * snr_db.size() + snr_index) * truth_deg.size() + static_cast<std::size_t>(path));
}

int RmseReport::full_detections(Algorithm a, std::size_t snr_index, double tol_deg) const {
    int count = 0;
    for (const auto& r : records) {
        if (r.algorithm != a || r.snr_index != snr_index || r.status != "ok") continue;
        bool all = true;
        for (std::size_t p = 0; p < truth_deg.size(); ++p)
            all = all && r.matched[p] && std::abs(*r.matched[p] - truth_deg[p]) <= tol_deg + 1e-9;
        count += all;
    }
    return count;
}

RmseReport run_experiment(const ExperimentPlan& plan, int threads) {
    plan.validate();
    if (threads < 1) throw ValidationError("thread count must be at least 1");
    const RaypathSet truth = plan.truth();
    const int P = static_cast<int>(truth.paths().size());
    const auto A = plan.algorithms.size();
    const auto S = plan.snr_db.size();
    const auto K = static_cast<std::size_t>(plan.trials);

    RmseReport report;
    report.truth_deg = truth.angles();
    report.snr_db = plan.snr_db;
    report.algorithms = plan.algorithms;
    report.trials = plan.trials;
    report.records.resize(A * S * K);

    auto run_cell = [&](std::size_t s, std::size_t k) {
        const auto seed = trial_seed(plan.seed, s, static_cast<int>(k));
        const auto bins = synthesize_broadband(truth, plan.band, plan.bins, plan.snapshots,
                                               NoiseSpec{plan.snr_db[s], seed}, plan.geometry,
                                               plan.coherence);
        for (std::size_t a = 0; a < A; ++a) {
            TrialRecord rec;
            rec.algorithm = plan.algorithms[a];
            rec.snr_index = s;
            rec.trial = static_cast<int>(k);
            rec.seed = seed;
            try {
                const auto est = run_algorithm(rec.algorithm, bins, plan.focus(), P, plan.grid,
                                               plan.geometry, plan.estimator);
                const auto peaks = detect_peaks(plan.grid, est.values, P);
                rec.peaks = peaks.angles;
                rec.under_detected = peaks.under_detected;
            } catch (const InfeasibleError&) {
                rec.status = "infeasible";
            } catch (const NumericalError&) {
                rec.status = "numerical";
            }
            const auto m = match_peaks(rec.peaks, report.truth_deg, plan.match_window_deg);
            rec.matched = m.estimate;
            rec.false_alarms = m.false_alarms;
            report.records[(a * S + s) * K + k] = std::move(rec);
        }
    };

    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t job = next++; job < S * K; job = next++) {
            try {
                run_cell(job / K, job % K);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = S * K;
            }
        }
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(threads), S * K);
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t s = 0; s < S; ++s)
            for (int p = 0; p < P; ++p) {
                std::vector<double> errors;
                for (std::size_t k = 0; k < K; ++k) {
                    const auto& rec = report.records[(a * S + s) * K + k];
                    if (rec.matched[static_cast<std::size_t>(p)])
                        errors.push_back(*rec.matched[static_cast<std::size_t>(p)] -
                                         report.truth_deg[static_cast<std::size_t>(p)]);
                }
                PathStat st;
                st.algorithm = plan.algorithms[a];
                st.snr_db = plan.snr_db[s];
                st.path_index = p;
                st.rmse_deg = rmse_of(errors);
                st.trials_used = static_cast<int>(errors.size());
                st.detection_rate = static_cast<double>(errors.size()) / static_cast<double>(K);
                report.stats.push_back(st);
            }
    return report;
}

void write_report_csv(std::ostream& os, const RmseReport& report) {
    os << "algorithm,snr_db,path_index,rmse_deg,detection_rate,trials_used\n";
    for (const auto& s : report.stats) {
        os << to_string(s.algorithm) << ',' << format_double(s.snr_db) << ',' << s.path_index << ','
           << (s.rmse_deg ? format_double(*s.rmse_deg) : std::string()) << ','
           << format_double(s.detection_rate) << ',' << s.trials_used << '\n';
    }
}

namespace {

nlohmann::json number_or_null(std::optional<double> v) {
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
}

nlohmann::json snr_json(double snr) {
    if (std::isinf(snr)) return "inf";
    return snr;
}

}  // namespace

nlohmann::json report_to_json(const RmseReport& report) {
    nlohmann::json j;
    j["truth_deg"] = report.truth_deg;
    j["snr_db"] = nlohmann::json::array();
    for (double s : report.snr_db) j["snr_db"].push_back(snr_json(s));
    j["trials"] = report.trials;
    j["algorithms"] = nlohmann::json::array();
    for (auto a : report.algorithms) j["algorithms"].push_back(to_string(a));
    j["stats"] = nlohmann::json::array();
    for (const auto& s : report.stats)
        j["stats"].push_back({{"algorithm", to_string(s.algorithm)},
                              {"snr_db", snr_json(s.snr_db)},
                              {"path_index", s.path_index},
                              {"rmse_deg", number_or_null(s.rmse_deg)},
                              {"detection_rate", s.detection_rate},
                              {"trials_used", s.trials_used}});
    j["trials_detail"] = nlohmann::json::array();
    for (const auto& r : report.records) {
        nlohmann::json matched = nlohmann::json::array();
        for (const auto& m : r.matched) matched.push_back(number_or_null(m));
        j["trials_detail"].push_back({{"algorithm", to_string(r.algorithm)},
                                      {"snr_db", snr_json(report.snr_db[r.snr_index])},
                                      {"trial", r.trial},
                                      {"seed", r.seed},
                                      {"status", r.status},
                                      {"peaks_deg", r.peaks},
                                      {"under_detected", r.under_detected},
                                      {"matched_deg", matched},
                                      {"false_alarms", r.false_alarms}});
    }
    return j;
}

}  // namespace raysep
