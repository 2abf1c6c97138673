// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "raysep/bench.hpp"
#include "raysep/error.hpp"

using namespace raysep;

namespace {

const AngleGrid kGrid = AngleGrid::uniform(-2.0, 2.0, 0.5);  // 9 points

ExperimentPlan small_plan() {
    ExperimentPlan plan;
    plan.geometry = ArrayGeometry(11, 2.5);
    plan.paths = RaypathSet({{-3.0, 1.0, 0.0}, {2.0, -1.0, 2e-3}});
    plan.grid = AngleGrid::uniform(-11.0, 11.0, 0.2);
    plan.band = Band{1350.0, 1650.0};
    plan.bins = 8;
    plan.focus_hz = 1500.0;
    plan.snapshots = 30;
    plan.snr_db = {10.0, 20.0};
    plan.trials = 3;
    plan.algorithms = {Algorithm::subspace_cs, Algorithm::music, Algorithm::cbf};
    plan.seed = 77;
    return plan;
}

}  // namespace

TEST_CASE("peak detection") {
    SUBCASE("unit spike") {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(9);
        v[6] = 1.0;
        const auto p = detect_peaks(kGrid, v, 1);
        REQUIRE(p.angles.size() == 1);
        CHECK(p.angles[0] == 1.0);
        CHECK_FALSE(p.under_detected);
    }
    SUBCASE("equal maxima prefer the lower angle") {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(9);
        v[2] = 1.0;
        v[6] = 1.0;
        const auto p = detect_peaks(kGrid, v, 1);
        REQUIRE(p.angles.size() == 1);
        CHECK(p.angles[0] == -1.0);
    }
    SUBCASE("flat spectrum has no peaks") {
        const auto p = detect_peaks(kGrid, Eigen::VectorXd::Ones(9), 2);
        CHECK(p.angles.empty());
        CHECK(p.under_detected);
    }
    SUBCASE("largest maxima returned in angle order") {
        Eigen::VectorXd v(9);
        v << 0, 3, 0, 1, 0, 2, 0, 5, 0;
        const auto p = detect_peaks(kGrid, v, 2);
        REQUIRE(p.angles.size() == 2);
        CHECK(p.angles[0] == -1.5);
        CHECK(p.angles[1] == 1.5);
    }
    SUBCASE("plateaus and edges are not maxima") {
        Eigen::VectorXd v(9);
        v << 9, 0, 2, 2, 0, 1, 0, 0, 9;
        const auto p = detect_peaks(kGrid, v, 3);
        REQUIRE(p.angles.size() == 1);
        CHECK(p.angles[0] == 0.5);
        CHECK(p.under_detected);
    }
    CHECK_THROWS_AS(detect_peaks(kGrid, Eigen::VectorXd::Ones(9), 0), ValidationError);
    CHECK_THROWS_AS(detect_peaks(kGrid, Eigen::VectorXd::Ones(8), 1), ValidationError);
}

TEST_CASE("greedy matching") {
    const auto m = match_peaks({-0.9, 0.2, 10.0}, {0.0, -1.0, 4.0}, 3.0);
    REQUIRE(m.estimate.size() == 3);
    CHECK(*m.estimate[0] == 0.2);
    CHECK(*m.estimate[1] == -0.9);
    CHECK_FALSE(m.estimate[2]);
    CHECK(m.false_alarms == 1);

    // closest pair claims the shared peak first
    const auto shared = match_peaks({1.0}, {0.0, 1.5}, 3.0);
    CHECK_FALSE(shared.estimate[0]);
    CHECK(*shared.estimate[1] == 1.0);

    // the window is inclusive
    CHECK(match_peaks({3.0}, {0.0}, 3.0).estimate[0]);
    CHECK_FALSE(match_peaks({3.0001}, {0.0}, 3.0).estimate[0]);
}

TEST_CASE("rmse arithmetic") {
    CHECK(*rmse_of({0.0, 0.0}) == 0.0);
    CHECK(*rmse_of({1.0}) == 1.0);
    CHECK(std::abs(*rmse_of({3.0, 4.0}) - std::sqrt(12.5)) < 1e-12);
    CHECK(std::abs(*rmse_of({3.0, -4.0}) - 3.5355339059327378) < 1e-12);
    CHECK_FALSE(rmse_of({}));

    const auto r = rmse({{10.0, 23.5}, {11.0, 24.0}, {12.5}}, {10.0, 20.0}, 3.0);
    REQUIRE(r.size() == 2);
    CHECK(r[0].trials_used == 3);
    CHECK(std::abs(*r[0].rmse_deg - std::sqrt((0.0 + 1.0 + 6.25) / 3.0)) < 1e-12);
    CHECK(r[1].trials_used == 0);
    CHECK_FALSE(r[1].rmse_deg);

    const auto exact = rmse({{-1.0, 2.0}, {-1.0, 2.0}}, {-1.0, 2.0});
    CHECK(*exact[0].rmse_deg == 0.0);
    CHECK(*exact[1].rmse_deg == 0.0);
}

TEST_CASE("trial seeds are distinct and order free") {
    std::set<std::uint64_t> seen;
    for (std::size_t s = 0; s < 5; ++s)
        for (int k = 0; k < 20; ++k) seen.insert(trial_seed(1, s, k));
    CHECK(seen.size() == 100);
    CHECK(trial_seed(1, 2, 3) == trial_seed(1, 2, 3));
    CHECK(trial_seed(1, 2, 3) != trial_seed(2, 2, 3));
}

TEST_CASE("noise-free single path gives zero error for every algorithm") {
    ExperimentPlan plan;
    plan.geometry = ArrayGeometry(11, 2.5);
    plan.paths = RaypathSet({{1.4, 1.0, 0.0}});
    plan.grid = AngleGrid::uniform(-11.0, 11.0, 0.2);
    plan.band = Band{1400.0, 1600.0};
    plan.bins = 4;
    plan.snapshots = 4;
    plan.snr_db = {std::numeric_limits<double>::infinity()};
    plan.trials = 1;
    plan.algorithms = {Algorithm::subspace_cs, Algorithm::reweighted_cs, Algorithm::bpdn,
                       Algorithm::music, Algorithm::cbf};
    const auto report = run_experiment(plan);
    REQUIRE(report.stats.size() == 5);
    for (const auto& s : report.stats) {
        INFO(to_string(s.algorithm));
        REQUIRE(s.rmse_deg);
        CHECK(*s.rmse_deg < 1e-9);
        CHECK(s.detection_rate == 1.0);
    }
}

TEST_CASE("experiment layout and determinism across thread counts") {
    const auto plan = small_plan();
    const auto one = run_experiment(plan, 1);
    const auto three = run_experiment(plan, 3);
    CHECK(one.stats.size() == 3 * 2 * 2);
    CHECK(one.records.size() == 3 * 2 * 3);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t s = 0; s < 2; ++s)
            for (int p = 0; p < 2; ++p) {
                const auto& st = one.stat(plan.algorithms[a], s, p);
                CHECK(st.algorithm == plan.algorithms[a]);
                CHECK(st.snr_db == plan.snr_db[s]);
                CHECK(st.path_index == p);
                CHECK(st.detection_rate >= 0.0);
                CHECK(st.detection_rate <= 1.0);
                if (st.rmse_deg) CHECK(*st.rmse_deg >= 0.0);
            }
    std::ostringstream a;
    std::ostringstream b;
    write_report_csv(a, one);
    write_report_csv(b, three);
    CHECK(a.str() == b.str());
    CHECK(report_to_json(one).dump() == report_to_json(three).dump());
    CHECK_THROWS_AS(one.stat(Algorithm::bpdn, 0, 0), ValidationError);
}

TEST_CASE("report serialization") {
    RmseReport r;
    r.truth_deg = {1.0};
    r.snr_db = {std::numeric_limits<double>::infinity()};
    r.algorithms = {Algorithm::cbf};
    r.trials = 2;
    r.stats.push_back({Algorithm::cbf, r.snr_db[0], 0, std::nullopt, 0.0, 0});
    std::ostringstream os;
    write_report_csv(os, r);
    CHECK(os.str() ==
          "algorithm,snr_db,path_index,rmse_deg,detection_rate,trials_used\ncbf,inf,0,,0,0\n");
    const auto j = report_to_json(r);
    CHECK(j["snr_db"][0] == "inf");
    CHECK(j["stats"][0]["rmse_deg"].is_null());
}

TEST_CASE("plan validation") {
    auto plan = small_plan();
    plan.snr_db.clear();
    CHECK_THROWS_AS(run_experiment(plan), ValidationError);
    plan = small_plan();
    plan.trials = 0;
    CHECK_THROWS_AS(run_experiment(plan), ValidationError);
    plan = small_plan();
    plan.algorithms.clear();
    CHECK_THROWS_AS(run_experiment(plan), ValidationError);
    plan = small_plan();
    CHECK_THROWS_AS(run_experiment(plan, 0), ValidationError);
}
