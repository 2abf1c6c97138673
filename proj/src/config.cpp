// SPDX-License-Identifier: Apache-2.0
#include "raysep/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "raysep/error.hpp"

namespace raysep {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

// Tracks which keys of one JSON object were consumed so leftovers can be rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(where(), "expected an object");
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key, std::optional<double> fallback = {}) {
        if (!has(key)) {
            if (fallback) return *fallback;
            fail(child(key), "required number is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_number()) fail(child(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(child(key), "must be finite");
        return d;
    }
    std::optional<double> optional_number(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return number(key);
    }
    long long integer(const std::string& key, std::optional<long long> fallback = {}) {
        if (!has(key)) {
            if (fallback) return *fallback;
            fail(child(key), "required integer is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail(child(key), "expected an integer");
        return v.get<long long>();
    }
    std::string string(const std::string& key, std::optional<std::string> fallback = {}) {
        if (!has(key)) {
            if (fallback) return *fallback;
            fail(child(key), "required string is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_string()) fail(child(key), "expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!used_.count(item.key())) fail(child(item.key()), "unknown key");
    }
    std::string where() const { return path_.empty() ? "<root>" : path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

int positive_int(Section& s, const std::string& key, long long fallback) {
    const auto v = s.integer(key, fallback);
    if (v < 1 || v > std::numeric_limits<int>::max()) fail(s.child(key), "must be a positive integer");
    return static_cast<int>(v);
}

// A signal-to-noise ratio in dB; null or "inf" selects noise-free data.
double snr_value(const json& v, const std::string& path) {
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    if (!v.is_number() || !std::isfinite(v.get<double>()))
        fail(path, "expected a number, null or \"inf\"");
    return v.get<double>();
}

template <class F>
auto checked(const std::string& path, F&& build) {
    try {
        return build();
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        fail(path, msg);
    }
}

ArrayGeometry parse_array(const json& j) {
    Section s(j, "array");
    const auto m = s.integer("sensors");
    const double d = s.number("spacing_m");
    const double c = s.number("sound_speed_mps", 1500.0);
    const auto ref = s.integer("reference_index", 0);
    s.finish();
    if (m < 2 || m > 4096) fail("array.sensors", "must lie in [2, 4096]");
    return checked("array", [&] {
        return ArrayGeometry(static_cast<int>(m), d, c, static_cast<int>(ref));
    });
}

WaveguideScenario parse_scenario(const json& j, const ArrayGeometry& geom) {
    Section s(j, "scenario");
    const double h = s.number("water_depth_m", 100.0);
    const double range = s.number("range_m", 2000.0);
    const double zs = s.number("source_depth_m");
    const double zr = s.number("reference_depth_m");
    const int p = positive_int(s, "num_paths", 1);
    const auto bounces = s.integer("max_bounces", 10);
    s.finish();
    if (bounces < 0 || bounces > 1000) fail("scenario.max_bounces", "must lie in [0, 1000]");
    return checked("scenario", [&] {
        auto sc = WaveguideScenario::for_array(h, range, zs, zr, geom, p);
        sc.max_bounces = static_cast<int>(bounces);
        sc.validate();
        return sc;
    });
}

RaypathSet parse_paths(const json& j) {
    if (!j.is_array() || j.empty()) fail("paths", "expected a non-empty array");
    std::vector<Raypath> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "paths[" + std::to_string(i) + "]";
        Section s(j[i], path);
        Raypath r;
        r.angle_deg = s.number("angle_deg");
        r.delay_s = s.number("delay_s", 0.0);
        r.amplitude = 1.0;
        if (s.has("amplitude")) {
            const json& a = s.raw("amplitude");
            if (a.is_number()) {
                r.amplitude = a.get<double>();
            } else if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number()) {
                r.amplitude = cdouble(a[0].get<double>(), a[1].get<double>());
            } else {
                fail(s.child("amplitude"), "expected a number or [re, im]");
            }
        }
        s.finish();
        out.push_back(r);
    }
    return checked("paths", [&] { return RaypathSet(std::move(out)); });
}

AngleGrid parse_grid(const json& j) {
    Section s(j, "grid");
    if (s.has("angles_deg")) {
        const json& a = s.raw("angles_deg");
        s.finish();
        if (!a.is_array()) fail("grid.angles_deg", "expected an array of numbers");
        std::vector<double> v;
        for (const auto& x : a) {
            if (!x.is_number()) fail("grid.angles_deg", "expected an array of numbers");
            v.push_back(x.get<double>());
        }
        return checked("grid", [&] { return AngleGrid(std::move(v)); });
    }
    const double first = s.number("first_deg", -90.0);
    const double last = s.number("last_deg", 90.0);
    const double step = s.number("step_deg", 0.2);
    s.finish();
    return checked("grid", [&] { return AngleGrid::uniform(first, last, step); });
}

BandSpec parse_band(const json& j) {
    Section s(j, "band");
    BandSpec b;
    if (s.has("frequency_hz")) {
        const double f = s.number("frequency_hz");
        s.finish();
        if (!(f > 0.0)) fail("band.frequency_hz", "must be positive");
        b.band = Band{0.5 * f, 1.5 * f};
        b.bins = 1;
        b.focus_hz = f;
        b.narrowband = true;
        return b;
    }
    b.band.low_hz = s.number("low_hz");
    b.band.high_hz = s.number("high_hz");
    b.bins = positive_int(s, "bins", 32);
    b.focus_hz = s.optional_number("focus_hz");
    s.finish();
    if (!(b.band.low_hz > 0.0 && b.band.high_hz > b.band.low_hz))
        fail("band", "need 0 < low_hz < high_hz");
    if (b.focus_hz && !(*b.focus_hz >= b.band.low_hz && *b.focus_hz <= b.band.high_hz))
        fail("band.focus_hz", "must lie inside [low_hz, high_hz]");
    return b;
}

EstimatorSettings parse_solver(const json& j) {
    Section s(j, "solver");
    EstimatorSettings e;
    e.delta_factor = s.number("delta_factor", e.delta_factor);
    const auto mode = s.string("cross_terms", "folded");
    if (mode == "folded") {
        e.cross_terms = CrossTermMode::folded;
    } else if (mode == "joint") {
        e.cross_terms = CrossTermMode::joint;
    } else {
        fail("solver.cross_terms", "expected \"folded\" or \"joint\"");
    }
    e.cross_term_factor = s.number("cross_term_factor", e.cross_term_factor);
    e.epsilon_factor = s.number("epsilon_factor", e.epsilon_factor);
    e.reweight_xi = s.optional_number("reweight_xi");
    const auto reweights = s.integer("max_reweight_iters", e.max_reweight_iters);
    if (reweights < 0 || reweights > 1000) fail("solver.max_reweight_iters", "must lie in [0, 1000]");
    e.max_reweight_iters = static_cast<int>(reweights);
    e.inner_tol = s.number("inner_tol", e.inner_tol);
    e.inner_max_iters = positive_int(s, "inner_max_iters", e.inner_max_iters);
    if (j.contains("infeasible_margin")) e.infeasible_margin = s.optional_number("infeasible_margin");
    s.finish();
    checked("solver", [&] {
        e.validate();
        return 0;
    });
    return e;
}

}  // namespace

RaypathSet RunConfig::truth() const {
    if (paths) return *paths;
    if (scenario) return eigenray_angles(*scenario);
    throw ValidationError("<root>: either \"scenario\" or \"paths\" is required");
}

int RunConfig::estimator_paths() const {
    if (num_paths) return *num_paths;
    if (paths) return static_cast<int>(paths->paths().size());
    if (scenario) return scenario->num_paths;
    throw ValidationError("num_paths: required when neither scenario nor paths is given");
}

ExperimentPlan RunConfig::plan() const {
    ExperimentPlan p;
    p.geometry = geometry;
    if (scenario) p.scenario = *scenario;
    if (paths) p.paths = *paths;
    if (!scenario && !paths) throw ValidationError("<root>: either \"scenario\" or \"paths\" is required");
    p.grid = grid;
    p.band = band.band;
    p.bins = band.bins;
    p.focus_hz = band.focus_hz;
    p.snapshots = snapshots;
    p.coherence = coherence;
    p.snr_db = bench_snr_db;
    p.trials = bench_trials;
    p.algorithms = algorithms;
    p.seed = seed;
    p.estimator = estimator;
    p.match_window_deg = match_window_deg;
    return p;
}

RunConfig parse_config(const json& j) {
    Section root(j, "");
    RunConfig c;
    c.canonical = j.dump();
    if (!root.has("array")) fail("array", "required section is missing");
    c.geometry = parse_array(root.raw("array"));

    const bool has_scenario = root.has("scenario");
    const bool has_paths = root.has("paths");
    if (has_scenario && has_paths) fail("paths", "give either \"scenario\" or \"paths\", not both");
    if (has_scenario) c.scenario = parse_scenario(root.raw("scenario"), c.geometry);
    if (has_paths) {
        c.paths = parse_paths(root.raw("paths"));
        checked("paths", [&] {
            c.paths->validate_for(c.geometry);
            return 0;
        });
    }
    if (root.has("grid")) c.grid = parse_grid(root.raw("grid"));
    if (root.has("band")) c.band = parse_band(root.raw("band"));

    c.snapshots = positive_int(root, "snapshots", c.snapshots);
    if (root.has("noise")) {
        Section n(root.raw("noise"), "noise");
        c.snr_db = n.has("snr_db") ? snr_value(n.raw("snr_db"), "noise.snr_db")
                                   : std::numeric_limits<double>::infinity();
        n.finish();
    } else {
        c.snr_db = std::numeric_limits<double>::infinity();
    }
    c.coherence.correlation = root.number("coherence", 1.0);
    if (!(c.coherence.correlation >= 0.0 && c.coherence.correlation <= 1.0))
        fail("coherence", "must lie in [0, 1]");
    const auto seed = root.integer("seed", 1);
    if (seed < 0) fail("seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
    if (root.has("num_paths")) c.num_paths = positive_int(root, "num_paths", 1);

    if (root.has("algorithms")) {
        const json& a = root.raw("algorithms");
        if (!a.is_array()) fail("algorithms", "expected an array of names");
        if (a.empty()) fail("algorithms", "must not be empty");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string path = "algorithms[" + std::to_string(i) + "]";
            if (!a[i].is_string()) fail(path, "expected a string");
            const auto alg = checked(path, [&] { return parse_algorithm(a[i].get<std::string>()); });
            if (std::find(c.algorithms.begin(), c.algorithms.end(), alg) != c.algorithms.end())
                fail(path, "duplicate algorithm");
            c.algorithms.push_back(alg);
        }
    } else if (j.contains("algorithms")) {
        fail("algorithms", "must not be empty");
    }
    if (root.has("solver")) c.estimator = parse_solver(root.raw("solver"));

    if (root.has("bench")) {
        Section b(root.raw("bench"), "bench");
        if (b.has("snr_db")) {
            const json& list = b.raw("snr_db");
            if (!list.is_array() || list.empty()) fail("bench.snr_db", "expected a non-empty array");
            for (std::size_t i = 0; i < list.size(); ++i)
                c.bench_snr_db.push_back(snr_value(list[i], "bench.snr_db[" + std::to_string(i) + "]"));
        } else {
            fail("bench.snr_db", "required array is missing");
        }
        c.bench_trials = positive_int(b, "trials", c.bench_trials);
        c.match_window_deg = b.number("match_window_deg", c.match_window_deg);
        if (!(c.match_window_deg > 0.0)) fail("bench.match_window_deg", "must be positive");
        b.finish();
    }
    if (root.has("output")) {
        Section o(root.raw("output"), "output");
        c.output_dir = o.string("directory", "out");
        o.finish();
    }
    root.finish();

    if (c.num_paths && *c.num_paths >= c.geometry.num_sensors())
        fail("num_paths", "must be smaller than array.sensors");
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("<root>: malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace raysep
