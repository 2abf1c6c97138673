// SPDX-License-Identifier: Apache-2.0
#include "raysep/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "raysep/error.hpp"

namespace raysep {

void WaveguideScenario::validate() const {
    if (!(water_depth > 0.0)) throw ValidationError("water_depth must be positive");
    if (!(range > 0.0)) throw ValidationError("range must be positive");
    if (!(sound_speed > 0.0)) throw ValidationError("sound_speed must be positive");
    if (!(source_depth > 0.0 && source_depth < water_depth))
        throw ValidationError("source_depth must lie inside the water column");
    if (receiver_depths.empty()) throw ValidationError("receiver_depths is empty");
    for (double z : receiver_depths)
        if (!(z > 0.0 && z < water_depth))
            throw ValidationError("receiver depth outside the water column");
    if (reference_index < 0 || reference_index >= static_cast<int>(receiver_depths.size()))
        throw ValidationError("reference_index out of range");
    if (num_paths < 1) throw ValidationError("num_paths must be at least 1");
    if (max_bounces < 0) throw ValidationError("max_bounces must be nonnegative");
}

WaveguideScenario WaveguideScenario::for_array(double water_depth, double range,
                                               double source_depth, double reference_depth,
                                               const ArrayGeometry& geom, int num_paths) {
    WaveguideScenario s;
    s.water_depth = water_depth;
    s.range = range;
    s.source_depth = source_depth;
    s.sound_speed = geom.sound_speed();
    s.num_paths = num_paths;
    s.reference_index = geom.reference_index();
    s.receiver_depths.resize(static_cast<std::size_t>(geom.num_sensors()));
    for (int m = 0; m < geom.num_sensors(); ++m)
        s.receiver_depths[static_cast<std::size_t>(m)] = reference_depth + geom.sensor_offset(m);
    s.validate();
    return s;
}

std::vector<Eigenray> enumerate_eigenrays(const WaveguideScenario& scenario) {
    scenario.validate();
    const double H = scenario.water_depth;
    const double zr = scenario.receiver_depths[static_cast<std::size_t>(scenario.reference_index)];

    auto make = [&](double image_depth, int s, int b) {
        Eigenray e;
        const double dz = zr - image_depth;
        e.image_depth = image_depth;
        e.surface_bounces = s;
        e.bottom_bounces = b;
        e.path_length = std::hypot(scenario.range, dz);
        e.path.angle_deg = rad_to_deg(std::atan(dz / scenario.range));
        e.path.amplitude = (s % 2 == 0) ? cdouble{1.0, 0.0} : cdouble{-1.0, 0.0};
        return e;
    };

    std::vector<Eigenray> rays{make(scenario.source_depth, 0, 0)};
    // Two alternating reflection chains, one starting at each boundary.
    for (bool surface_first : {true, false}) {
        double z = scenario.source_depth;
        int s = 0;
        int b = 0;
        bool at_surface = surface_first;
        for (int order = 1; order <= scenario.max_bounces; ++order) {
            if (at_surface) {
                z = -z;
                ++s;
            } else {
                z = 2.0 * H - z;
                ++b;
            }
            rays.push_back(make(z, s, b));
            at_surface = !at_surface;
        }
    }
    std::stable_sort(rays.begin(), rays.end(), [](const Eigenray& a, const Eigenray& b) {
        const int oa = a.surface_bounces + a.bottom_bounces;
        const int ob = b.surface_bounces + b.bottom_bounces;
        if (oa != ob) return oa < ob;
        return std::abs(a.path.angle_deg) < std::abs(b.path.angle_deg);
    });
    return rays;
}

RaypathSet eigenray_angles(const WaveguideScenario& scenario) {
    auto rays = enumerate_eigenrays(scenario);
    if (static_cast<std::size_t>(scenario.num_paths) > rays.size())
        throw ValidationError("requested " + std::to_string(scenario.num_paths) +
                              " paths but only " + std::to_string(rays.size()) +
                              " image arrivals were generated");
    rays.resize(static_cast<std::size_t>(scenario.num_paths));
    const double shortest =
        std::min_element(rays.begin(), rays.end(), [](const Eigenray& a, const Eigenray& b) {
            return a.path_length < b.path_length;
        })->path_length;
    std::stable_sort(rays.begin(), rays.end(), [](const Eigenray& a, const Eigenray& b) {
        return std::abs(a.path.angle_deg) < std::abs(b.path.angle_deg);
    });
    std::vector<Raypath> paths;
    for (auto& r : rays) {
        r.path.delay_s = (r.path_length - shortest) / scenario.sound_speed;
        paths.push_back(r.path);
    }
    return RaypathSet(std::move(paths));
}

std::vector<double> Band::bin_frequencies(int bins) const {
    if (bins < 1) throw ValidationError("bin count must be at least 1");
    if (!(high_hz > low_hz) || !(low_hz > 0.0))
        throw ValidationError("frequency band is empty or nonpositive");
    std::vector<double> f(static_cast<std::size_t>(bins));
    const double w = width() / bins;
    for (int b = 0; b < bins; ++b) f[static_cast<std::size_t>(b)] = low_hz + (b + 0.5) * w;
    return f;
}

CVector noise_free_response(const RaypathSet& paths, double freq_hz, const ArrayGeometry& geom) {
    CVector x = CVector::Zero(geom.num_sensors());
    for (const auto& p : paths)
        x += p.amplitude * std::polar(1.0, -2.0 * kPi * freq_hz * p.delay_s) *
             steering_vector(p.angle_deg, freq_hz, geom);
    return x;
}

namespace {

cdouble complex_normal(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

// Noise-free data for one bin; consumes amplitude draws from `rng` unless coherent.
CMatrix signal_block(const RaypathSet& paths, double freq_hz, int num_snapshots,
                     const ArrayGeometry& geom, Coherence coherence, std::mt19937_64& rng) {
    const double rho = coherence.correlation;
    const auto P = static_cast<Eigen::Index>(paths.size());
    CMatrix steer(geom.num_sensors(), P);
    CVector gain(P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto& path = paths[static_cast<std::size_t>(p)];
        steer.col(p) = steering_vector(path.angle_deg, freq_hz, geom);
        gain[p] = path.amplitude * std::polar(1.0, -2.0 * kPi * freq_hz * path.delay_s);
    }
    CMatrix amps(P, num_snapshots);
    const double common = std::sqrt(rho);
    const double indep = std::sqrt(1.0 - rho);
    for (int l = 0; l < num_snapshots; ++l)
        for (Eigen::Index p = 0; p < P; ++p)
            amps(p, l) = gain[p] * (rho < 1.0 ? common + indep * complex_normal(rng) : 1.0);
    return steer * amps;
}

void add_noise(CMatrix& y, double variance, std::mt19937_64& rng) {
    const double scale = std::sqrt(variance);
    for (Eigen::Index l = 0; l < y.cols(); ++l)
        for (Eigen::Index m = 0; m < y.rows(); ++m) y(m, l) += scale * complex_normal(rng);
}

void check_common(const RaypathSet& paths, int num_snapshots, const ArrayGeometry& geom,
                  Coherence coherence) {
    if (num_snapshots < 1) throw ValidationError("snapshot count must be at least 1");
    if (!(coherence.correlation >= 0.0 && coherence.correlation <= 1.0))
        throw ValidationError("coherence coefficient must lie in [0, 1]");
    paths.validate_for(geom);
}

}  // namespace

std::vector<SnapshotMatrix> synthesize_broadband(const RaypathSet& paths, const Band& band,
                                                 int bins, int num_snapshots,
                                                 const NoiseSpec& noise, const ArrayGeometry& geom,
                                                 Coherence coherence) {
    check_common(paths, num_snapshots, geom, coherence);
    const auto freqs = band.bin_frequencies(bins);
    if (std::isnan(noise.snr_db)) throw ValidationError("snr_db is NaN");

    std::mt19937_64 rng(noise.seed);
    std::vector<SnapshotMatrix> out(freqs.size());
    double power = 0.0;
    for (std::size_t b = 0; b < freqs.size(); ++b) {
        out[b].frequency = freqs[b];
        out[b].data = signal_block(paths, freqs[b], num_snapshots, geom, coherence, rng);
        power += out[b].data.squaredNorm();
    }
    power /= static_cast<double>(freqs.size()) * geom.num_sensors() * num_snapshots;

    const double variance = noise.noise_free() ? 0.0 : power / std::pow(10.0, noise.snr_db / 10.0);
    for (auto& s : out) {
        s.signal_power = power;
        s.noise_variance = variance;
        if (variance > 0.0) add_noise(s.data, variance, rng);
    }
    return out;
}

SnapshotMatrix synthesize_snapshots(const RaypathSet& paths, double freq_hz, int num_snapshots,
                                    const NoiseSpec& noise, const ArrayGeometry& geom,
                                    Coherence coherence) {
    if (!(freq_hz > 0.0)) throw ValidationError("frequency must be positive");
    // A one-bin band centered on freq_hz; the width only fixes the bin center.
    Band band{0.5 * freq_hz, 1.5 * freq_hz};
    return std::move(synthesize_broadband(paths, band, 1, num_snapshots, noise, geom, coherence)[0]);
}

}  // namespace raysep
