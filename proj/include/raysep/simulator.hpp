// SPDX-License-Identifier: Apache-2.0
//
// Synthetic shallow-water multipath data: image-method eigenrays in an
// isovelocity waveguide and noisy frequency-domain array snapshots.
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "raysep/array_model.hpp"

namespace raysep {

/// Isovelocity waveguide with a pressure-release surface at depth 0 and a
/// perfectly reflecting bottom at `water_depth`. Depths are positive downward.
struct WaveguideScenario {
    double water_depth = 100.0;
    double range = 2000.0;
    double source_depth = 20.0;
    std::vector<double> receiver_depths;  // one per sensor, index-aligned with the array
    double sound_speed = 1500.0;
    int num_paths = 1;
    int reference_index = 0;
    int max_bounces = 10;  // image orders generated before selecting the P lowest

    void validate() const;

    /// Receiver depths laid out along `geom`, increasing with sensor index, with the
    /// reference sensor at `reference_depth`.
    static WaveguideScenario for_array(double water_depth, double range, double source_depth,
                                       double reference_depth, const ArrayGeometry& geom,
                                       int num_paths);
};

struct Eigenray {
    Raypath path;
    int surface_bounces = 0;
    int bottom_bounces = 0;
    double image_depth = 0.0;
    double path_length = 0.0;
};

/// All image arrivals up to `scenario.max_bounces`, ordered by (bounce count, |angle|).
std::vector<Eigenray> enumerate_eigenrays(const WaveguideScenario& scenario);

/// The P lowest-order arrivals sorted by |angle|. Unit amplitudes with a sign flip per
/// surface bounce; delays relative to the earliest selected arrival.
RaypathSet eigenray_angles(const WaveguideScenario& scenario);

struct NoiseSpec {
    double snr_db = std::numeric_limits<double>::infinity();  // +inf disables noise
    std::uint64_t seed = 0;

    bool noise_free() const { return snr_db == std::numeric_limits<double>::infinity(); }
};

/// Inter-path correlation of the per-snapshot amplitudes. With coefficient rho the
/// amplitude of path p in snapshot l is a_p (sqrt(rho) + sqrt(1 - rho) u_pl), u ~ CN(0, 1).
struct Coherence {
    double correlation = 1.0;

    static Coherence coherent() { return {1.0}; }
    static Coherence incoherent() { return {0.0}; }
    static Coherence partial(double rho) { return {rho}; }
};

struct SnapshotMatrix {
    CMatrix data;  // M x L
    double frequency = 0.0;
    double noise_variance = 0.0;  // per-element complex noise variance actually used
    double signal_power = 0.0;    // mean noise-free power per element and snapshot

    int num_sensors() const { return static_cast<int>(data.rows()); }
    int num_snapshots() const { return static_cast<int>(data.cols()); }
};

/// Narrowband snapshots at `freq_hz`. The complex gain of path p at this frequency is
/// a_p exp(-j 2 pi nu tau_p), so a single-bin broadband run reproduces this output.
SnapshotMatrix synthesize_snapshots(const RaypathSet& paths, double freq_hz, int num_snapshots,
                                    const NoiseSpec& noise, const ArrayGeometry& geom,
                                    Coherence coherence = Coherence::coherent());

struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;

    double center() const { return 0.5 * (low_hz + high_hz); }
    double width() const { return high_hz - low_hz; }
    /// Centers of `bins` equal-width sub-bands.
    std::vector<double> bin_frequencies(int bins) const;
};

/// One snapshot matrix per frequency bin. Amplitude fluctuations and noise are
/// independent across bins; the noise level is set from the in-band signal power.
std::vector<SnapshotMatrix> synthesize_broadband(const RaypathSet& paths, const Band& band,
                                                 int bins, int num_snapshots,
                                                 const NoiseSpec& noise, const ArrayGeometry& geom,
                                                 Coherence coherence = Coherence::coherent());

/// Noise-free signal part sum_p a_p exp(-j 2 pi nu tau_p) g(theta_p) for one snapshot.
CVector noise_free_response(const RaypathSet& paths, double freq_hz, const ArrayGeometry& geom);

}  // namespace raysep
