// SPDX-License-Identifier: Apache-2.0
#include "raysep/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "raysep/error.hpp"

namespace raysep {

ArrayGeometry::ArrayGeometry(int num_sensors, double spacing_m, double sound_speed_mps,
                             int reference_index)
    : num_sensors_(num_sensors),
      spacing_(spacing_m),
      sound_speed_(sound_speed_mps),
      reference_index_(reference_index) {
    if (num_sensors_ < 2) throw ValidationError("array needs at least 2 sensors");
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
        throw ValidationError("sensor spacing must be positive");
    if (!(sound_speed_ > 0.0) || !std::isfinite(sound_speed_))
        throw ValidationError("sound speed must be positive");
    if (reference_index_ < 0 || reference_index_ >= num_sensors_)
        throw ValidationError("reference sensor index out of range");
}

double ArrayGeometry::alias_free_half_sector(double freq_hz) const {
    if (!(freq_hz > 0.0)) throw ValidationError("frequency must be positive");
    // Grating lobes repeat with period lambda/d in sin(theta).
    const double half_period = sound_speed_ / (2.0 * freq_hz * spacing_);
    return half_period >= 1.0 ? 90.0 : rad_to_deg(std::asin(half_period));
}

AngleGrid::AngleGrid(std::vector<double> angles_deg) : angles_(std::move(angles_deg)) {
    if (angles_.size() < 2) throw ValidationError("angle grid needs at least 2 points");
    for (std::size_t q = 0; q < angles_.size(); ++q) {
        const double a = angles_[q];
        if (!std::isfinite(a) || a < -90.0 || a > 90.0)
            throw ValidationError("grid angle outside [-90, 90]: " + std::to_string(a));
        if (q > 0 && !(a > angles_[q - 1]))
            throw ValidationError("grid angles must be strictly increasing");
    }
}

AngleGrid AngleGrid::uniform(double first_deg, double last_deg, double step_deg) {
    if (!(step_deg > 0.0) || !(last_deg > first_deg))
        throw ValidationError("uniform grid needs first < last and a positive step");
    const double span = (last_deg - first_deg) / step_deg;
    const auto intervals = static_cast<long>(std::lround(span));
    if (std::abs(span - static_cast<double>(intervals)) > 1e-9)
        throw ValidationError("grid step does not divide the angular span");
    std::vector<double> angles(static_cast<std::size_t>(intervals) + 1);
    // snap to 1e-9 deg so decimal steps print as written (6.6, not 6.600000000000001)
    for (long i = 0; i <= intervals; ++i)
        angles[static_cast<std::size_t>(i)] =
            std::round((first_deg + static_cast<double>(i) * step_deg) * 1e9) / 1e9;
    angles.back() = last_deg;
    return AngleGrid(std::move(angles));
}

double AngleGrid::resolution() const {
    return (angles_.back() - angles_.front()) / static_cast<double>(angles_.size() - 1);
}

std::size_t AngleGrid::nearest_index(double angle_deg) const {
    const auto it = std::lower_bound(angles_.begin(), angles_.end(), angle_deg);
    if (it == angles_.begin()) return 0;
    if (it == angles_.end()) return angles_.size() - 1;
    const auto hi = static_cast<std::size_t>(it - angles_.begin());
    return (angle_deg - angles_[hi - 1] <= angles_[hi] - angle_deg) ? hi - 1 : hi;
}

CVector steering_vector(double theta_deg, double freq_hz, const ArrayGeometry& geom) {
    if (!std::isfinite(theta_deg) || theta_deg < -90.0 || theta_deg > 90.0)
        throw ValidationError("steering angle outside [-90, 90]");
    if (!(freq_hz > 0.0) || !std::isfinite(freq_hz))
        throw ValidationError("steering frequency must be positive");
    const double k_sin = 2.0 * kPi * freq_hz * std::sin(deg_to_rad(theta_deg)) / geom.sound_speed();
    CVector g(geom.num_sensors());
    for (int m = 0; m < geom.num_sensors(); ++m)
        g[m] = std::polar(1.0, -k_sin * geom.sensor_offset(m));
    return g;
}

SteeringDictionary::SteeringDictionary(AngleGrid grid, double freq_hz, ArrayGeometry geom)
    : grid_(std::move(grid)), freq_hz_(freq_hz), geom_(geom) {
    if (grid_.size() <= static_cast<std::size_t>(geom_.num_sensors()))
        throw ValidationError("dictionary must be over-complete: grid size " +
                              std::to_string(grid_.size()) + " <= sensor count");
    matrix_.resize(geom_.num_sensors(), static_cast<Eigen::Index>(grid_.size()));
    for (std::size_t q = 0; q < grid_.size(); ++q)
        matrix_.col(static_cast<Eigen::Index>(q)) = steering_vector(grid_[q], freq_hz_, geom_);
}

SteeringDictionary build_dictionary(const AngleGrid& grid, double freq_hz, const ArrayGeometry& geom) {
    return SteeringDictionary(grid, freq_hz, geom);
}

RaypathSet::RaypathSet(std::vector<Raypath> paths) : paths_(std::move(paths)) {
    for (const auto& p : paths_) {
        if (!std::isfinite(p.angle_deg) || p.angle_deg < -90.0 || p.angle_deg > 90.0)
            throw ValidationError("raypath angle outside [-90, 90]");
        if (!std::isfinite(p.amplitude.real()) || !std::isfinite(p.amplitude.imag()) ||
            !std::isfinite(p.delay_s))
            throw ValidationError("raypath amplitude and delay must be finite");
    }
}

std::vector<double> RaypathSet::angles() const {
    std::vector<double> out;
    out.reserve(paths_.size());
    for (const auto& p : paths_) out.push_back(p.angle_deg);
    return out;
}

void RaypathSet::validate_for(const ArrayGeometry& geom) const {
    if (paths_.empty() || paths_.size() >= static_cast<std::size_t>(geom.num_sensors()))
        throw ValidationError("raypath count must satisfy 1 <= P < M");
    auto a = angles();
    std::sort(a.begin(), a.end());
    if (std::adjacent_find(a.begin(), a.end()) != a.end())
        throw ValidationError("raypath angles must be pairwise distinct");
}

}  // namespace raysep
