// SPDX-License-Identifier: Apache-2.0
//
// Uniform vertical line array model: geometry, angle grids, plane-wave steering
// vectors and the over-complete steering dictionary shared by every estimator.
//
// Angles cross the API in degrees, measured from broadside at the reference
// sensor. Sensor m sees the phase exp(-j 2 pi nu (m - ref) d sin(theta) / c).
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace raysep {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

class ArrayGeometry {
public:
    ArrayGeometry(int num_sensors, double spacing_m, double sound_speed_mps = 1500.0,
                  int reference_index = 0);

    int num_sensors() const noexcept { return num_sensors_; }
    double spacing() const noexcept { return spacing_; }
    double sound_speed() const noexcept { return sound_speed_; }
    int reference_index() const noexcept { return reference_index_; }

    /// Signed distance (m) of sensor `m` from the reference sensor along the array axis.
    double sensor_offset(int m) const noexcept { return (m - reference_index_) * spacing_; }

    /// Largest |theta| (degrees) for which no grating lobe enters [-theta, theta] at `freq_hz`.
    double alias_free_half_sector(double freq_hz) const;

    bool operator==(const ArrayGeometry&) const = default;

private:
    int num_sensors_;
    double spacing_;
    double sound_speed_;
    int reference_index_;
};

class AngleGrid {
public:
    /// Angles in degrees; must be strictly increasing, inside [-90, 90], at least two points.
    explicit AngleGrid(std::vector<double> angles_deg);

    /// Inclusive uniform grid. `step` must divide (last - first) to within 1e-9 of a step.
    static AngleGrid uniform(double first_deg, double last_deg, double step_deg);

    /// [-90, 90] at 0.2 degrees, 901 points.
    static AngleGrid default_grid() { return uniform(-90.0, 90.0, 0.2); }

    std::size_t size() const noexcept { return angles_.size(); }
    double operator[](std::size_t q) const { return angles_[q]; }
    const std::vector<double>& angles() const noexcept { return angles_; }
    double front() const { return angles_.front(); }
    double back() const { return angles_.back(); }

    /// Mean spacing between adjacent grid points (degrees).
    double resolution() const;

    /// Index of the grid point closest to `angle_deg` (lower index on ties).
    std::size_t nearest_index(double angle_deg) const;

    bool operator==(const AngleGrid&) const = default;

private:
    std::vector<double> angles_;
};

/// Unit-modulus plane-wave response of the array to a far-field arrival at `theta_deg`.
/// Throws ValidationError for theta outside [-90, 90] or a nonpositive frequency.
CVector steering_vector(double theta_deg, double freq_hz, const ArrayGeometry& geom);

/// M x Q matrix of steering vectors over an angle grid at a single frequency.
class SteeringDictionary {
public:
    SteeringDictionary(AngleGrid grid, double freq_hz, ArrayGeometry geom);

    const CMatrix& matrix() const noexcept { return matrix_; }
    const AngleGrid& grid() const noexcept { return grid_; }
    const ArrayGeometry& geometry() const noexcept { return geom_; }
    double frequency() const noexcept { return freq_hz_; }

    int rows() const noexcept { return static_cast<int>(matrix_.rows()); }
    int cols() const noexcept { return static_cast<int>(matrix_.cols()); }
    auto column(std::size_t q) const { return matrix_.col(static_cast<Eigen::Index>(q)); }

private:
    AngleGrid grid_;
    double freq_hz_;
    ArrayGeometry geom_;
    CMatrix matrix_;
};

/// Requires grid.size() > geom.num_sensors().
SteeringDictionary build_dictionary(const AngleGrid& grid, double freq_hz, const ArrayGeometry& geom);

struct Raypath {
    double angle_deg = 0.0;
    cdouble amplitude{1.0, 0.0};
    double delay_s = 0.0;  // relative to the earliest arrival at the reference sensor
};

/// Ground-truth arrivals. Invariants checked against a geometry: 1 <= P < M, distinct angles.
class RaypathSet {
public:
    RaypathSet() = default;
    explicit RaypathSet(std::vector<Raypath> paths);

    std::size_t size() const noexcept { return paths_.size(); }
    bool empty() const noexcept { return paths_.empty(); }
    const Raypath& operator[](std::size_t p) const { return paths_[p]; }
    const std::vector<Raypath>& paths() const noexcept { return paths_; }
    std::vector<double> angles() const;

    void validate_for(const ArrayGeometry& geom) const;

    auto begin() const { return paths_.begin(); }
    auto end() const { return paths_.end(); }

private:
    std::vector<Raypath> paths_;
};

}  // namespace raysep
