// SPDX-License-Identifier: Apache-2.0
//
// Classical grid-scan estimators used for comparison.
#pragma once

#include <string>

#include "raysep/array_model.hpp"
#include "raysep/spectral.hpp"

namespace raysep {

struct PseudoSpectrum {
    AngleGrid grid;
    Eigen::VectorXd values;  // nonnegative, one per grid angle
    std::string algorithm;
};

/// 1 / (|E_n^H g|^2 + eta), eta = 1e-12 * M. Not normalized.
PseudoSpectrum music_spectrum(const SpectralMatrix& r, int num_paths, const AngleGrid& grid,
                              const ArrayGeometry& geom, double freq_hz);

/// Bartlett beamformer g^H R g / M^2.
PseudoSpectrum cbf_spectrum(const SpectralMatrix& r, const AngleGrid& grid,
                            const ArrayGeometry& geom, double freq_hz);

/// Copy scaled to unit maximum (unchanged if the maximum is zero).
PseudoSpectrum normalized(const PseudoSpectrum& s);

}  // namespace raysep
