// SPDX-License-Identifier: Apache-2.0
//
// Spectral (covariance) matrix estimation and wideband frequency smoothing.
#pragma once

#include <iosfwd>
#include <vector>

#include "raysep/array_model.hpp"
#include "raysep/simulator.hpp"

namespace raysep {

struct SpectralMatrix {
    CMatrix matrix;  // M x M, Hermitian positive semidefinite
    int snapshots_used = 0;
    double focus_frequency = 0.0;

    int size() const { return static_cast<int>(matrix.rows()); }
};

/// Sample covariance (1/L) sum_l y_l y_l^H, symmetrized to be exactly Hermitian.
SpectralMatrix estimate_spectral_matrix(const SnapshotMatrix& snapshots);

/// Unitary map from steering vectors at `from_hz` to steering vectors at `to_hz`.
struct FocusingTransform {
    CMatrix transform;          // M x M unitary
    double fit_residual = 0.0;  // max over the grid of |T g_from - g_to| / sqrt(M)
    double condition_number = 1.0;
};

/// Orthogonal-Procrustes fit T = U V^H from the SVD of G_to G_from^H over `grid`.
/// Throws NumericalError when G_to G_from^H is numerically singular.
FocusingTransform focusing_transform(const AngleGrid& grid, double from_hz, double to_hz,
                                     const ArrayGeometry& geom);

/// (1/B) sum_b T_b R(nu_b) T_b^H with every bin focused onto `focus_hz`.
SpectralMatrix focus_and_smooth(const std::vector<SnapshotMatrix>& bins, double focus_hz,
                                const AngleGrid& grid, const ArrayGeometry& geom);

/// Number of eigenvalues above `factor` times the median eigenvalue. Diagnostic only.
int signal_rank(const SpectralMatrix& r, double factor = 10.0);

/// Row-major matrix dump; each row holds re,im pairs for every column.
void write_matrix_csv(std::ostream& os, const CMatrix& m);

}  // namespace raysep
