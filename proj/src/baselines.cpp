// SPDX-License-Identifier: Apache-2.0
#include "raysep/baselines.hpp"

#include <cmath>

#include "raysep/error.hpp"
#include "raysep/subspace.hpp"

namespace raysep {

namespace {

void check_size(const SpectralMatrix& r, const ArrayGeometry& geom) {
    if (r.matrix.rows() != geom.num_sensors() || r.matrix.cols() != geom.num_sensors())
        throw ValidationError("spectral matrix size does not match the array");
}

}  // namespace

PseudoSpectrum music_spectrum(const SpectralMatrix& r, int num_paths, const AngleGrid& grid,
                              const ArrayGeometry& geom, double freq_hz) {
    check_size(r, geom);
    const int M = geom.num_sensors();
    if (num_paths < 1 || num_paths >= M) throw ValidationError("MUSIC needs 1 <= P < M");
    const auto dec = decompose(r, num_paths);
    const CMatrix en = dec.eigenvectors.rightCols(M - num_paths);
    const SteeringDictionary dict(grid, freq_hz, geom);
    const CMatrix proj = en.adjoint() * dict.matrix();
    const double eta = 1e-12 * M;

    PseudoSpectrum out{grid, Eigen::VectorXd(grid.size()), "music"};
    for (Eigen::Index q = 0; q < proj.cols(); ++q)
        out.values[q] = 1.0 / (proj.col(q).squaredNorm() + eta);
    return out;
}

PseudoSpectrum cbf_spectrum(const SpectralMatrix& r, const AngleGrid& grid,
                            const ArrayGeometry& geom, double freq_hz) {
    check_size(r, geom);
    const double M = geom.num_sensors();
    const SteeringDictionary dict(grid, freq_hz, geom);
    const CMatrix& g = dict.matrix();
    const CMatrix rg = r.matrix * g;

    PseudoSpectrum out{grid, Eigen::VectorXd(grid.size()), "cbf"};
    for (Eigen::Index q = 0; q < g.cols(); ++q)
        out.values[q] = std::max(g.col(q).dot(rg.col(q)).real(), 0.0) / (M * M);
    return out;
}

PseudoSpectrum normalized(const PseudoSpectrum& s) {
    PseudoSpectrum out = s;
    const double peak = s.values.size() ? s.values.maxCoeff() : 0.0;
    if (peak > 0.0) out.values /= peak;
    return out;
}

}  // namespace raysep
