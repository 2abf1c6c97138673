// SPDX-License-Identifier: Apache-2.0
#include "raysep/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "raysep/error.hpp"
#include "raysep/format.hpp"

namespace raysep {

SpectralMatrix estimate_spectral_matrix(const SnapshotMatrix& snapshots) {
    const auto L = snapshots.data.cols();
    if (L < 1) throw ValidationError("spectral matrix needs at least one snapshot");
    if (!snapshots.data.allFinite()) throw ValidationError("snapshots contain non-finite values");
    CMatrix r = snapshots.data * snapshots.data.adjoint() / static_cast<double>(L);
    SpectralMatrix out;
    out.matrix = 0.5 * (r + r.adjoint());
    out.snapshots_used = static_cast<int>(L);
    out.focus_frequency = snapshots.frequency;
    return out;
}

FocusingTransform focusing_transform(const AngleGrid& grid, double from_hz, double to_hz,
                                     const ArrayGeometry& geom) {
    const int M = geom.num_sensors();
    FocusingTransform out;
    if (from_hz == to_hz) {
        out.transform = CMatrix::Identity(M, M);
        return out;
    }
    const SteeringDictionary from(grid, from_hz, geom);
    const SteeringDictionary to(grid, to_hz, geom);
    const CMatrix cross = to.matrix() * from.matrix().adjoint();
    Eigen::JacobiSVD<CMatrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    out.condition_number = sv[M - 1] > 0.0 ? sv[0] / sv[M - 1] : INFINITY;
    if (!(sv[M - 1] > 1e-12 * sv[0]))
        throw NumericalError("focusing fit is singular between " + std::to_string(from_hz) +
                             " Hz and " + std::to_string(to_hz) +
                             " Hz (condition number " + std::to_string(out.condition_number) + ")");
    out.transform = svd.matrixU() * svd.matrixV().adjoint();
    const CMatrix miss = out.transform * from.matrix() - to.matrix();
    out.fit_residual = miss.colwise().norm().maxCoeff() / std::sqrt(static_cast<double>(M));
    return out;
}

SpectralMatrix focus_and_smooth(const std::vector<SnapshotMatrix>& bins, double focus_hz,
                                const AngleGrid& grid, const ArrayGeometry& geom) {
    if (bins.empty()) throw ValidationError("frequency smoothing needs at least one bin");
    double lo = bins.front().frequency;
    double hi = lo;
    for (const auto& b : bins) {
        lo = std::min(lo, b.frequency);
        hi = std::max(hi, b.frequency);
        if (b.num_sensors() != geom.num_sensors())
            throw ValidationError("bin sensor count does not match the array");
    }
    if (!(focus_hz >= lo && focus_hz <= hi))
        throw ValidationError("focus frequency lies outside the bin frequencies");

    const int M = geom.num_sensors();
    SpectralMatrix out;
    out.matrix = CMatrix::Zero(M, M);
    out.focus_frequency = focus_hz;
    for (const auto& b : bins) {
        const auto r = estimate_spectral_matrix(b);
        const auto t = focusing_transform(grid, b.frequency, focus_hz, geom);
        out.matrix += t.transform * r.matrix * t.transform.adjoint();
        out.snapshots_used += r.snapshots_used;
    }
    out.matrix /= static_cast<double>(bins.size());
    out.matrix = 0.5 * (out.matrix + out.matrix.adjoint()).eval();
    return out;
}

int signal_rank(const SpectralMatrix& r, double factor) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r.matrix, Eigen::EigenvaluesOnly);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + r.size());
    std::vector<double> sorted = ev;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return static_cast<int>(
        std::count_if(ev.begin(), ev.end(), [&](double v) { return v > factor * median; }));
}

void write_matrix_csv(std::ostream& os, const CMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
        }
        os << '\n';
    }
}

}  // namespace raysep
