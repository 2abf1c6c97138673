// SPDX-License-Identifier: Apache-2.0
#include "raysep/subspace.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "raysep/error.hpp"

namespace raysep {

SubspaceDecomposition decompose(const CMatrix& r, int signal_dim) {
    const auto M = r.rows();
    if (r.cols() != M || M < 2) throw ValidationError("spectral matrix must be square, M >= 2");
    if (signal_dim < 1 || signal_dim >= M)
        throw ValidationError("signal dimension P must satisfy 1 <= P < M");
    if (!r.allFinite()) throw ValidationError("spectral matrix has non-finite entries");
    const double scale = r.norm();
    if (scale > 0.0 && (r - r.adjoint()).norm() / scale > 1e-10)
        throw ValidationError("spectral matrix is not Hermitian");

    Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");

    // Solver returns ascending order; reverse so that ties keep a deterministic order.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::reverse(order.begin(), order.end());
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return es.eigenvalues()[a] > es.eigenvalues()[b];
    });

    SubspaceDecomposition dec;
    dec.signal_dim = signal_dim;
    dec.eigenvalues.resize(M);
    dec.eigenvectors.resize(M, M);
    for (Eigen::Index k = 0; k < M; ++k) {
        dec.eigenvalues[k] = es.eigenvalues()[order[static_cast<std::size_t>(k)]];
        dec.eigenvectors.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);
    }
    const auto P = static_cast<Eigen::Index>(signal_dim);
    const auto& U = dec.eigenvectors;
    const auto& lam = dec.eigenvalues;
    dec.signal_part = U.leftCols(P) * lam.head(P).asDiagonal() * U.leftCols(P).adjoint();
    dec.noise_part = U.rightCols(M - P) * lam.tail(M - P).asDiagonal() * U.rightCols(M - P).adjoint();
    return dec;
}

SubspaceDecomposition decompose(const SpectralMatrix& r, int signal_dim) {
    return decompose(r.matrix, signal_dim);
}

CVector vectorize_rows(const CMatrix& m) {
    CVector v(m.size());
    const auto cols = m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < cols; ++j) v[i * cols + j] = m(i, j);
    return v;
}

CMatrix unvectorize_rows(const CVector& v, int rows) {
    if (rows < 1 || v.size() % rows != 0)
        throw ValidationError("vector length is not a multiple of the row count");
    const auto cols = v.size() / rows;
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
    return m;
}

CVector vectorize_signal_subspace(const SubspaceDecomposition& dec) {
    return vectorize_rows(dec.signal_part);
}

CMatrix lift_dictionary(const CMatrix& g) {
    const auto M = g.rows();
    const auto Q = g.cols();
    CMatrix lifted(M * M, Q);
    for (Eigen::Index q = 0; q < Q; ++q)
        for (Eigen::Index i = 0; i < M; ++i)
            for (Eigen::Index j = 0; j < M; ++j) lifted(i * M + j, q) = g(i, q) * std::conj(g(j, q));
    return lifted;
}

CMatrix lift_dictionary(const SteeringDictionary& dict) { return lift_dictionary(dict.matrix()); }

LiftedSystem make_lifted_system(const SubspaceDecomposition& dec, const SteeringDictionary& dict) {
    if (dec.size() != dict.rows())
        throw ValidationError("decomposition and dictionary disagree on the sensor count");
    return LiftedSystem{vectorize_signal_subspace(dec), lift_dictionary(dict), dict.grid(),
                        dict.rows(), dict.matrix()};
}

std::pair<CMatrix, CMatrix> split_interference(const CMatrix& g, const CMatrix& source_moment) {
    if (source_moment.rows() != g.cols() || source_moment.cols() != g.cols())
        throw ValidationError("source second moment must be Q x Q");
    const CMatrix auto_terms = source_moment.diagonal().asDiagonal();
    const CMatrix cross_terms = source_moment - auto_terms;
    return {g * auto_terms * g.adjoint(), g * cross_terms * g.adjoint()};
}

std::pair<CMatrix, CMatrix> split_interference(const CMatrix& g, const CVector& s) {
    return split_interference(g, CMatrix(s * s.adjoint()));
}

}  // namespace raysep
