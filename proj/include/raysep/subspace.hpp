// SPDX-License-Identifier: Apache-2.0
//
// Signal-subspace extraction and covariance lifting.
//
// The signal part R_s of the spectral matrix is row-stacked into r_V, and the
// steering dictionary is lifted to G' whose column q is the row-stacked outer
// product g_q g_q^H. Path powers S' then satisfy r_V = G' S' plus cross terms.
#pragma once

#include <utility>

#include "raysep/array_model.hpp"
#include "raysep/spectral.hpp"

namespace raysep {

struct SubspaceDecomposition {
    Eigen::VectorXd eigenvalues;  // descending
    CMatrix eigenvectors;         // column k pairs with eigenvalues[k]
    int signal_dim = 0;           // P
    CMatrix signal_part;          // sum_{k<P} lambda_k mu_k mu_k^H
    CMatrix noise_part;           // sum_{k>=P} lambda_k mu_k mu_k^H

    int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// Eigendecomposition split at P. Requires 1 <= P < M and a Hermitian input
/// (relative anti-Hermitian part below 1e-10). Equal eigenvalues keep solver order.
SubspaceDecomposition decompose(const CMatrix& r, int signal_dim);
SubspaceDecomposition decompose(const SpectralMatrix& r, int signal_dim);

/// Row-major stacking: out[i*M + j] = m(i, j). No conjugation.
CVector vectorize_rows(const CMatrix& m);
CMatrix unvectorize_rows(const CVector& v, int rows);

CVector vectorize_signal_subspace(const SubspaceDecomposition& dec);

/// G'[i*M + j, q] = G[i, q] * conj(G[j, q]).
CMatrix lift_dictionary(const SteeringDictionary& dict);
CMatrix lift_dictionary(const CMatrix& g);

struct LiftedSystem {
    CVector r_v;     // M^2
    CMatrix lifted;  // M^2 x Q
    AngleGrid grid;
    int num_sensors = 0;
    CMatrix steering;  // M x Q dictionary the lift was built from; may be empty
};

LiftedSystem make_lifted_system(const SubspaceDecomposition& dec, const SteeringDictionary& dict);

/// Splits G C G^H into the auto-term part D1 = G diag(C) G^H and the cross-term part
/// D2 = G offdiag(C) G^H, where C = E{S S^H} is the Q x Q source second moment.
std::pair<CMatrix, CMatrix> split_interference(const CMatrix& g, const CMatrix& source_moment);

/// Same split for a single deterministic source vector (C = s s^H).
std::pair<CMatrix, CMatrix> split_interference(const CMatrix& g, const CVector& s);

}  // namespace raysep
