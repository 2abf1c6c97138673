// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <sstream>

#include "raysep/error.hpp"
#include "raysep/spectral.hpp"

using namespace raysep;

namespace {

const ArrayGeometry kArray{11, 2.5};
const AngleGrid kSector = AngleGrid::uniform(-11.0, 11.0, 0.2);

double hermitian_defect(const CMatrix& r) { return (r - r.adjoint()).norm() / r.norm(); }

double min_eigenvalue(const CMatrix& r) {
    return Eigen::SelfAdjointEigenSolver<CMatrix>(r, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

}  // namespace

TEST_CASE("single snapshot gives the rank-one outer product") {
    SnapshotMatrix s;
    s.data = CMatrix::Random(4, 1);
    s.frequency = 1000.0;
    const auto r = estimate_spectral_matrix(s);
    const CMatrix expect = s.data * s.data.adjoint();
    CHECK((r.matrix - expect).norm() < 1e-14 * expect.norm());
    CHECK(r.snapshots_used == 1);
    CHECK(r.focus_frequency == 1000.0);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(r.matrix);
    CHECK(eig.eigenvalues()[2] < 1e-12 * eig.eigenvalues()[3]);
}

TEST_CASE("white noise covariance") {
    const RaypathSet rays({{0.0, 1.0, 0.0}});
    // drown the path: noise variance 1e6 times the signal power
    const auto s = synthesize_snapshots(rays, 1500.0, 10000, {-60.0, 5}, kArray);
    const double var = s.noise_variance;
    const auto r = estimate_spectral_matrix(s);
    const double tol = 5.0 * var / std::sqrt(10000.0);
    for (int i = 0; i < 11; ++i) {
        CHECK(std::abs(r.matrix(i, i).real() - var) < tol);
        for (int j = 0; j < 11; ++j)
            if (i != j) CHECK(std::abs(r.matrix(i, j)) < tol);
    }
}

TEST_CASE("Hermitian, PSD and trace invariants") {
    const RaypathSet rays({{-3.0, 1.0, 0.0}, {4.0, 0.7, 0.0}});
    const auto s = synthesize_snapshots(rays, 1500.0, 37, {3.0, 21}, kArray, Coherence::incoherent());
    const auto r = estimate_spectral_matrix(s);
    CHECK(hermitian_defect(r.matrix) < 1e-12);
    const double trace = r.matrix.trace().real();
    CHECK(min_eigenvalue(r.matrix) >= -1e-10 * trace);
    const double power = s.data.squaredNorm() / 37.0;
    CHECK(std::abs(trace - power) < 1e-12 * power);
}

TEST_CASE("two incoherent noise-free paths span two dimensions") {
    const RaypathSet rays({{-3.0, 1.0, 0.0}, {4.0, 1.0, 0.0}});
    const auto s = synthesize_snapshots(rays, 1500.0, 2000, NoiseSpec{}, kArray, Coherence::incoherent());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(estimate_spectral_matrix(s).matrix);
    const auto ev = eig.eigenvalues();
    CHECK(ev[10] > 1.0);
    CHECK(ev[9] > 1.0);
    CHECK(ev[8] < 1e-10 * ev[10]);
}

TEST_CASE("empty snapshot matrix is rejected") {
    SnapshotMatrix s;
    s.data = CMatrix(3, 0);
    CHECK_THROWS_AS(estimate_spectral_matrix(s), ValidationError);
}

TEST_CASE("focusing a bin onto itself is the identity") {
    const auto t = focusing_transform(kSector, 1500.0, 1500.0, kArray);
    CHECK(t.transform == CMatrix::Identity(11, 11));
    CHECK(t.fit_residual == 0.0);

    const RaypathSet rays({{1.0, 1.0, 0.0}});
    const auto s = synthesize_snapshots(rays, 1500.0, 9, {5.0, 2}, kArray);
    const auto smoothed = focus_and_smooth({s}, 1500.0, kSector, kArray);
    CHECK(smoothed.matrix == estimate_spectral_matrix(s).matrix);
}

TEST_CASE("focusing transforms are unitary and align steering vectors") {
    for (double from : {1350.0, 1420.0, 1640.0}) {
        const auto t = focusing_transform(kSector, from, 1500.0, kArray);
        const CMatrix u = t.transform * t.transform.adjoint();
        CHECK((u - CMatrix::Identity(11, 11)).norm() < 1e-12);
        // least-squares optimal over unitaries, so never worse than leaving the bin alone
        const CMatrix g_from = build_dictionary(kSector, from, kArray).matrix();
        const CMatrix g_to = build_dictionary(kSector, 1500.0, kArray).matrix();
        CHECK((t.transform * g_from - g_to).norm() <= (g_from - g_to).norm());
        for (std::size_t q = 0; q < kSector.size(); q += 10) {
            const CVector miss = t.transform * steering_vector(kSector[q], from, kArray) -
                                 steering_vector(kSector[q], 1500.0, kArray);
            CHECK(miss.norm() / std::sqrt(11.0) <= t.fit_residual + 1e-12);
        }
    }
}

TEST_CASE("frequency smoothing restores the rank of coherent paths") {
    const RaypathSet rays({{-5.0, 1.0, 0.0}, {5.0, 1.0, 4e-3}});
    const Band band{1350.0, 1650.0};
    int restored = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto bins = synthesize_broadband(rays, band, 32, 150, {10.0, seed}, kArray);
        const auto smoothed = focus_and_smooth(bins, 1500.0, kSector, kArray);
        CHECK(hermitian_defect(smoothed.matrix) < 1e-12);
        CHECK(min_eigenvalue(smoothed.matrix) >= -1e-10 * smoothed.matrix.trace().real());
        if (signal_rank(smoothed) >= 2) ++restored;
        const auto& centre = bins[15];
        CHECK(signal_rank(estimate_spectral_matrix(centre)) == 1);
    }
    CHECK(restored >= 4);
}

TEST_CASE("smoothed rank does not drop as bins are added") {
    const RaypathSet rays({{-5.0, 1.0, 0.0}, {5.0, 1.0, 4e-3}});
    int previous = 0;
    for (int bins : {1, 2, 4, 8, 16, 32}) {
        const auto data = synthesize_broadband(rays, {1350.0, 1650.0}, bins, 150, {20.0, 3}, kArray);
        const int rank = signal_rank(focus_and_smooth(data, 1500.0, kSector, kArray));
        CHECK(rank >= previous);
        previous = rank;
    }
    CHECK(previous >= 2);
}

TEST_CASE("focus outside the bins is rejected") {
    const RaypathSet rays({{1.0, 1.0, 0.0}});
    const auto bins = synthesize_broadband(rays, {1000.0, 2000.0}, 4, 2, {}, kArray);
    CHECK_THROWS_AS(focus_and_smooth(bins, 2500.0, kSector, kArray), ValidationError);
    CHECK_THROWS_AS(focus_and_smooth({}, 1500.0, kSector, kArray), ValidationError);
}

TEST_CASE("matrix dump layout") {
    CMatrix m(1, 2);
    m << cdouble(1.5, -2.0), cdouble(0.1, 0.0);
    std::ostringstream os;
    write_matrix_csv(os, m);
    CHECK(os.str() == "1.5,-2,0.1,0\n");
}
