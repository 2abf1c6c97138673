// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "raysep/array_model.hpp"
#include "raysep/error.hpp"

using namespace raysep;

TEST_CASE("steering vector at broadside is all ones") {
    const ArrayGeometry g(11, 2.5);
    for (double f : {100.0, 1500.0, 9000.0}) {
        const CVector v = steering_vector(0.0, f, g);
        REQUIRE(v.size() == 11);
        for (int m = 0; m < 11; ++m) CHECK(v[m] == cdouble(1.0, 0.0));
    }
}

TEST_CASE("steering vector phase at 30 degrees") {
    const ArrayGeometry g(11, 2.5);
    const CVector v = steering_vector(30.0, 1500.0, g);
    // phase -2.5 pi on the second sensor
    CHECK(std::abs(v[1] - cdouble(0.0, -1.0)) < 1e-12);
    CHECK(v[0] == cdouble(1.0, 0.0));
}

TEST_CASE("half-wavelength pair at endfire") {
    const ArrayGeometry g(2, 0.5);
    const CVector v = steering_vector(90.0, 1500.0, g);
    CHECK(std::abs(v[0] - 1.0) < 1e-15);
    CHECK(std::abs(v[1] + 1.0) < 1e-12);
}

TEST_CASE("reference sensor carries unit phase") {
    const ArrayGeometry g(5, 1.0, 1500.0, 2);
    const CVector v = steering_vector(17.0, 1200.0, g);
    CHECK(v[2] == cdouble(1.0, 0.0));
    CHECK(std::abs(v[3] - std::conj(v[1])) < 1e-12);
}

TEST_CASE("negative angle conjugates the response") {
    const ArrayGeometry g(11, 2.5);
    const CVector a = steering_vector(7.3, 1500.0, g);
    const CVector b = steering_vector(-7.3, 1500.0, g);
    CHECK((a.conjugate() - b).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("steering vector rejects bad input") {
    const ArrayGeometry g(4, 0.5);
    CHECK_THROWS_AS(steering_vector(90.5, 1500.0, g), ValidationError);
    CHECK_THROWS_AS(steering_vector(10.0, 0.0, g), ValidationError);
    CHECK_THROWS_AS(steering_vector(10.0, -5.0, g), ValidationError);
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS(ArrayGeometry(1, 1.0), ValidationError);
    CHECK_THROWS_AS(ArrayGeometry(4, 0.0), ValidationError);
    CHECK_THROWS_AS(ArrayGeometry(4, 1.0, -1.0), ValidationError);
    CHECK_THROWS_AS(ArrayGeometry(4, 1.0, 1500.0, 4), ValidationError);
}

TEST_CASE("angle grids") {
    const AngleGrid d = AngleGrid::default_grid();
    CHECK(d.size() == 901);
    CHECK(d.front() == -90.0);
    CHECK(d.back() == 90.0);
    CHECK(d.resolution() == doctest::Approx(0.2));

    const AngleGrid g = AngleGrid::uniform(-1.0, 1.0, 0.5);
    CHECK(g.size() == 5);
    CHECK(g.nearest_index(0.24) == 2);
    CHECK(g.nearest_index(0.25) == 2);  // tie goes low
    CHECK(g.nearest_index(-50.0) == 0);

    CHECK_THROWS_AS(AngleGrid({1.0}), ValidationError);
    CHECK_THROWS_AS(AngleGrid({0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(AngleGrid({-91.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(AngleGrid::uniform(0.0, 1.0, 0.3), ValidationError);
}

TEST_CASE("three-point dictionary") {
    // Q must exceed M, so two sensors
    const ArrayGeometry g(2, 0.5);
    const auto dict = build_dictionary(AngleGrid({-10.0, 0.0, 10.0}), 1500.0, g);
    CHECK(dict.rows() == 2);
    CHECK(dict.cols() == 3);
    CHECK_THROWS_AS(build_dictionary(AngleGrid({-10.0, 0.0, 10.0}), 1500.0, ArrayGeometry(3, 0.5)),
                    ValidationError);
    for (int m = 0; m < 2; ++m) CHECK(dict.matrix()(m, 1) == cdouble(1.0, 0.0));
}

TEST_CASE("default dictionary shape, modulus and Vandermonde rows") {
    const ArrayGeometry g(11, 2.5);
    const AngleGrid grid = AngleGrid::default_grid();
    const auto dict = build_dictionary(grid, 1500.0, g);
    REQUIRE(dict.rows() == 11);
    REQUIRE(dict.cols() == 901);
    const CMatrix& G = dict.matrix();
    CHECK((G.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);

    double worst = 0.0;
    for (int q = 0; q < dict.cols(); ++q) {
        const cdouble ratio = G(1, q) / G(0, q);
        for (int m = 1; m + 1 < dict.rows(); ++m)
            worst = std::max(worst, std::abs(G(m + 1, q) / G(m, q) - ratio));
    }
    CHECK(worst < 1e-10);

    for (std::size_t q : {0u, 17u, 450u, 900u}) {
        const CVector v = steering_vector(grid[q], 1500.0, g);
        CHECK(v == CVector(dict.column(q)));
    }
}

TEST_CASE("alias-free sector") {
    const ArrayGeometry g(11, 2.5);
    // d / lambda = 2.5 at 1500 Hz: grating lobes sit 1 / 2.5 apart in sin(theta)
    CHECK(g.alias_free_half_sector(1500.0) == doctest::Approx(rad_to_deg(std::asin(0.2))));
    CHECK(ArrayGeometry(4, 0.5).alias_free_half_sector(1500.0) == doctest::Approx(90.0));
}

TEST_CASE("raypath set invariants") {
    const ArrayGeometry g(4, 0.5);
    RaypathSet ok({{1.0, 1.0, 0.0}, {2.0, 1.0, 0.0}});
    CHECK_NOTHROW(ok.validate_for(g));
    RaypathSet dup({{1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}});
    CHECK_THROWS_AS(dup.validate_for(g), ValidationError);
    RaypathSet many({{1.0, 1.0, 0.0}, {2.0, 1.0, 0.0}, {3.0, 1.0, 0.0}, {4.0, 1.0, 0.0}});
    CHECK_THROWS_AS(many.validate_for(g), ValidationError);
}
