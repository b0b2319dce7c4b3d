#include "helpers.hpp"

#include <doctest.h>

using namespace infhom;
using namespace infhom::testing;

TEST_SUITE("oracle") {

TEST_CASE("legendre conjugate of a quadratic") {
    for (double a : {0.5, 1.0, 4.0})
        for (double s : {-3.0, -0.2, 0.0, 1.7}) {
            auto f = [a](double x) { return ExtReal(a * x * x); };
            CHECK(std::abs(legendre_conjugate(f, s) - s * s / (4 * a)) <= 1e-8);
        }
    // indicator of [-1, 1]: conjugate |s|
    auto ind = [](double x) { return std::abs(x) <= 1.0 ? ExtReal(0.0) : ExtReal::infinity(); };
    CHECK(legendre_conjugate(ind, -2.5, 1.0) == doctest::Approx(2.5).epsilon(1e-8));
}

TEST_CASE("1D laminate") {
    const auto q1 = PhaseFunction::isotropic_quadratic(1.0), q4 = PhaseFunction::isotropic_quadratic(4.0);
    CHECK(laminate_1d_vbar({{q4}, {1.0}, 2.0}, 1.3) == doctest::Approx(4.0 * 1.69).epsilon(1e-9));
    for (double L : {0.5, 1.0, 2.0}) CHECK(std::abs(laminate_1d_vbar({{q1, q4}, {0.5, 0.5}, 2.0}, L) - 1.6 * L * L) <= 1e-8);
    // stiff inclusion with a bounded domain: the soft phase takes up the strain
    const auto ball = PhaseFunction::indicator_ball(0.5, PhaseFunction::zero());
    CHECK(laminate_1d_vbar({{q1, ball}, {0.5, 0.5}, 2.0}, 0.2) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS(LaminateSpec({{q1}, {0.7}, 2.0}).validate(), ParameterError);
}

TEST_CASE("constant media") {
    CHECK(constant_vbar(PhaseFunction::isotropic_quadratic(1.0), row({1.2, 1.6})).value() == doctest::Approx(4.0));
    CHECK(constant_vbar(PhaseFunction::indicator_ball(1.0, PhaseFunction::zero()), row({1.2, 1.6})).is_infinite());
    CHECK(constant_vbar(PhaseFunction::barrier(1.0, 1.0, 2.0), row({0.9})).value() ==
          doctest::Approx(0.81 / 0.19).epsilon(1e-14));
}

TEST_CASE("brute force minimum") {
    IntegrandSpec spec;
    SUBCASE("constant density") {
        const Grid g = Grid::make(2, 2.0, 3, false);
        const auto r = brute_force_min(g, spec, Medium{}, BCSpec::dirichlet_affine(row({0.5, 0.5})), std::nullopt, 1.0);
        CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
        for (double v : r.minimizer) CHECK(std::abs(v) <= 1e-9);
        CHECK(r.method == "linear");
        CHECK(r.free_dims == 4);
    }
    SUBCASE("matches the descent solver on small convex problems") {
        spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::isotropic_quadratic(3.0));
        const Grid g = Grid::make(2, 2.0, 3, false);
        const Medium med(one_ball(2, 2.0, {0.3, -0.2, 0}, 0.6));
        const auto bc = BCSpec::dirichlet_affine(row({1.2, 0.4}));
        const auto bf = brute_force_min(g, spec, med, bc, Truncation{9.0}, 1.0);
        const auto s = minimize_convex(g, spec, med, bc, Truncation{9.0}, 1.0, {}).second;
        CHECK(bf.method == "newton");
        CHECK(std::abs(bf.value - s.final_energy) <= 1e-8);
    }
    SUBCASE("nonconvex scan brackets the multistart from below") {
        spec.nonconvex = NonconvexSpec{0.5, 1.0, NonconvexKind::oscillatory, row({4.0})};
        const Grid g = Grid::make(1, 2.0, 2, false);
        const Field bd = Field::affine(g, row({0.8}));
        BruteForceOptions o;
        o.nonconvex = true;
        const auto bf = brute_force_min(g, spec, Medium{}, BCSpec::dirichlet_data(bd), std::nullopt, 1.0, o);
        const auto ms = solve_nonconvex(g, spec, Medium{}, bd, 1.0, 8, 1, {}).second;
        CHECK(bf.method == "scan");
        CHECK(bf.value <= ms.final_energy + 1e-6);
    }
    SUBCASE("too many free values") {
        const Grid g = Grid::make(2, 2.0, 4, false);
        CHECK_THROWS_AS(brute_force_min(g, spec, Medium{}, BCSpec::dirichlet_affine(row({1.0, 0})), std::nullopt, 1.0),
                        UnsupportedError);
    }
}

}
