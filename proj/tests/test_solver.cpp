#include "helpers.hpp"

#include <doctest.h>

using namespace infhom;
using namespace infhom::testing;

TEST_SUITE("solver") {

TEST_CASE("constant density converges immediately") {
    IntegrandSpec spec;
    const Mat L = row({1.1, 0.4});
    const Grid g = Grid::make(2, 4.0, 8, false);
    const auto [f, rep] = minimize_convex(g, spec, Medium{}, BCSpec::dirichlet_affine(L), std::nullopt, 1.0, {});
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
    CHECK(rep.final_energy == doctest::Approx(L.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("accepted steps never increase the energy") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.5, PhaseFunction::isotropic_quadratic(3.0));
    const Grid g = Grid::make(2, 6.0, 24, false);
    const Medium med(sample_poisson(0.3, BoxSpec{2, 6, false}, 4, "s"));
    SolverOptions opt;
    opt.keep_trace = true;
    for (bool pre : {false, true}) {
        opt.precondition = pre;
        const auto rep =
            minimize_convex(g, spec, med, BCSpec::dirichlet_affine(row({1.6, 0.8})), Truncation{64.0}, 1.0, opt).second;
        REQUIRE(rep.energy_trace.size() >= 2);
        for (std::size_t i = 1; i < rep.energy_trace.size(); ++i) CHECK(rep.energy_trace[i] <= rep.energy_trace[i - 1]);
    }
}

TEST_CASE("two-phase 1D Dirichlet problem matches the harmonic-mean solution") {
    // cells of width 1 with coefficients 1, 1, 4: minimum 3 L^2 / (1 + 1 + 1/4)
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
    const Grid g = Grid::make(1, 3.0, 3, false);
    const Medium med(one_ball(1, 3.0, {1.0, 0, 0}, 0.5));
    const double want = 3.0 / 2.25;
    const auto rep = minimize_convex(g, spec, med, BCSpec::dirichlet_affine(row({1.0})), std::nullopt, 1.0, {}).second;
    CHECK(std::abs(rep.final_energy - want) <= 1e-8);
    CHECK(std::abs(brute_force_min(g, spec, med, BCSpec::dirichlet_affine(row({1.0})), std::nullopt, 1.0).value - want) <=
          1e-12);
}

TEST_CASE("preconditioning does not change the minimum") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::isotropic_quadratic(4.0));
    const Grid g = Grid::make(2, 6.0, 24, false);
    const Medium med(sample_poisson(0.3, BoxSpec{2, 6, false}, 6, "s"));
    SolverOptions a, b;
    b.precondition = false;
    for (const auto& bc : {BCSpec::dirichlet_affine(row({2.0, 1.0})), BCSpec::mean_zero(row({2.0, 1.0}))}) {
        const double ea = minimize_convex(g, spec, med, bc, Truncation{256.0}, 1.0, a).second.final_energy;
        const double eb = minimize_convex(g, spec, med, bc, Truncation{256.0}, 1.0, b).second.final_energy;
        CHECK(rel_err(ea, eb) <= 1e-8);
    }
}

TEST_CASE("infinite start is a domain error") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
    const Grid g = Grid::make(2, 4.0, 8, false);
    const Medium med(one_ball(2, 4, {0, 0, 0}, 1.0));
    CHECK_THROWS_AS(minimize_convex(g, spec, med, BCSpec::dirichlet_affine(row({2.0, 0})), std::nullopt, 1.0, {}),
                    DomainError);
}

TEST_CASE("divergence detector") {
    const std::vector<double> k{1, 4, 16, 64, 256};
    std::vector<double> linear, saturating;
    for (double x : k) {
        linear.push_back(3.0 + 0.5 * x);
        saturating.push_back(3.0 - 1.0 / x);
    }
    CHECK(detect_divergence(k, linear, 1e-4));
    CHECK_FALSE(detect_divergence(k, saturating, 1e-4));
    const std::vector<double> flat{2, 2, 2, 2, 2};
    CHECK_FALSE(detect_divergence(k, flat, 1e-4));
}

TEST_CASE("truncation sweep") {
    IntegrandSpec spec;
    SolverOptions opt;
    SUBCASE("constant density stabilizes at once") {
        const Grid g = Grid::make(2, 4.0, 8, false);
        const auto r = truncation_sweep(g, spec, Medium{}, BCSpec::dirichlet_affine(row({0.6, 0.8})), SweepOptions{}, 1.0,
                                        opt);
        CHECK(r.stabilized);
        CHECK_FALSE(r.diverged);
        for (double e : r.energies) CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.extrapolated_value == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("monotone in k for a feasible slope") {
        spec.inclusion_phase = PhaseFunction::indicator_ball(2.0, PhaseFunction::isotropic_quadratic(4.0));
        const Grid g = Grid::make(2, 8.0, 32, false);
        const Medium med(sample_poisson(0.3, BoxSpec{2, 8, false}, 21, "s"));
        SweepOptions so;
        so.k_schedule = {1, 4, 16, 64, 256, 1024, 4096};
        const auto r = truncation_sweep(g, spec, med, BCSpec::dirichlet_affine(row({0.6, 0.8})), so, 1.0, opt);
        for (std::size_t i = 1; i < r.energies.size(); ++i)
            CHECK(r.energies[i] >= r.energies[i - 1] - 10 * opt.tol_e * std::abs(r.energies[i]));
        CHECK(r.stabilized);
        CHECK_FALSE(r.diverged);
    }
    SUBCASE("rigid inclusion straddling the boundary diverges") {
        spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
        const Grid g = Grid::make(2, 4.0, 16, false);
        // the boundary data along x = 2 has slope 1.5 > r inside the inclusion
        const Medium med(one_ball(2, 4, {1.8, 0.0, 0}, 0.7));
        const auto r = truncation_sweep(g, spec, med, BCSpec::dirichlet_affine(row({0.5, 1.5})), SweepOptions{}, 1.0, opt);
        CHECK(r.diverged);
        CHECK_FALSE(r.stabilized);
    }
}

TEST_CASE("nonconvex solve") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::isotropic_quadratic(3.0);
    const Grid g = Grid::make(2, 4.0, 8, false);
    const Medium med(sample_poisson(0.4, BoxSpec{2, 4, false}, 13, "nc"));
    const Mat L = row({0.9, -0.6});
    const Field bd = Field::affine(g, L);
    SolverOptions opt;
    const double convex = minimize_convex(g, spec, med, BCSpec::dirichlet_affine(L), std::nullopt, 1.0, opt)
                              .second.final_energy;
    SUBCASE("gamma = 0 is the convex problem") {
        spec.nonconvex = NonconvexSpec{0.0, 1.0, NonconvexKind::oscillatory, row({3.0, 1.0})};
        CHECK(std::abs(solve_nonconvex(g, spec, med, bd, 1.0, 2, 5, opt).second.final_energy - convex) <= 1e-8);
    }
    SUBCASE("bounded below by the convex energy, multistart helps") {
        spec.nonconvex = NonconvexSpec{0.4, 1.0, NonconvexKind::oscillatory, row({3.0, 1.0})};
        const auto r0 = solve_nonconvex(g, spec, med, bd, 1.0, 0, 5, opt).second;
        const auto r8 = solve_nonconvex(g, spec, med, bd, 1.0, 8, 5, opt).second;
        CHECK(r0.final_energy >= convex - 1e-8);
        CHECK(r8.final_energy >= convex - 1e-8);
        CHECK(r8.final_energy <= r0.final_energy);
        CHECK(r8.restarts_used == 9);
    }
}

TEST_CASE("scalar truncation") {
    const Grid g = Grid::make(1, 3.0, 3, false);
    Field ref = Field::zeros(g, 1, FieldBC::free), f = ref;
    for (std::size_t n = 0; n < g.node_count(); ++n) ref.at(n, 0) = 0.5 * static_cast<double>(n);
    const double dev[] = {3.0, -3.0, 1.0, 2.0};
    for (std::size_t n = 0; n < 4; ++n) f.at(n, 0) = ref.at(n, 0) + dev[n];
    const Field t = truncate_scalar(f, 2.0, ref);
    const double want[] = {2.0, -2.0, 1.0, 2.0};
    for (std::size_t n = 0; n < 4; ++n) CHECK(t.at(n, 0) - ref.at(n, 0) == doctest::Approx(want[n]));
    CHECK_THROWS_AS(truncate_scalar(f, 0.0, ref), ParameterError);
}

}
