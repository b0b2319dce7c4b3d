#include "helpers.hpp"

#include <doctest.h>

#include <atomic>
#include <sstream>

using namespace infhom;
using namespace infhom::testing;

namespace {

CellProblem problem(Formula f, const Mat& L, double R) {
    CellProblem p;
    p.formula = f;
    p.lambda = L;
    p.dim = static_cast<int>(L.cols());
    p.R = R;
    p.cells_per_unit = 4;
    return p;
}

CellProblem laminate(Formula f, double lambda, double R) {
    CellProblem p = problem(f, row({lambda}), R);
    p.micro.kind = ProcessKind::deterministic_periodic;
    p.micro.params.spacing = 1.0;
    p.micro.params.radius = 0.25;
    p.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
    return p;
}

}  // namespace

TEST_SUITE("homogenize") {

TEST_CASE("constant density: every formula is Jensen's value") {
    const Mat L = row({0.5, 1.5});
    for (Formula f : {Formula::dirichlet_trunc, Formula::convexification, Formula::periodization, Formula::buffer}) {
        CAPTURE(to_string(f));
        CellProblem p = problem(f, L, 4);
        p.micro.params.intensity = 0.5;
        const auto e = estimate_vbar(p, 3);
        CHECK(e.mean == doctest::Approx(L.squaredNorm()).epsilon(1e-12));
        CHECK(e.std_error == 0.0);
        CHECK(e.N == 3);
    }
}

TEST_CASE("laminate periodization is the harmonic mean") {
    for (double R : {2.0, 4.0}) {
        const auto e = estimate_vbar(laminate(Formula::periodization, 1.0, R), 1);
        CHECK(std::abs(e.mean - 1.6) <= 1e-6);
    }
}

TEST_CASE("dirichlet dominates convexification per realization") {
    CellProblem p = problem(Formula::dirichlet_trunc, row({0.8, -0.4}), 4);
    p.micro.params.intensity = 0.4;
    p.spec.inclusion_phase = PhaseFunction::indicator_ball(1.5, PhaseFunction::isotropic_quadratic(3.0));
    p.sweep.k_schedule = {1, 16, 256};
    CellProblem q = p;
    q.formula = Formula::convexification;
    const auto a = estimate_vbar(p, 4), b = estimate_vbar(q, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(a.realizations[i].solves.size() == b.realizations[i].solves.size());
        for (std::size_t j = 0; j < a.realizations[i].solves.size(); ++j)
            CHECK(a.realizations[i].solves[j].value >= b.realizations[i].solves[j].value - 1e-8);
    }
}

TEST_CASE("common random numbers across formulas") {
    CellProblem p = problem(Formula::dirichlet_trunc, row({1.0, 0.0}), 6);
    p.micro.params.intensity = 0.3;
    CellProblem q = p;
    q.formula = Formula::buffer;
    for (std::size_t i = 0; i < 3; ++i) CHECK(realization_sample(p, i, 6.0) == realization_sample(q, i, 6.0));
    CHECK_FALSE(realization_sample(p, 0, 6.0) == realization_sample(p, 1, 6.0));
}

TEST_CASE("aggregation") {
    HomogEstimate e;
    for (double v : {2.0, 2.0, 2.0}) {
        RealizationResult r;
        r.value = v;
        e.realizations.push_back(r);
    }
    aggregate(e);
    CHECK(e.mean == 2.0);
    CHECK(e.std_error == 0.0);
    e.realizations[0].value = 1.0;
    e.realizations[2].value = 3.0;
    aggregate(e);
    CHECK(e.mean == doctest::Approx(2.0));
    CHECK(e.std_error == doctest::Approx(1.0 / std::sqrt(3.0)));
    e.realizations[0].diverged = e.realizations[1].diverged = true;
    aggregate(e);
    CHECK(e.infeasible);
    CHECK(e.N == 1);
    CHECK(e.diverged_count == 2);
}

TEST_CASE("nonconvex estimate") {
    CellProblem inner = problem(Formula::nonconvex, row({0.7, 0.3}), 4);
    inner.micro.params.intensity = 0.4;
    inner.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(3.0);
    inner.restarts = 2;
    SUBCASE("gamma = 0 agrees with convexification") {
        inner.spec.nonconvex = NonconvexSpec{0.0, 1.0, NonconvexKind::oscillatory, row({1.0, 1.0})};
        CellProblem conv = inner;
        conv.formula = Formula::convexification;
        const auto w = estimate_wbar(inner, CorrectorConfig{0.0, CorrectorBC::convexification}, 3);
        const auto v = estimate_vbar(conv, 3);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(std::abs(w.realizations[i].value - v.realizations[i].value) <=
                  10 * inner.solver.tol_e * std::abs(v.realizations[i].value) + 1e-10);
    }
    SUBCASE("single phase: bounded by V + gamma cap") {
        inner.micro.params.intensity = 0.0;
        inner.spec.inclusion_phase = inner.spec.matrix_phase;
        inner.spec.nonconvex = NonconvexSpec{0.1, 1.0, NonconvexKind::oscillatory, row({2.0, 1.0})};
        const auto w = estimate_wbar(inner, CorrectorConfig{}, 2);
        CHECK(w.mean <= inner.lambda.squaredNorm() + 0.1 + 1e-12);
        CHECK(w.mean >= inner.lambda.squaredNorm() - 1e-8);
    }
}

TEST_CASE("convexity probe") {
    auto est = [](double mean, double se) {
        HomogEstimate e;
        e.mean = mean;
        e.std_error = se;
        return e;
    };
    // constant quadratic along a ray: V(2L) = 4 V(L), V(L / 2 * 3) at the midpoint
    const double v1 = 1.0, v2 = 9.0, mid = 4.0;
    auto ok = convexity_probe(est(v1, 0), est(v2, 0), est(mid, 0), 0.0);
    CHECK(ok.pass);
    CHECK(ok.chord == 5.0);
    auto bad = convexity_probe(est(1.0, 0.01), est(9.0, 0.01), est(5.5, 0.01), 0.1);
    CHECK_FALSE(bad.pass);
    CHECK(bad.tolerance == doctest::Approx(0.16));
    SUBCASE("laminate values") {
        HomogEstimate a = estimate_vbar(laminate(Formula::periodization, 0.5, 2), 1);
        HomogEstimate b = estimate_vbar(laminate(Formula::periodization, 1.5, 2), 1);
        HomogEstimate m = estimate_vbar(laminate(Formula::periodization, 1.0, 2), 1);
        CHECK(convexity_probe(a, b, m, 5 * 0.25).pass);
    }
}

TEST_CASE("R sweep") {
    SUBCASE("constant density") {
        CellProblem p = problem(Formula::convexification, row({1.0, 1.0}), 2);
        p.micro.params.intensity = 0.3;
        const auto rs = r_sweep(p, {2, 3, 4}, 2);
        for (const auto& e : rs.estimates) CHECK(e.mean == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("periodic laminate does not depend on R") {
        const auto rs = r_sweep(laminate(Formula::periodization, 1.0, 2), {2, 3, 4}, 1);
        for (const auto& e : rs.estimates) CHECK(std::abs(e.mean - rs.estimates.front().mean) <= 1e-8);
    }
}

TEST_CASE("t sweep extrapolates to the largest feasible t") {
    CellProblem p = problem(Formula::dirichlet_trunc, row({1.0, 0.0}), 4);
    const auto ts = t_sweep(p, {0.5, 0.9, 1.0}, 1);
    REQUIRE(ts.estimates.size() == 3);
    CHECK(ts.estimates[0].mean == doctest::Approx(0.25));
    CHECK(ts.extrapolated_value == doctest::Approx(1.0));
}

TEST_CASE("parallel index loop") {
    std::vector<std::atomic<int>> hits(50);
    parallel_for_index(50, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
    try {
        parallel_for_index(20, 3, [](std::size_t i) {
            if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
        });
        FAIL("no exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "7");
    }
}

TEST_CASE("results do not depend on the thread count") {
    CellProblem p = problem(Formula::dirichlet_trunc, row({0.6, 0.8}), 4);
    p.micro.params.intensity = 0.3;
    p.spec.inclusion_phase = PhaseFunction::indicator_ball(2.0, PhaseFunction::isotropic_quadratic(4.0));
    p.sweep.k_schedule = {1, 4, 16};
    std::ostringstream a, b;
    write_solves_csv(a, {estimate_vbar(p, 4, 1)}, false);
    write_solves_csv(b, {estimate_vbar(p, 4, 3)}, false);
    CHECK(a.str() == b.str());
}

TEST_CASE("problem validation") {
    CellProblem p = problem(Formula::dirichlet_trunc, row({1.0, 0.0}), 4);
    p.R = -1;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = problem(Formula::dirichlet_trunc, row({1.0, 0.0, 0.0}), 4);
    p.dim = 2;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    CHECK_THROWS_AS(formula_from_string("nope"), ParameterError);
    CHECK(formula_from_string("buffer") == Formula::buffer);
}

}
