#include "helpers.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace infhom;
using namespace infhom::testing;

namespace {

Field random_field(const Grid& g, int m, FieldBC bc, std::uint64_t seed, double amp = 0.3) {
    Field f = Field::zeros(g, m, bc);
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    for (std::size_t n = 0; n < g.node_count(); ++n)
        for (int c = 0; c < m; ++c)
            if (bc != FieldBC::dirichlet_zero || !g.is_boundary_node(n)) f.at(n, c) = u(eng);
    return f;
}

double max_fd_error(const Grid& g, Field f, const IntegrandSpec& spec, const Medium& med, const BCSpec& bc,
                    const std::optional<Truncation>& k) {
    const auto grad = energy_gradient(g, f, spec, med, bc, k);
    const CellEnergy E(g, spec, med, bc, k);
    double worst = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (E.constrained()[i]) {
            worst = std::max(worst, std::abs(grad[i]));
            continue;
        }
        const double h = 1e-6, x = f.values[i];
        f.values[i] = x + h;
        const double ep = energy(g, f, spec, med, bc, k).value();
        f.values[i] = x - h;
        const double em = energy(g, f, spec, med, bc, k).value();
        f.values[i] = x;
        const double fd = (ep - em) / (2 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-3, std::abs(grad[i])));
    }
    return worst;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("grid indexing") {
    const Grid g = Grid::make(2, 4.0, 4, false);
    CHECK(g.node_count() == 25);
    CHECK(g.h() == 1.0);
    for (std::size_t n = 0; n < g.node_count(); ++n) CHECK(g.node_index(g.node_multi(n)) == n);
    CHECK(g.node_position(0)[0] == -2.0);
    CHECK(g.is_boundary_node(0));
    CHECK_FALSE(g.is_boundary_node(12));
    const Grid p = Grid::make(2, 4.0, 4, true);
    CHECK(p.node_count() == 16);
    CHECK(p.node_index({4, -1, 0}) == p.node_index({0, 3, 0}));
    CHECK_THROWS_AS(Grid::make(4, 1.0, 2, false), ParameterError);
    CHECK_THROWS_AS(Grid::make(2, 1.0, 1, false), ParameterError);
}

TEST_CASE("constant density with zero corrector is exact") {
    IntegrandSpec spec;
    const Mat L = row({0.9, -1.7});
    for (int n : {2, 3, 8}) {
        const Grid g = Grid::make(2, 3.0, n, false);
        CHECK(energy(g, Field::zeros(g, 1, FieldBC::dirichlet_zero), spec, Medium{}, BCSpec::dirichlet_affine(L))
                  .value() == doctest::Approx(L.squaredNorm()).epsilon(1e-14));
    }
}

TEST_CASE("infeasible state has infinite energy") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
    const Grid g = Grid::make(2, 4.0, 8, false);
    const Medium med(one_ball(2, 4, {0.3, 0.3, 0}, 0.6));
    CHECK(energy(g, Field::zeros(g, 1, FieldBC::dirichlet_zero), spec, med, BCSpec::dirichlet_affine(row({2.0, 0})))
              .is_infinite());
    CHECK_THROWS_AS(energy_gradient(g, Field::zeros(g, 1, FieldBC::dirichlet_zero), spec, med,
                                    BCSpec::dirichlet_affine(row({2.0, 0}))),
                    DomainError);
    CHECK(energy(g, Field::zeros(g, 1, FieldBC::dirichlet_zero), spec, med, BCSpec::dirichlet_affine(row({2.0, 0})),
                 Truncation{4.0})
              .is_finite());
}

TEST_CASE("two-cell hand computation in 1D") {
    // nodes -1, 0, 1; phi(0) = a; cell gradients 1 + a and 1 - a
    const Grid g = Grid::make(1, 2.0, 2, false);
    Field f = Field::zeros(g, 1, FieldBC::dirichlet_zero);
    f.at(1, 0) = 0.5;
    IntegrandSpec spec;
    CHECK(std::abs(energy(g, f, spec, Medium{}, BCSpec::dirichlet_affine(row({1.0}))).value() - 1.25) <= 1e-14);
    // second cell inside an inclusion with density 4 F^2
    spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
    const Medium med(one_ball(1, 2.0, {0.5, 0, 0}, 0.5));
    CHECK(std::abs(energy(g, f, spec, med, BCSpec::dirichlet_affine(row({1.0}))).value() - 1.625) <= 1e-14);
    // t scales the total gradient
    CHECK(std::abs(energy(g, f, spec, med, BCSpec::dirichlet_affine(row({1.0})), std::nullopt, 0.5).value() -
                   0.25 * 1.625) <= 1e-14);
}

TEST_CASE("energy gradient") {
    IntegrandSpec spec;
    SUBCASE("zero at the minimum of a constant density") {
        const Grid g = Grid::make(2, 2.0, 4, false);
        const auto grad = energy_gradient(g, Field::zeros(g, 1, FieldBC::dirichlet_zero), spec, Medium{},
                                          BCSpec::dirichlet_affine(row({0.0, 0.0})));
        for (double v : grad) CHECK(v == 0.0);
    }
    SUBCASE("finite differences, 1D n=4") {
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(3.0);
        const Grid g = Grid::make(1, 4.0, 4, false);
        const Medium med(one_ball(1, 4.0, {0.3, 0, 0}, 0.8));
        const Field f = random_field(g, 1, FieldBC::dirichlet_zero, 1);
        CHECK(max_fd_error(g, f, spec, med, BCSpec::dirichlet_affine(row({0.7})), std::nullopt) < 1e-6);
    }
    SUBCASE("finite differences, 2D periodic with truncated ball") {
        spec.inclusion_phase = PhaseFunction::indicator_ball(0.8, PhaseFunction::isotropic_quadratic(2.0));
        const Grid g = Grid::make(2, 3.0, 6, true);
        const Medium med(sample_poisson(0.5, BoxSpec{2, 3.0, false}, 2, "g"));
        const Field f = random_field(g, 1, FieldBC::periodic, 2);
        CHECK(max_fd_error(g, f, spec, med, BCSpec::periodic(row({0.9, 0.4})), Truncation{10.0}) < 1e-6);
    }
    SUBCASE("finite differences, vector field with buffer") {
        spec.m = 2;
        spec.inclusion_phase = PhaseFunction::indicator_ball(0.5, PhaseFunction::zero());
        const Grid g = Grid::make(2, 4.0, 8, false);
        const Medium med(sample_poisson(0.5, BoxSpec{2, 4.0, false}, 3, "g"));
        Mat L(2, 2);
        L << 0.3, 0.1, -0.2, 0.2;
        const Field f = random_field(g, 2, BCSpec::buffer(L, 1.0).field_bc(), 4, 0.05);
        CHECK(max_fd_error(g, f, spec, med, BCSpec::buffer(L, 1.0), Truncation{4.0}) < 1e-6);
    }
    SUBCASE("periodic assembly equals the sum over identified nodes") {
        // gradient of E(phi) w.r.t. a periodic node equals the sum of the non-periodic
        // gradient entries over its copies when the field is the periodic extension
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(2.0);
        const Medium med(sample_poisson(0.5, BoxSpec{2, 3.0, false}, 5, "g"));
        const Grid gp = Grid::make(2, 3.0, 6, true), gf = Grid::make(2, 3.0, 6, false);
        const Field fp = random_field(gp, 1, FieldBC::periodic, 6);
        Field ff = Field::zeros(gf, 1, FieldBC::free);
        for (std::size_t n = 0; n < gf.node_count(); ++n) ff.at(n, 0) = fp.at(gp.node_index(gf.node_multi(n)), 0);
        const Mat L = row({0.5, 0.2});
        const auto a = energy_gradient(gp, fp, spec, med, BCSpec::periodic(L));
        const auto b = energy_gradient(gf, ff, spec, med, BCSpec::mean_zero(L));
        std::vector<double> summed(gp.node_count(), 0.0);
        for (std::size_t n = 0; n < gf.node_count(); ++n) summed[gp.node_index(gf.node_multi(n))] += b[n];
        for (std::size_t n = 0; n < gp.node_count(); ++n) CHECK(a[n] == doctest::Approx(summed[n]).epsilon(1e-12));
    }
}

TEST_CASE("mean gradient") {
    const Grid g = Grid::make(2, 4.0, 5, false);
    CHECK(mean_gradient(Field::zeros(g, 1, FieldBC::free)).norm() == 0.0);
    Mat G(2, 2);
    G << 0.3, -1.2, 2.5, 0.7;
    CHECK((mean_gradient(Field::affine(g, G)) - G).norm() <= 1e-14);
    const Grid p = Grid::make(2, 4.0, 5, true);
    CHECK(mean_gradient(random_field(p, 2, FieldBC::periodic, 9)).norm() <= 1e-12);
    SUBCASE("adjoint") {
        const Field f = random_field(g, 2, FieldBC::free, 10);
        const auto adj = mean_gradient_adjoint(g, G);
        double lhs = 0;
        for (std::size_t i = 0; i < adj.size(); ++i) lhs += adj[i] * f.values[i];
        CHECK(lhs == doctest::Approx((G.array() * mean_gradient(f).array()).sum()).epsilon(1e-12));
    }
}

TEST_CASE("mean-zero projection") {
    const Grid g = Grid::make(2, 4.0, 6, false);
    const Field f = random_field(g, 1, FieldBC::free, 11);
    const Field p = project_mean_zero(f);
    CHECK(mean_gradient(p).norm() <= 1e-12);
    const Field pp = project_mean_zero(p);
    for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(std::abs(pp.values[i] - p.values[i]) <= 1e-14);
    for (double v : project_mean_zero(Field::affine(g, row({1.5, -0.5}))).values) CHECK(std::abs(v) <= 1e-14);
    SUBCASE("energy of a projected field sees the shifted background") {
        // E(Lambda, phi) = E(Lambda + G, P phi) with G the mean gradient of phi
        IntegrandSpec spec;
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(3.0);
        const Medium med(sample_poisson(0.4, BoxSpec{2, 4, false}, 1, "p"));
        const Mat L = row({0.4, 0.9});
        const Mat G = mean_gradient(f);
        const double a = energy(g, f, spec, med, BCSpec::mean_zero(L)).value();
        const double b = energy(g, p, spec, med, BCSpec::mean_zero(Mat(L + G))).value();
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("curvature matrix is symmetric positive definite") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(0.5, PhaseFunction::isotropic_quadratic(2.0));
    const Grid g = Grid::make(2, 3.0, 6, false);
    const Medium med(sample_poisson(0.6, BoxSpec{2, 3, false}, 8, "c"));
    const CellEnergy E(g, spec, med, BCSpec::dirichlet_affine(row({1.0, 0.5})), Truncation{100.0});
    const Eigen::MatrixXd K = Eigen::MatrixXd(E.curvature_matrix(std::vector<double>(E.size(), 0.0)));
    CHECK((K - K.transpose()).norm() <= 1e-12 * K.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("field text round trip") {
    const Grid g = Grid::make(3, 2.0, 3, false);
    const Field f = random_field(g, 3, FieldBC::free, 12);
    std::stringstream ss;
    write_field(ss, f);
    const Field b = read_field(ss);
    CHECK(b.grid == g);
    CHECK(b.values == f.values);
}

}
