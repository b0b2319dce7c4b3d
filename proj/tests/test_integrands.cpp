#include "helpers.hpp"

#include <doctest.h>

#include <functional>
#include <random>

using namespace infhom;
using namespace infhom::testing;

namespace {

Mat random_mat(std::mt19937_64& eng, int m, int d, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Mat F(m, d);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j) F(i, j) = u(eng);
    return F;
}

// central differences, h = 1e-5, relative tolerance 1e-5
bool fd_agrees(const std::function<double(const Mat&)>& f, const Mat& g, const Mat& F) {
    const double h = 1e-5;
    for (int i = 0; i < F.rows(); ++i)
        for (int j = 0; j < F.cols(); ++j) {
            Mat a = F, b = F;
            a(i, j) += h;
            b(i, j) -= h;
            const double fd = (f(a) - f(b)) / (2 * h);
            if (std::abs(fd - g(i, j)) > 1e-5 * std::max(1.0, std::abs(g(i, j)))) return false;
        }
    return true;
}

struct Variant {
    const char* name;
    IntegrandSpec spec;
    Region region;
    std::optional<Truncation> trunc;
    double scale;
    int m = 1, d = 2;
};

}  // namespace

TEST_SUITE("integrands") {

TEST_CASE("convex evaluation") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
    const Medium empty;
    const Mat L = row({1.2, 1.6});  // |L|^2 = 4
    CHECK(eval_convex(spec, empty, {0.3, 0.1, 0}, L).value() == doctest::Approx(4.0));
    const Medium one(one_ball(2, 4, {0, 0, 0}, 1.0));
    CHECK(eval_convex(spec, one, {0.1, 0.0, 0}, L).is_infinite());
    CHECK(eval_convex(spec, one, {1.5, 0.0, 0}, L).value() == doctest::Approx(4.0));
}

TEST_CASE("nonconvex two-sided bound") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::isotropic_quadratic(3.0);
    spec.nonconvex = NonconvexSpec{0.5, 1.0, NonconvexKind::oscillatory, row({1.0, 1.0})};
    const Medium med(sample_poisson(0.4, BoxSpec{2, 6, false}, 5, "nc"));
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 200; ++i) {
        const Point y{u(eng), u(eng), 0};
        const Mat F = random_mat(eng, 1, 2, 2.0);
        const double v = eval_convex(spec, med, y, F).value();
        const double w = eval_nonconvex(spec, med, y, F).value();
        CHECK(v <= w);
        CHECK(w <= v + 0.5 + 1e-14);
    }
    CHECK(growth_constant(spec) == doctest::Approx(1.5));
}

TEST_CASE("sup envelope") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
    CHECK(sup_envelope(spec, row({0.0, 0.0})).value() == 0.0);
    CHECK(sup_envelope(spec, row({0.3, 0.4})).value() == doctest::Approx(0.25));
    CHECK(sup_envelope(spec, row({1.2, 1.6})).is_infinite());
}

TEST_CASE("yosida closed forms") {
    const Medium one(one_ball(2, 4, {0, 0, 0}, 1.0));
    const Point inside{0, 0, 0};
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
    std::mt19937_64 eng(7);
    for (double k : {1.0, 4.0, 37.0, 1024.0}) {
        for (int i = 0; i < 20; ++i) {
            const Mat F = random_mat(eng, 1, 2, 2.5);
            const double s = F.norm();
            const double ind = yosida_truncate(spec, Truncation{k}, one, inside, F);
            CHECK(ind == doctest::Approx(k * std::pow(std::max(s - 1.0, 0.0), 2)).epsilon(1e-10));
            const Mat g = grad_lambda(spec, DensityKind::truncated, one, inside, F,
                                      Truncation{k, TruncationScheme::full_yosida});
            const Mat want = s > 1.0 ? Mat(2 * k * (s - 1.0) / s * F) : Mat(Mat::Zero(1, 2));
            CHECK((g - want).norm() <= 1e-8 * std::max(1.0, want.norm()));
        }
    }
    IntegrandSpec quad;
    quad.inclusion_phase = PhaseFunction::isotropic_quadratic(1.0);
    for (double k : {0.5, 1.0, 9.0}) {
        const Mat F = row({0.7, -1.1});
        CHECK(yosida_truncate(quad, Truncation{k}, one, inside, F) ==
              doctest::Approx(k * F.squaredNorm() / (k + 1)).epsilon(1e-10));
    }
}

TEST_CASE("truncation increases to the untruncated value") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::barrier(1.5, 1.0, 2.0);
    const Medium one(one_ball(2, 4, {0, 0, 0}, 1.0));
    const Mat F = row({0.6, 0.7});
    const double v = eval_convex(spec, one, {0, 0, 0}, F).value();
    double prev = -1.0, prev_gap = INFINITY;
    for (double k = 1; k <= 4096; k *= 4) {
        const double vk = yosida_truncate(spec, Truncation{k}, one, {0, 0, 0}, F);
        CHECK(vk <= v + 1e-12);
        CHECK(vk >= prev - 1e-12);
        CHECK(v - vk <= prev_gap + 1e-12);
        prev = vk;
        prev_gap = v - vk;
    }
    CHECK(prev_gap < 1e-2);
}

TEST_CASE("gradients") {
    IntegrandSpec spec;
    const Medium empty;
    const Mat L = row({0.4, -1.3});
    CHECK((grad_lambda(spec, DensityKind::convex, empty, {0, 0, 0}, L) - 2 * L).norm() < 1e-14);
}

TEST_CASE("finite-difference agreement at 100 random points per variant") {
    std::vector<Variant> vs;
    auto base = [] { return IntegrandSpec{}; };
    {
        auto s = base();
        s.matrix_phase = PhaseFunction::power_law(1.5, 3.0);
        s.p = 3.0;
        vs.push_back({"power law p=3", s, Region::matrix, std::nullopt, 2.0});
    }
    {
        auto s = base();
        Eigen::MatrixXd A(2, 2);
        A << 2.0, 0.3, 0.3, 1.0;
        s.inclusion_phase = PhaseFunction::quadratic(A);
        vs.push_back({"anisotropic quadratic", s, Region::inclusion, std::nullopt, 2.0});
    }
    {
        auto s = base();
        s.inclusion_phase = PhaseFunction::barrier(2.0, 1.0, 2.0);
        vs.push_back({"barrier inside its domain", s, Region::inclusion, std::nullopt, 1.3});
    }
    for (auto scheme : {TruncationScheme::constraint_yosida, TruncationScheme::full_yosida}) {
        auto s = base();
        s.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::isotropic_quadratic(4.0));
        vs.push_back({"truncated ball", s, Region::inclusion, Truncation{16.0, scheme}, 2.5});
        auto b = base();
        b.inclusion_phase = PhaseFunction::barrier(1.0, 1.0, 2.0);
        vs.push_back({"truncated barrier", b, Region::inclusion, Truncation{8.0, scheme}, 2.5});
    }
    {
        auto s = base();
        s.p = 2.5;
        vs.push_back({"buffer", s, Region::buffer, std::nullopt, 2.0});
    }
    {
        auto s = base();
        s.m = 2;
        Mat xi(2, 2);
        xi << 1.0, 0.5, -0.3, 0.8;
        s.nonconvex = NonconvexSpec{0.7, 0.5, NonconvexKind::oscillatory, xi};
        vs.push_back({"oscillatory", s, Region::matrix, std::nullopt, 2.0, 2, 2});
        s.nonconvex->kind = NonconvexKind::det_well;
        vs.push_back({"det well", s, Region::matrix, std::nullopt, 1.5, 2, 2});
    }
    std::mt19937_64 eng(2024);
    for (const auto& v : vs) {
        CAPTURE(v.name);
        int bad = 0;
        for (int i = 0; i < 100; ++i) {
            const Mat F = random_mat(eng, v.m, v.d, v.scale);
            const bool nc = static_cast<bool>(v.spec.nonconvex);
            auto f = [&](const Mat& G) { return evaluate_region(v.spec, v.region, G, v.trunc, nc, false).value.value(); };
            const Evaluation e = evaluate_region(v.spec, v.region, F, v.trunc, nc, true);
            if (!fd_agrees(f, e.gradient, F)) ++bad;
        }
        CHECK(bad == 0);
    }
}

TEST_CASE("buffer modification") {
    IntegrandSpec spec;
    spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
    spec.p = 2.0;
    const Medium med(one_ball(2, 4, {1.5, 0, 0}, 1.0));
    const Mat L = row({2.0, 0.5});
    for (const Point y : {Point{0, 0, 0}, Point{1.5, 0, 0}, Point{-1.9, 1.0, 0}}) {
        CHECK(buffer_modify(spec, med, y, L, 4.0, 0.0) == eval_convex(spec, med, y, L));
        CHECK(buffer_modify(spec, med, y, L, 4.0, 8.0).value() == doctest::Approx(L.squaredNorm()));
    }
    // inside an inclusion but in the buffer: finite
    CHECK(buffer_modify(spec, med, {1.8, 0, 0}, L, 4.0, 0.5).value() == doctest::Approx(L.squaredNorm()));
    CHECK(buffer_modify(spec, med, {1.2, 0, 0}, L, 4.0, 0.5).is_infinite());
}

TEST_CASE("phase validation") {
    CHECK_THROWS_AS(PhaseFunction::power_law(1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(PhaseFunction::indicator_ball(-1.0, PhaseFunction::zero()), ParameterError);
    IntegrandSpec s;
    s.p = 1.0;
    CHECK_THROWS_AS(s.validate(2), ParameterError);
    s.p = 2.0;
    s.matrix_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
    CHECK_THROWS_AS(s.validate(2), ParameterError);
}

}
