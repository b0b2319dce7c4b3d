#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace infhom;
using namespace infhom::testing;

namespace {

double min_pair_distance(const PointSample& s) {
    double best = INFINITY;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            double d2 = 0;
            for (int k = 0; k < s.box.dim; ++k) d2 += std::pow(s.points[i][k] - s.points[j][k], 2);
            best = std::min(best, std::sqrt(d2));
        }
    return best;
}

}  // namespace

TEST_SUITE("microstructure") {

TEST_CASE("poisson: zero intensity is empty") {
    for (int d = 1; d <= 3; ++d) CHECK(sample_poisson(0.0, BoxSpec{d, 5.0, false}, 3, "a").size() == 0);
}

TEST_CASE("poisson: mean count matches intensity times volume") {
    const BoxSpec box{2, 10.0, false};
    double sum = 0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) sum += static_cast<double>(sample_poisson(1.0, box, s, "count").size());
    // sd of the mean is sqrt(100 / n) = 0.1
    CHECK(std::abs(sum / n - 100.0) <= 0.3);
}

TEST_CASE("poisson: same seed and label give identical points") {
    const BoxSpec box{3, 6.0, false};
    const auto a = sample_poisson(0.7, box, 42, "a");
    const auto b = sample_poisson(0.7, box, 42, "a");
    CHECK(a == b);
    CHECK(a.points == b.points);
    CHECK_FALSE(sample_poisson(0.7, box, 42, "b").points == a.points);
    for (const auto& p : a.points) CHECK(box.contains(p));
}

TEST_CASE("graphical construction") {
    SUBCASE("single candidate is accepted") {
        const auto acc = graphical_construction({{{0.3, 0.1, 0}, 0.5}}, 2, 1.0);
        REQUIRE(acc.size() == 1);
        CHECK(acc[0] == 0);
    }
    SUBCASE("earlier mark wins a conflict") {
        const std::vector<MarkedPoint> c{{{0, 0, 0}, 0.9}, {{1, 0, 0}, 0.2}, {{5, 0, 0}, 0.5}};
        const auto acc = graphical_construction(c, 2, 1.0);
        CHECK(acc == std::vector<std::size_t>{1, 2});
        CHECK(acc.size() <= c.size());
    }
    SUBCASE("torus metric sees wrapped neighbours") {
        const std::vector<MarkedPoint> c{{{-1.9, 0, 0}, 0.1}, {{1.9, 0, 0}, 0.2}};
        CHECK(graphical_construction(c, 2, 1.0).size() == 2);
        CHECK(graphical_construction(c, 2, 1.0, 4.0).size() == 1);
    }
}

TEST_CASE("random parking: hardcore distance and saturation") {
    const double r = 0.5;
    const BoxSpec box{2, 8.0, false};
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto smp = sample_random_parking(r, box, s, -1.0, 60.0 / ball_volume(2, r));
        CHECK(min_pair_distance(smp) >= 2 * r);
        // every blocker of a location at distance >= 2r from the boundary lies inside Q_R
        const double step = r / 10;
        bool saturated = true;
        for (double x = box.lo() + 2 * r; x <= box.hi() - 2 * r && saturated; x += step)
            for (double y = box.lo() + 2 * r; y <= box.hi() - 2 * r; y += step) {
                bool covered = false;
                for (const auto& p : smp.points)
                    if (std::hypot(p[0] - x, p[1] - y) < 2 * r) {
                        covered = true;
                        break;
                    }
                if (!covered) {
                    saturated = false;
                    break;
                }
            }
        CHECK(saturated);
    }
}

TEST_CASE("hardcore") {
    const BoxSpec box{2, 8.0, false};
    CHECK(sample_hardcore(0.0, 0.5, box, 1).size() == 0);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto h = sample_hardcore(2.0, 0.4, box, s);
        CHECK(min_pair_distance(h) >= 0.8);
        CHECK(h.size() > 0);
    }
}

TEST_CASE("periodization in law") {
    const BoxSpec box{2, 5.0, false};
    const auto smp = sample_poisson(0.8, box, 11, "per");
    const auto per = periodize_in_law(smp, box.side);
    CHECK(per.points_in_region({-2.5, -2.5, 0}, {2.5, 2.5, 0}) == smp.points);
    SUBCASE("translation by R e1") {
        auto shifted = per.points_in_region({2.5, -2.5, 0}, {7.5, 2.5, 0});
        for (auto& p : shifted) p[0] -= 5.0;
        std::sort(shifted.begin(), shifted.end());
        auto base = smp.points;
        std::sort(base.begin(), base.end());
        REQUIRE(shifted.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(shifted[i][0] == doctest::Approx(base[i][0]).epsilon(1e-12));
            CHECK(shifted[i][1] == base[i][1]);
        }
    }
    SUBCASE("count in Q_2R is 2^d times count in Q_R") {
        const auto big = per.points_in_region({-2.5, -2.5, 0}, {7.5, 7.5, 0});
        CHECK(big.size() == 4 * smp.size());
    }
    SUBCASE("parking periodization keeps the hardcore distance on the torus") {
        const auto park = sample_random_parking(0.5, box, 4);
        const auto pp = periodize_in_law(park, box.side);
        const auto pts = pp.points_in_region({-7.5, -7.5, 0}, {7.5, 7.5, 0});
        double best = INFINITY;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                best = std::min(best, std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]));
        CHECK(best >= 1.0 - 1e-12);
    }
}

TEST_CASE("inclusion indicator") {
    PointSample empty;
    empty.box = BoxSpec{2, 4.0, false};
    CHECK_FALSE(inclusion_indicator(empty, {0, 0, 0}));
    CHECK_FALSE(inclusion_indicator(empty, {1.2, -0.3, 0}));
    const auto one = one_ball(2, 4.0, {0.5, 0.2, 0}, 1.0);
    CHECK(inclusion_indicator(one, {0.5, 0.2, 0}));
    CHECK_FALSE(inclusion_indicator(one, {0.5 + 1.0 + 1e-9, 0.2, 0}));
    CHECK(inclusion_indicator(one, {0.5 + 1.0 - 1e-9, 0.2, 0}));
}

TEST_CASE("separation") {
    CHECK(check_separation(one_ball(2, 10, {0, 0, 0}, 1.0), 1.0));
    PointSample two = one_ball(2, 10, {0, 0, 0}, 1.0);
    two.points.push_back({2, 0, 0});
    two.radii.push_back(1.0);
    CHECK_FALSE(check_separation(two, 1e6));
    two.points[1] = {4, 0, 0};
    CHECK(check_separation(two, 2.0));
    CHECK_FALSE(check_separation(two, 0.9));
}

TEST_CASE("sample text round trip") {
    const auto smp = sample_poisson(0.5, BoxSpec{3, 4.0, false}, 9, "io");
    std::stringstream ss;
    write_sample(ss, smp);
    const auto back = read_sample(ss);
    REQUIRE(back.points.size() == smp.points.size());
    for (std::size_t i = 0; i < smp.size(); ++i)
        for (int k = 0; k < 3; ++k) CHECK(back.points[i][k] == smp.points[i][k]);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(sample_poisson(-1.0, BoxSpec{2, 4, false}, 0, "x"), ParameterError);
    CHECK_THROWS_AS(sample_random_parking(0.0, BoxSpec{2, 4, false}, 0), ParameterError);
    CHECK_THROWS_AS(sample_poisson(1.0, BoxSpec{4, 4, false}, 0, "x"), ParameterError);
}

}
