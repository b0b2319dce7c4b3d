#pragma once

#include "infhom/experiment.hpp"

#include <cmath>
#include <initializer_list>

namespace infhom::testing {

inline Mat row(std::initializer_list<double> v) {
    Mat L(1, static_cast<int>(v.size()));
    int j = 0;
    for (double x : v) L(0, j++) = x;
    return L;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline PointSample one_ball(int dim, double side, Point c, double r) {
    PointSample s;
    s.box = BoxSpec{dim, side, false};
    s.points = {c};
    s.radii = {r};
    return s;
}

}  // namespace infhom::testing
