#pragma once

// Reference values computed independently of the descent solver.

#include "infhom/grid.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace infhom {

struct LaminateSpec {
    std::vector<PhaseFunction> phases;  // scalar densities, evaluated on 1x1 gradients
    std::vector<double> fractions;      // positive, summing to 1
    double p = 2.0;

    void validate() const;
};

/// f*(sigma) = sup_x (sigma x - f(x)) for a convex superlinear scalar f, by golden-section
/// search on a bracket grown until the concave objective turns down. `domain_radius`
/// limits the search when f is +inf outside [-r, r].
double legendre_conjugate(const std::function<ExtReal(double)>& f, double sigma,
                          double domain_radius = std::numeric_limits<double>::infinity());

/// (sum_i f_i V_i^*)^*(Lambda): the constant-flux dual formula for 1D laminates.
/// SolverError when the flux search range cannot be resolved.
double laminate_1d_vbar(const LaminateSpec& spec, double lambda);

/// Jensen: a y-independent convex density is minimized by phi = 0.
ExtReal constant_vbar(const PhaseFunction& phase, const Mat& lambda);

struct BruteForceResult {
    double value = 0.0;
    std::vector<double> minimizer;  // nodal values (projected for mean_zero)
    std::string method;             // "linear", "newton" or "scan"
    int free_dims = 0;
};

struct BruteForceOptions {
    bool nonconvex = false;
    int max_free_dims = 6;
    int scan_samples = 10000;   // total scan budget for nonconvex problems
    double scan_radius = -1.0;  // <= 0: the side length R
};

/// Global discrete minimum over at most 6 free nodal values from energy values only:
/// exact polarization + dense solve when the energy is quadratic, Newton with
/// value-differenced derivatives for other convex energies, dense scan + polish when
/// nonconvex. UnsupportedError when there are too many free values.
BruteForceResult brute_force_min(const Grid& grid, const IntegrandSpec& spec, const Medium& medium,
                                 const BCSpec& bc, const std::optional<Truncation>& truncation, double t,
                                 const BruteForceOptions& opt = {});

}  // namespace infhom
