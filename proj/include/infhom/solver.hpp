#pragma once

#include "infhom/grid.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace infhom {

struct SolverOptions {
    double tol_e = 1e-9;   // relative energy decrease
    double tol_g = 1e-7;   // gradient norm, scaled by (1 + |initial gradient|)
    int max_iter = 10000;
    int memory = 10;       // limited-memory secant pairs
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    double step_min = 1e-8;
    double step_max = 1e2;
    bool keep_trace = false;
    bool precondition = true;  // curvature-weighted stiffness as initial inverse Hessian
    int precond_refresh = 10;  // iterations between preconditioner rebuilds
};

struct SolveReport {
    double final_energy = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
    double wall_time = 0.0;  // seconds
    int restarts_used = 0;
    std::vector<double> energy_trace;  // accepted iterates, when requested
};

/// Objective returning the value and writing the gradient (only used when finite).
using Objective = std::function<ExtReal(std::span<const double>, std::span<double>)>;

/// Initial inverse Hessian for the two-loop recursion: `update(x)` rebuilds it at x,
/// `apply(in, out)` writes out = H0 in.
struct Preconditioner {
    std::function<void(std::span<const double>)> update;
    std::function<void(std::span<const double>, std::span<double>)> apply;
};

/// Limited-memory quasi-Newton descent with backtracking Armijo line search. Infinite
/// trial energies are rejected (step halved). `x` is updated in place.
SolveReport lbfgs_minimize(const Objective& f, std::vector<double>& x, const SolverOptions& opt,
                           const Preconditioner* pre = nullptr);

/// Sparse-Cholesky preconditioner from CellEnergy::curvature_matrix. `to_nodal` maps
/// the optimization variable to nodal values (identity when empty).
Preconditioner curvature_preconditioner(
    const CellEnergy& energy,
    std::function<void(std::span<const double>, std::vector<double>&)> to_nodal = nullptr);

/// Minimize a (truncated) convex cell energy from phi = 0, or from `warm_start`.
/// For mean_zero the iterate is kept in the mean-zero class by exact projection.
std::pair<Field, SolveReport> minimize_convex(const Grid& grid, const IntegrandSpec& spec, const Medium& medium,
                                              const BCSpec& bc, const std::optional<Truncation>& k, double t,
                                              const SolverOptions& opt, const Field* warm_start = nullptr);

std::vector<double> default_k_schedule();

struct SweepOptions {
    std::vector<double> k_schedule = default_k_schedule();
    double stab_tol = 1e-4;
    TruncationScheme scheme = TruncationScheme::constraint_yosida;
    bool warm_start = true;
};

struct SweepResult {
    std::vector<double> k_values;
    std::vector<double> energies;
    std::vector<SolveReport> reports;
    bool stabilized = false;
    bool diverged = false;
    double extrapolated_value = 0.0;
    Field final_field;
};

/// Energies that still move by more than stab_tol and whose last three increments grow
/// at least half as fast as linear growth in k would predict.
bool detect_divergence(std::span<const double> k, std::span<const double> energy, double stab_tol);

/// lim_k of the truncated cell problem: one convex solve per k, warm-started.
SweepResult truncation_sweep(const Grid& grid, const IntegrandSpec& spec, const Medium& medium, const BCSpec& bc,
                             const SweepOptions& sweep, double t, const SolverOptions& opt);

/// inf over v in W_0 of fint W(y, t grad g + grad v): restart 0 from v = 0, restarts
/// 1..N from seeded perturbations of amplitude 0.1 h. Returns the best local minimum v.
std::pair<Field, SolveReport> solve_nonconvex(const Grid& grid, const IntegrandSpec& spec, const Medium& medium,
                                              const Field& boundary_data, double t, int restarts,
                                              std::uint64_t seed, const SolverOptions& opt,
                                              const std::optional<Truncation>& truncation = std::nullopt);

/// reference + T_s(field - reference), T_s(x) = sign(x) min(|x|, s). Scalar fields only.
Field truncate_scalar(const Field& field, double s, const Field& reference);

}  // namespace infhom
