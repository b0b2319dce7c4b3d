#pragma once

// Monte Carlo estimation of homogenized densities from finite-cube cell problems.

#include "infhom/solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace infhom {

enum class Formula { dirichlet_trunc, convexification, periodization, buffer, nonconvex };

std::string to_string(Formula f);
Formula formula_from_string(const std::string& s);

struct MicrostructureSpec {
    ProcessKind kind = ProcessKind::poisson;
    ProcessParams params;
};

/// Everything that determines one family of cell problems; realization i uses the
/// substream derive_seed(master_seed, "realization", i).
struct CellProblem {
    Formula formula = Formula::dirichlet_trunc;
    Mat lambda;
    int dim = 2;
    double R = 4.0;
    double cells_per_unit = 4.0;
    SweepOptions sweep;
    double t = 1.0;
    double theta = 1.0;  // buffer width in microscopic units
    MicrostructureSpec micro;
    IntegrandSpec spec;
    SolverOptions solver;
    int restarts = 8;  // nonconvex multistart
    std::uint64_t master_seed = 0;

    int cells() const;  // per axis, round(R * cells_per_unit)
    double h() const { return R / cells(); }
    double eta() const { return formula == Formula::buffer ? theta : 0.0; }
    void validate() const;
};

/// The sample realization i sees (plain box Q_side).
PointSample realization_sample(const CellProblem& problem, std::size_t index, double side);

/// One solve inside a realization (one k level, or one nonconvex multistart).
struct SolveRecord {
    double k = 0.0;  // +inf for untruncated
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    double seconds = 0.0;
};

struct RealizationResult {
    std::size_t index = 0;
    double value = 0.0;  // stabilized (or final) energy
    bool stabilized = false;
    bool diverged = false;
    std::vector<SolveRecord> solves;
};

struct HomogEstimate {
    Formula formula = Formula::dirichlet_trunc;
    Mat lambda;
    double R = 0.0;
    int n = 0;
    double t = 1.0;
    double eta = 0.0;
    std::vector<RealizationResult> realizations;  // indexed slots
    std::vector<double> per_realization;          // values of non-diverged realizations
    double mean = 0.0;                            // +inf when every realization diverged
    double std_error = 0.0;
    std::size_t N = 0;
    std::size_t diverged_count = 0;
    bool infeasible = false;  // more than half of the realizations diverged
};

/// mean / stderr = sample std / sqrt(N) over the non-diverged slots, in index order.
void aggregate(HomogEstimate& est);

/// Solve realization `index` of a convex formula.
RealizationResult solve_realization(const CellProblem& problem, std::size_t index);

HomogEstimate estimate_vbar(const CellProblem& problem, std::size_t realizations, int threads = 1);

enum class CorrectorBC { periodic, convexification };

std::string to_string(CorrectorBC bc);
CorrectorBC corrector_bc_from_string(const std::string& s);

struct CorrectorConfig {
    double R_outer = 0.0;  // <= 0 means R_outer = R
    CorrectorBC bc = CorrectorBC::periodic;
};

/// Convex corrector on Q_{R_outer}, then the nonconvex problem on Q_R with boundary
/// data Lambda x + phi_Lambda.
RealizationResult solve_realization_nonconvex(const CellProblem& inner, const CorrectorConfig& corrector,
                                              std::size_t index);

HomogEstimate estimate_wbar(const CellProblem& inner, const CorrectorConfig& corrector, std::size_t realizations,
                            int threads = 1);

struct ConvexityProbe {
    double midpoint = 0.0;
    double chord = 0.0;      // (V1 + V2) / 2
    double tolerance = 0.0;  // 3 * combined stderr + mesh margin
    bool pass = false;
};

/// Combined stderr = s_mid + (s1 + s2) / 2.
ConvexityProbe convexity_probe(const HomogEstimate& e1, const HomogEstimate& e2, const HomogEstimate& mid,
                               double mesh_margin);

struct RSweepResult {
    std::vector<HomogEstimate> estimates;
    double rate = 0.0;       // alpha in |mean(R) - mean(R_max)| ~ A R^-alpha
    double prefactor = 0.0;  // A
    bool rate_fitted = false;
};

RSweepResult r_sweep(const CellProblem& problem, const std::vector<double>& R_list, std::size_t realizations,
                     int threads = 1);

struct TSweepResult {
    std::vector<double> t_values;
    std::vector<HomogEstimate> estimates;
    double extrapolated_value = 0.0;  // value at the largest feasible t
};

std::vector<double> default_t_schedule();

TSweepResult t_sweep(const CellProblem& problem, const std::vector<double>& t_list, std::size_t realizations,
                     int threads = 1);

/// Runs f(i) for i in [0, count) on `threads` workers; each index is processed once.
void parallel_for_index(std::size_t count, int threads, const std::function<void(std::size_t)>& f);

}  // namespace infhom
