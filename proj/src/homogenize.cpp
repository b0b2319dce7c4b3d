#include "infhom/homogenize.hpp"

#include "infhom/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace infhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* const kFormulaNames[] = {"dirichlet_trunc", "convexification", "periodization", "buffer", "nonconvex"};

// With the constraint scheme, finite phases are never modified, so a k sweep over a
// finite-valued integrand would repeat the same solve.
bool truncation_inert(const IntegrandSpec& spec, const SweepOptions& sweep) {
    return sweep.scheme == TruncationScheme::constraint_yosida && spec.matrix_phase.finite_valued() &&
           spec.inclusion_phase.finite_valued();
}

SweepOptions effective_sweep(const CellProblem& p) {
    SweepOptions s = p.sweep;
    if (truncation_inert(p.spec, s)) s.k_schedule.clear();
    return s;
}

BCSpec bc_for(const CellProblem& p) {
    switch (p.formula) {
        case Formula::dirichlet_trunc: return BCSpec::dirichlet_affine(p.lambda);
        case Formula::convexification: return BCSpec::mean_zero(p.lambda);
        case Formula::periodization: return BCSpec::periodic(p.lambda);
        case Formula::buffer: return BCSpec::buffer(p.lambda, p.theta);
        case Formula::nonconvex: break;
    }
    throw ParameterError("nonconvex cell problems have no convex boundary condition");
}

void record_sweep(RealizationResult& out, const SweepResult& sw) {
    for (std::size_t i = 0; i < sw.energies.size(); ++i) {
        const SolveReport& r = sw.reports[i];
        out.solves.push_back({sw.k_values[i], sw.energies[i], r.converged, r.iterations, r.wall_time});
    }
    out.stabilized = sw.stabilized;
    out.diverged = sw.diverged;
    out.value = sw.diverged ? kInf : sw.extrapolated_value;
}

HomogEstimate blank_estimate(const CellProblem& p, std::size_t realizations) {
    HomogEstimate est;
    est.formula = p.formula;
    est.lambda = p.lambda;
    est.R = p.R;
    est.n = p.cells();
    est.t = p.t;
    est.eta = p.eta();
    est.realizations.resize(realizations);
    return est;
}

}  // namespace

std::string to_string(Formula f) { return kFormulaNames[static_cast<int>(f)]; }

Formula formula_from_string(const std::string& s) {
    for (int i = 0; i < 5; ++i)
        if (s == kFormulaNames[i]) return static_cast<Formula>(i);
    throw ParameterError("unknown formula '" + s + "'");
}

std::string to_string(CorrectorBC bc) { return bc == CorrectorBC::periodic ? "periodic" : "convexification"; }

CorrectorBC corrector_bc_from_string(const std::string& s) {
    if (s == "periodic") return CorrectorBC::periodic;
    if (s == "convexification") return CorrectorBC::convexification;
    throw ParameterError("unknown corrector bc '" + s + "'");
}

int CellProblem::cells() const { return static_cast<int>(std::lround(R * cells_per_unit)); }

void CellProblem::validate() const {
    if (dim < 1 || dim > 3) throw ParameterError("cell problem: dim must be 1, 2 or 3");
    if (!(R > 0.0) || !std::isfinite(R)) throw ParameterError("cell problem: R must be positive");
    if (!(cells_per_unit > 0.0)) throw ParameterError("cell problem: cells_per_unit must be positive");
    if (cells() < 2) throw ParameterError("cell problem: fewer than 2 cells per axis");
    if (!(t > 0.0) || t > 1.0) throw ParameterError("cell problem: t must lie in (0, 1]");
    if (formula == Formula::buffer && !(theta > 0.0)) throw ParameterError("cell problem: theta must be positive");
    if (lambda.rows() != spec.m || lambda.cols() != dim)
        throw ParameterError("cell problem: Lambda must be m x d");
    if (formula == Formula::nonconvex && !spec.nonconvex)
        throw ParameterError("cell problem: nonconvex formula needs a nonconvex integrand");
    if (restarts < 0) throw ParameterError("cell problem: restarts must be >= 0");
    spec.validate(dim);
}

PointSample realization_sample(const CellProblem& problem, std::size_t index, double side) {
    const BoxSpec box{problem.dim, side, false};
    return generate_sample(problem.micro.kind, problem.micro.params, box,
                           derive_seed(problem.master_seed, "realization", index), "microstructure");
}

RealizationResult solve_realization(const CellProblem& problem, std::size_t index) {
    RealizationResult out;
    out.index = index;
    const PointSample sample = realization_sample(problem, index, problem.R);
    const bool periodic = problem.formula == Formula::periodization;
    const Medium medium = periodic ? Medium(periodize_in_law(sample, problem.R)) : Medium(sample);
    const Grid grid = Grid::make(problem.dim, problem.R, problem.cells(), periodic);
    try {
        const SweepResult sw =
            truncation_sweep(grid, problem.spec, medium, bc_for(problem), effective_sweep(problem), problem.t,
                             problem.solver);
        record_sweep(out, sw);
    } catch (const DomainError&) {
        // infinite energy at the start of an untruncated solve
        out.diverged = true;
        out.value = kInf;
    }
    return out;
}

void aggregate(HomogEstimate& est) {
    est.per_realization.clear();
    est.diverged_count = 0;
    for (const auto& r : est.realizations) {
        if (r.diverged)
            ++est.diverged_count;
        else
            est.per_realization.push_back(r.value);
    }
    const auto& v = est.per_realization;
    est.N = v.size();
    est.infeasible = 2 * est.diverged_count > est.realizations.size();
    if (v.empty()) {
        est.mean = kInf;
        est.std_error = 0.0;
        return;
    }
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
        est.mean = v.front();
        est.std_error = 0.0;
        return;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    est.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - est.mean) * (x - est.mean);
    est.std_error = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))
                                 : 0.0;
}

void parallel_for_index(std::size_t count, int threads, const std::function<void(std::size_t)>& f) {
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
    std::vector<std::exception_ptr> errors(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);  // lowest index first, independent of scheduling
}

HomogEstimate estimate_vbar(const CellProblem& problem, std::size_t realizations, int threads) {
    if (realizations < 1) throw ParameterError("estimate_vbar: need at least one realization");
    if (problem.formula == Formula::nonconvex) throw ParameterError("estimate_vbar: use estimate_wbar");
    problem.validate();
    HomogEstimate est = blank_estimate(problem, realizations);
    parallel_for_index(realizations, threads,
                       [&](std::size_t i) { est.realizations[i] = solve_realization(problem, i); });
    aggregate(est);
    return est;
}

RealizationResult solve_realization_nonconvex(const CellProblem& inner, const CorrectorConfig& corrector,
                                              std::size_t index) {
    const double R_outer = corrector.R_outer > 0.0 ? corrector.R_outer : inner.R;
    const double h = inner.h();
    const double shift = 0.5 * (R_outer - inner.R) / h;  // inner origin offset in outer cells
    if (R_outer < inner.R - 1e-12 || std::abs(shift - std::round(shift)) > 1e-9)
        throw ParameterError("estimate_wbar: inner grid nodes must coincide with corrector grid nodes");
    const int outer_cells = static_cast<int>(std::lround(R_outer / h));
    const int offset = static_cast<int>(std::lround(shift));

    RealizationResult out;
    out.index = index;
    const PointSample sample = realization_sample(inner, index, R_outer);
    const bool periodic = corrector.bc == CorrectorBC::periodic;
    const Medium medium = periodic ? Medium(periodize_in_law(sample, R_outer)) : Medium(sample);
    const Grid outer = Grid::make(inner.dim, R_outer, outer_cells, periodic);
    const BCSpec obc = periodic ? BCSpec::periodic(inner.lambda) : BCSpec::mean_zero(inner.lambda);

    SweepResult corr;
    try {
        corr = truncation_sweep(outer, inner.spec, medium, obc, effective_sweep(inner), 1.0, inner.solver);
    } catch (const DomainError&) {
        corr.diverged = true;
    }
    if (corr.diverged) {
        out.diverged = true;
        out.value = kInf;
        return out;
    }

    // g = Lambda x + phi_Lambda restricted to Q_R
    const Grid grid = Grid::make(inner.dim, inner.R, inner.cells(), false);
    Field g = Field::affine(grid, inner.lambda);
    const int m = inner.spec.m;
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        auto multi = grid.node_multi(node);
        for (int j = 0; j < inner.dim; ++j) multi[j] += offset;
        const std::size_t on = outer.node_index(multi);
        for (int c = 0; c < m; ++c) g.at(node, c) += corr.final_field.at(on, c);
    }

    std::optional<Truncation> trunc;
    if (!truncation_inert(inner.spec, inner.sweep) && !inner.sweep.k_schedule.empty())
        trunc = Truncation{inner.sweep.k_schedule.back(), inner.sweep.scheme};
    try {
        auto [v, rep] = solve_nonconvex(grid, inner.spec, medium, g, inner.t, inner.restarts,
                                        derive_seed(inner.master_seed, "restarts", index), inner.solver, trunc);
        out.value = rep.final_energy;
        out.stabilized = true;
        out.solves.push_back({trunc ? trunc->k : kInf, rep.final_energy, rep.converged, rep.iterations,
                              rep.wall_time});
    } catch (const SolverError&) {
        out.diverged = true;
        out.value = kInf;
    }
    return out;
}

HomogEstimate estimate_wbar(const CellProblem& inner, const CorrectorConfig& corrector, std::size_t realizations,
                            int threads) {
    if (realizations < 1) throw ParameterError("estimate_wbar: need at least one realization");
    CellProblem p = inner;
    p.formula = Formula::nonconvex;
    p.validate();
    HomogEstimate est = blank_estimate(p, realizations);
    parallel_for_index(realizations, threads, [&](std::size_t i) {
        est.realizations[i] = solve_realization_nonconvex(p, corrector, i);
    });
    aggregate(est);
    return est;
}

ConvexityProbe convexity_probe(const HomogEstimate& e1, const HomogEstimate& e2, const HomogEstimate& mid,
                               double mesh_margin) {
    ConvexityProbe pr;
    pr.midpoint = mid.mean;
    pr.chord = 0.5 * (e1.mean + e2.mean);
    pr.tolerance = 3.0 * (mid.std_error + 0.5 * (e1.std_error + e2.std_error)) + mesh_margin;
    if (std::isinf(pr.chord))
        pr.pass = true;  // an infinite chord bounds everything
    else
        pr.pass = pr.midpoint <= pr.chord + pr.tolerance;
    return pr;
}

RSweepResult r_sweep(const CellProblem& problem, const std::vector<double>& R_list, std::size_t realizations,
                     int threads) {
    for (std::size_t i = 1; i < R_list.size(); ++i)
        if (!(R_list[i] > R_list[i - 1])) throw ParameterError("r_sweep: R list must be increasing");
    RSweepResult res;
    for (double R : R_list) {
        CellProblem p = problem;
        p.R = R;
        res.estimates.push_back(estimate_vbar(p, realizations, threads));
    }
    if (res.estimates.size() < 3) return res;
    const double ref = res.estimates.back().mean;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i + 1 < res.estimates.size(); ++i) {
        const double d = std::abs(res.estimates[i].mean - ref);
        if (d > 0.0 && std::isfinite(d)) {
            xs.push_back(std::log(R_list[i]));
            ys.push_back(std::log(d));
        }
    }
    if (xs.size() < 2) return res;
    double xm = 0, ym = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) xm += xs[i], ym += ys[i];
    xm /= xs.size();
    ym /= ys.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) sxx += (xs[i] - xm) * (xs[i] - xm), sxy += (xs[i] - xm) * (ys[i] - ym);
    const double slope = sxy / sxx;
    res.rate = -slope;
    res.prefactor = std::exp(ym - slope * xm);
    res.rate_fitted = true;
    return res;
}

std::vector<double> default_t_schedule() { return {0.9, 0.99, 1.0}; }

TSweepResult t_sweep(const CellProblem& problem, const std::vector<double>& t_list, std::size_t realizations,
                     int threads) {
    TSweepResult res;
    res.extrapolated_value = kInf;
    double best_t = -1.0;
    for (double t : t_list) {
        CellProblem p = problem;
        p.t = t;
        res.t_values.push_back(t);
        res.estimates.push_back(estimate_vbar(p, realizations, threads));
        if (!res.estimates.back().infeasible && t > best_t) {
            best_t = t;
            res.extrapolated_value = res.estimates.back().mean;
        }
    }
    return res;
}

}  // namespace infhom
