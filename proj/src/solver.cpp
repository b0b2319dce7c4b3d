#include "infhom/solver.hpp"

#include "infhom/rng.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace infhom {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SecantPair {
    std::vector<double> s, y;
    double rho;
};

}  // namespace

Preconditioner curvature_preconditioner(
    const CellEnergy& energy, std::function<void(std::span<const double>, std::vector<double>&)> to_nodal) {
    struct State {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> llt;
        bool analyzed = false;
        bool ok = false;
        std::vector<double> nodal;
    };
    auto st = std::make_shared<State>();
    Preconditioner pre;
    pre.update = [st, &energy, to_nodal](std::span<const double> x) {
        if (to_nodal)
            to_nodal(x, st->nodal);
        else
            st->nodal.assign(x.begin(), x.end());
        const Eigen::SparseMatrix<double> K = energy.curvature_matrix(st->nodal);
        if (!st->analyzed) {
            st->llt.analyzePattern(K);
            st->analyzed = true;
        }
        st->llt.factorize(K);
        st->ok = st->llt.info() == Eigen::Success;
    };
    pre.apply = [st](std::span<const double> in, std::span<double> out) {
        Eigen::Map<const Eigen::VectorXd> v(in.data(), static_cast<Eigen::Index>(in.size()));
        Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
        if (st->ok)
            o = st->llt.solve(v);
        else
            o = v;
    };
    return pre;
}

SolveReport lbfgs_minimize(const Objective& f, std::vector<double>& x, const SolverOptions& opt,
                           const Preconditioner* pre) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = x.size();
    SolveReport rep;

    std::vector<double> g(n), g_new(n), x_new(n), d(n), tmp(n), alpha_buf;
    ExtReal fx = f(x, g);
    if (fx.is_infinite()) throw DomainError("minimize: energy is infinite at the starting point");
    double fval = fx.value();
    double gnorm = norm(g);
    const double gtol = opt.tol_g * (1.0 + gnorm);
    if (opt.keep_trace) rep.energy_trace.push_back(fval);

    std::deque<SecantPair> mem;
    double last_rel_decrease = 0.0;
    bool have_decrease = false;
    auto clip = [&](double s) { return std::clamp(s, opt.step_min, opt.step_max); };

    // Steps that fail or gain nothing beyond roundoff; ill-conditioned (large k) problems
    // reach this floor before the gradient test.
    int stall = 0;
    const int max_stall = 10;
    int it = 0;
    bool converged = gnorm <= gtol;
    while (!converged && it < opt.max_iter) {
        // two-loop recursion
        std::copy(g.begin(), g.end(), d.begin());
        alpha_buf.assign(mem.size(), 0.0);
        for (std::size_t i = mem.size(); i-- > 0;) {
            alpha_buf[i] = mem[i].rho * dot(mem[i].s, d);
            for (std::size_t j = 0; j < n; ++j) d[j] -= alpha_buf[i] * mem[i].y[j];
        }
        if (pre && it % std::max(opt.precond_refresh, 1) == 0) pre->update(x);
        double gamma;
        if (pre) {
            // Barzilai-Borwein scale in the preconditioned metric
            if (mem.empty()) {
                gamma = 1.0;
            } else {
                pre->apply(mem.back().y, tmp);
                gamma = clip(dot(mem.back().s, mem.back().y) / dot(mem.back().y, tmp));
            }
            pre->apply(d, tmp);
            for (std::size_t j = 0; j < n; ++j) d[j] = gamma * tmp[j];
        } else {
            gamma = mem.empty() ? clip(1.0 / std::max(gnorm, 1e-300))
                                : clip(dot(mem.back().s, mem.back().y) / dot(mem.back().y, mem.back().y));
            for (double& v : d) v *= gamma;
        }
        for (std::size_t i = 0; i < mem.size(); ++i) {
            const double beta = mem[i].rho * dot(mem[i].y, d);
            for (std::size_t j = 0; j < n; ++j) d[j] += (alpha_buf[i] - beta) * mem[i].s[j];
        }
        for (double& v : d) v = -v;
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            mem.clear();
            if (pre) {
                pre->apply(g, tmp);
                for (std::size_t j = 0; j < n; ++j) d[j] = -tmp[j];
            } else {
                gamma = clip(1.0 / std::max(gnorm, 1e-300));
                for (std::size_t j = 0; j < n; ++j) d[j] = -gamma * g[j];
            }
            slope = dot(g, d);
            if (!(slope < 0.0)) {
                gamma = clip(1.0 / std::max(gnorm, 1e-300));
                for (std::size_t j = 0; j < n; ++j) d[j] = -gamma * g[j];
                slope = dot(g, d);
            }
        }

        double step = 1.0;
        bool accepted = false;
        double f_new = 0.0;
        for (int bt = 0; bt < 40; ++bt) {
            for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + step * d[j];
            const ExtReal trial = f(x_new, g_new);
            if (trial.is_finite() && trial.value() <= fval + opt.armijo_c1 * step * slope) {
                f_new = trial.value();
                accepted = true;
                break;
            }
            step *= opt.backtrack;
        }
        ++it;
        if (!accepted) {
            if (++stall >= max_stall) break;
            if (!mem.empty()) {
                mem.clear();
                continue;
            }
            break;  // no descent possible at working precision
        }

        SecantPair pair;
        pair.s.resize(n);
        pair.y.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            pair.s[j] = x_new[j] - x[j];
            pair.y[j] = g_new[j] - g[j];
        }
        const double sy = dot(pair.s, pair.y);
        if (sy > 1e-16 * norm(pair.s) * norm(pair.y)) {
            pair.rho = 1.0 / sy;
            mem.push_back(std::move(pair));
            if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
        }

        last_rel_decrease = (fval - f_new) / std::max(std::abs(fval), 1e-12);
        stall = last_rel_decrease <= 4.0 * std::numeric_limits<double>::epsilon() ? stall + 1 : 0;
        have_decrease = true;
        x.swap(x_new);
        g.swap(g_new);
        fval = f_new;
        gnorm = norm(g);
        if (opt.keep_trace) rep.energy_trace.push_back(fval);
        converged = gnorm <= gtol && (!have_decrease || last_rel_decrease <= opt.tol_e);
        if (!converged && stall >= max_stall) break;
    }

    rep.final_energy = fval;
    rep.iterations = it;
    rep.grad_norm = gnorm;
    rep.converged = converged;
    rep.wall_time = seconds_since(t0);
    return rep;
}

std::pair<Field, SolveReport> minimize_convex(const Grid& grid, const IntegrandSpec& spec, const Medium& medium,
                                              const BCSpec& bc, const std::optional<Truncation>& k, double t,
                                              const SolverOptions& opt, const Field* warm_start) {
    CellEnergy energy(grid, spec, medium, bc, k, t);
    Field field = Field::zeros(grid, spec.m, bc.field_bc());
    if (warm_start) {
        if (!(warm_start->grid == grid) || warm_start->components != spec.m || warm_start->bc != field.bc)
            throw ParameterError("minimize_convex: warm start does not match the problem");
        field.values = warm_start->values;
    }
    std::vector<double> x = field.values;

    SolveReport rep;
    if (bc.kind != BCKind::mean_zero) {
        const Preconditioner pre = curvature_preconditioner(energy);
        rep = lbfgs_minimize([&](std::span<const double> v, std::span<double> g) { return energy.value_and_gradient(v, g); },
                             x, opt, opt.precondition ? &pre : nullptr);
        field.values = std::move(x);
        return {std::move(field), rep};
    }

    // phi = P psi = psi - (mean gradient of psi) x; gradient P^T dE.
    const std::size_t nn = grid.node_count();
    const int m = spec.m;
    std::vector<Point> pos(nn);
    for (std::size_t i = 0; i < nn; ++i) pos[i] = grid.node_position(i);
    std::vector<double> phi(x.size()), dE(x.size());
    auto project = [&](std::span<const double> psi) {
        const Mat G = mean_gradient(grid, psi, m);
        for (std::size_t i = 0; i < nn; ++i)
            for (int c = 0; c < m; ++c) {
                double lin = 0.0;
                for (int j = 0; j < grid.dim; ++j) lin += G(c, j) * pos[i][j];
                phi[i * m + c] = psi[i * m + c] - lin;
            }
    };
    auto objective = [&](std::span<const double> psi, std::span<double> g) {
        project(psi);
        const ExtReal e = energy.value_and_gradient(phi, dE);
        if (e.is_infinite()) return e;
        Mat XtG = Mat::Zero(m, grid.dim);
        for (std::size_t i = 0; i < nn; ++i)
            for (int c = 0; c < m; ++c)
                for (int j = 0; j < grid.dim; ++j) XtG(c, j) += dE[i * m + c] * pos[i][j];
        const std::vector<double> corr = mean_gradient_adjoint(grid, XtG);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = dE[i] - corr[i];
        return e;
    };
    const Preconditioner pre = curvature_preconditioner(energy, [&](std::span<const double> psi, std::vector<double>& out) {
        project(psi);
        out = phi;
    });
    rep = lbfgs_minimize(objective, x, opt, opt.precondition ? &pre : nullptr);
    project(x);
    field.values = phi;
    return {std::move(field), rep};
}

std::vector<double> default_k_schedule() {
    std::vector<double> k;
    for (int i = 0; i <= 8; ++i) k.push_back(std::pow(4.0, i));
    return k;
}

bool detect_divergence(std::span<const double> k, std::span<const double> energy, double stab_tol) {
    const std::size_t n = energy.size();
    if (n < 3 || k.size() != n) return false;
    const double k1 = k[n - 3], k2 = k[n - 2], k3 = k[n - 1];
    const double e1 = energy[n - 3], e2 = energy[n - 2], e3 = energy[n - 1];
    const double d1 = e2 - e1, d2 = e3 - e2;
    if (!(d1 > 0.0) || !(d2 > 0.0)) return false;
    if (d2 <= stab_tol * std::abs(e3)) return false;
    // least-squares slope of E = a + c k over the last three levels
    const double km = (k1 + k2 + k3) / 3.0, em = (e1 + e2 + e3) / 3.0;
    const double sxx = (k1 - km) * (k1 - km) + (k2 - km) * (k2 - km) + (k3 - km) * (k3 - km);
    const double sxy = (k1 - km) * (e1 - em) + (k2 - km) * (e2 - em) + (k3 - km) * (e3 - em);
    const double c = sxy / sxx;
    if (!(c > stab_tol * k[0])) return false;
    return d2 / d1 >= 0.5 * (k3 - k2) / (k2 - k1);
}

SweepResult truncation_sweep(const Grid& grid, const IntegrandSpec& spec, const Medium& medium, const BCSpec& bc,
                             const SweepOptions& sweep, double t, const SolverOptions& opt) {
    for (std::size_t i = 1; i < sweep.k_schedule.size(); ++i)
        if (!(sweep.k_schedule[i] > sweep.k_schedule[i - 1]))
            throw ParameterError("truncation_sweep: k schedule must be strictly increasing");
    SweepResult res;
    std::optional<Field> prev;
    auto run = [&](const std::optional<Truncation>& tr, double kval) {
        const Field* ws = (sweep.warm_start && prev) ? &*prev : nullptr;
        auto [field, rep] = minimize_convex(grid, spec, medium, bc, tr, t, opt, ws);
        res.k_values.push_back(kval);
        res.energies.push_back(rep.final_energy);
        res.reports.push_back(rep);
        prev = std::move(field);
    };
    if (sweep.k_schedule.empty()) {
        run(std::nullopt, std::numeric_limits<double>::infinity());
    } else {
        for (double k : sweep.k_schedule) run(Truncation{k, sweep.scheme}, k);
    }
    const std::size_t n = res.energies.size();
    if (sweep.k_schedule.empty()) {
        res.stabilized = true;  // untruncated problem, nothing to extrapolate
    } else if (n >= 2) {
        const double a = res.energies[n - 2], b = res.energies[n - 1];
        res.stabilized = std::abs(b - a) <= sweep.stab_tol * std::max(std::abs(b), 1e-300) || a == b;
    }
    res.diverged = !res.stabilized && detect_divergence(res.k_values, res.energies, sweep.stab_tol);
    res.extrapolated_value = res.energies.back();
    res.final_field = std::move(*prev);
    return res;
}

std::pair<Field, SolveReport> solve_nonconvex(const Grid& grid, const IntegrandSpec& spec, const Medium& medium,
                                              const Field& boundary_data, double t, int restarts,
                                              std::uint64_t seed, const SolverOptions& opt,
                                              const std::optional<Truncation>& truncation) {
    if (restarts < 0) throw ParameterError("solve_nonconvex: restarts must be >= 0");
    if (grid.periodic) throw ParameterError("solve_nonconvex: needs a non-periodic grid");
    const auto t0 = std::chrono::steady_clock::now();
    CellEnergy energy(grid, spec, medium, BCSpec::dirichlet_data(boundary_data), truncation, t, true);
    const auto& fixed = energy.constrained();
    auto objective = [&](std::span<const double> v, std::span<double> g) { return energy.value_and_gradient(v, g); };
    const Preconditioner pre = curvature_preconditioner(energy);

    std::optional<Field> best;
    SolveReport best_rep;
    int used = 0;
    int total_iterations = 0;
    double last_residual = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= restarts; ++r) {
        std::vector<double> x(energy.size(), 0.0);
        if (r > 0) {
            Engine eng = make_engine(seed, "nonconvex-restart", static_cast<std::uint64_t>(r));
            const double amp = 0.1 * grid.h();
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double u = uniform_in(eng, -amp, amp);
                if (!fixed[i]) x[i] = u;
            }
        }
        SolveReport rep;
        try {
            rep = lbfgs_minimize(objective, x, opt, opt.precondition ? &pre : nullptr);
        } catch (const DomainError&) {
            continue;
        }
        ++used;
        total_iterations += rep.iterations;
        last_residual = rep.grad_norm;
        if (!best || rep.final_energy < best_rep.final_energy) {
            Field f = Field::zeros(grid, spec.m, FieldBC::dirichlet_zero);
            f.values = std::move(x);
            best = std::move(f);
            best_rep = rep;
        }
    }
    if (!best) throw SolverError("solve_nonconvex: every restart started from an infinite energy", last_residual);
    best_rep.restarts_used = used;
    best_rep.iterations = total_iterations;
    best_rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(*best), best_rep};
}

Field truncate_scalar(const Field& field, double s, const Field& reference) {
    if (field.components != 1 || reference.components != 1)
        throw UnsupportedError("truncate_scalar: only scalar fields (m = 1) are supported");
    if (!(s > 0.0)) throw ParameterError("truncate_scalar: s must be positive");
    if (!(field.grid == reference.grid)) throw ParameterError("truncate_scalar: grids differ");
    Field out = field;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = reference.values[i] + std::clamp(field.values[i] - reference.values[i], -s, s);
    return out;
}

}  // namespace infhom
