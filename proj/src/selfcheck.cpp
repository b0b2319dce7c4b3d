// Fast invariant suite behind the `check` subcommand.

#include "infhom/experiment.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

namespace infhom {

namespace {

Mat row(std::initializer_list<double> v) {
    Mat L(1, static_cast<int>(v.size()));
    int j = 0;
    for (double x : v) L(0, j++) = x;
    return L;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

CellProblem base_problem(Formula f, const Mat& L, double R) {
    CellProblem p;
    p.formula = f;
    p.lambda = L;
    p.dim = static_cast<int>(L.cols());
    p.R = R;
    p.cells_per_unit = 4;
    return p;
}

}  // namespace

bool run_self_check(std::ostream& os, int threads) {
    std::vector<std::pair<std::string, std::function<bool()>>> checks;

    checks.emplace_back("jensen_constant_density", [] {
        const Mat L = row({1.2, -0.7});
        const double want = L.squaredNorm();
        for (Formula f : {Formula::dirichlet_trunc, Formula::convexification, Formula::periodization, Formula::buffer}) {
            CellProblem p = base_problem(f, L, 4);
            p.micro.params.intensity = 0.3;
            const auto e = estimate_vbar(p, 2);
            if (!close(e.mean, want, 1e-6) || e.std_error != 0.0) return false;
        }
        return true;
    });

    checks.emplace_back("laminate_harmonic_mean", [] {
        CellProblem p = base_problem(Formula::periodization, row({1.0}), 2);
        p.micro.kind = ProcessKind::deterministic_periodic;
        p.micro.params.spacing = 1.0;
        p.micro.params.radius = 0.25;
        p.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
        const auto e = estimate_vbar(p, 1);
        LaminateSpec ls{{PhaseFunction::isotropic_quadratic(1.0), PhaseFunction::isotropic_quadratic(4.0)}, {0.5, 0.5}, 2.0};
        return close(e.mean, 1.6, 1e-6) && close(laminate_1d_vbar(ls, 1.0), 1.6, 1e-8);
    });

    checks.emplace_back("yosida_closed_forms", [] {
        const Mat F = row({1.2, 1.6});  // |F| = 2
        const auto ind = PhaseFunction::indicator_ball(1.0, PhaseFunction::zero());
        const auto quad = PhaseFunction::isotropic_quadratic(1.0);
        return close(yosida_transform(ind, 3.0, 2.0, F).value, 3.0, 1e-10) &&
               close(yosida_transform(quad, 3.0, 2.0, F).value, 3.0 * 4.0 / 4.0, 1e-10);
    });

    checks.emplace_back("poisson_periodization_exact", [] {
        const BoxSpec box{2, 6.0, false};
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto smp = sample_poisson(0.5, box, s, "check");
            const auto per = periodize_in_law(smp, box.side);
            if (per.points_in_region({-3, -3, 0}, {3, 3, 0}) != smp.points) return false;
        }
        return true;
    });

    checks.emplace_back("parking_hardcore_distance", [] {
        const BoxSpec box{2, 8.0, false};
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto smp = sample_random_parking(0.5, box, s);
            for (std::size_t i = 0; i < smp.size(); ++i)
                for (std::size_t j = i + 1; j < smp.size(); ++j)
                    if (std::hypot(smp.points[i][0] - smp.points[j][0], smp.points[i][1] - smp.points[j][1]) < 1.0)
                        return false;
        }
        return true;
    });

    checks.emplace_back("bc_ordering", [] {
        const Mat L = row({0.8, 0.3});
        IntegrandSpec spec;
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(5.0);
        const BoxSpec box{2, 4.0, false};
        const Medium med(sample_poisson(0.4, box, 7, "check"));
        const SolverOptions opt;
        const double dir =
            minimize_convex(Grid::make(2, 4, 16, false), spec, med, BCSpec::dirichlet_affine(L), std::nullopt, 1, opt)
                .second.final_energy;
        const double per =
            minimize_convex(Grid::make(2, 4, 16, true), spec, med, BCSpec::periodic(L), std::nullopt, 1, opt)
                .second.final_energy;
        const double mz =
            minimize_convex(Grid::make(2, 4, 16, false), spec, med, BCSpec::mean_zero(L), std::nullopt, 1, opt)
                .second.final_energy;
        const double tol = 10 * opt.tol_e * std::abs(dir);
        return dir >= per - tol && per >= mz - tol;
    });

    checks.emplace_back("solver_matches_brute_force", [] {
        IntegrandSpec spec;
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
        PointSample smp;
        smp.box = BoxSpec{1, 3.0, false};
        smp.points = {{0.5, 0, 0}};
        smp.radii = {0.5};
        const Medium med(smp);
        const Grid g = Grid::make(1, 3.0, 3, false);
        const BCSpec bc = BCSpec::dirichlet_affine(row({1.0}));
        const double s = minimize_convex(g, spec, med, bc, std::nullopt, 1, SolverOptions{}).second.final_energy;
        const double o = brute_force_min(g, spec, med, bc, std::nullopt, 1).value;
        return std::abs(s - o) <= 1e-8;
    });

    checks.emplace_back("thread_count_invariance", [threads] {
        CellProblem p = base_problem(Formula::dirichlet_trunc, row({0.6, 0.2}), 4);
        p.micro.params.intensity = 0.3;
        p.spec.inclusion_phase = PhaseFunction::indicator_ball(2.0, PhaseFunction::isotropic_quadratic(4.0));
        p.sweep.k_schedule = {1, 4, 16};
        std::ostringstream a, b;
        write_solves_csv(a, {estimate_vbar(p, 3, 1)}, false);
        write_solves_csv(b, {estimate_vbar(p, 3, std::max(threads, 2))}, false);
        return a.str() == b.str();
    });

    bool all = true;
    for (const auto& [name, fn] : checks) {
        bool ok = false;
        std::string why;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            why = std::string(" (") + e.what() + ")";
        }
        os << (ok ? "PASS " : "FAIL ") << name << why << '\n';
        all = all && ok;
    }
    return all;
}

}  // namespace infhom
