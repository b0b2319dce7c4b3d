// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "infhom/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace infhom;

namespace {

namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_threads = 1;
fs::path g_work;

Mat row(std::initializer_list<double> v) {
    Mat L(1, static_cast<int>(v.size()));
    int j = 0;
    for (double x : v) L(0, j++) = x;
    return L;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CellProblem base(Formula f, const Mat& L, double R) {
    CellProblem p;
    p.formula = f;
    p.lambda = L;
    p.dim = static_cast<int>(L.cols());
    p.R = R;
    p.cells_per_unit = 4;
    return p;
}

// ---------------------------------------------------------------------------

Outcome jensen() {
    const Mat L = row({1.2, -0.9});
    const double want = L.squaredNorm();
    double worst = 0.0, slowest = 0.0;
    for (Formula f : {Formula::dirichlet_trunc, Formula::convexification, Formula::periodization, Formula::buffer})
        for (double R : {4.0, 8.0}) {
            CellProblem p = base(f, L, R);
            p.micro.params.intensity = 0.3;  // inclusions present, same density inside
            p.sweep.k_schedule = {128.0};
            const auto t0 = std::chrono::steady_clock::now();
            const auto e = estimate_vbar(p, 1);
            slowest = std::max(slowest, seconds_since(t0));
            worst = std::max(worst, std::abs(e.mean - want) / want);
        }
    return {worst <= 1e-6 && slowest < 1.0, "max rel err " + fmt("%.2e", worst) + ", slowest " + fmt("%.3f", slowest) + " s"};
}

Outcome laminate() {
    double worst = 0.0, slowest = 0.0;
    for (double R : {2.0, 4.0}) {
        CellProblem p = base(Formula::periodization, row({1.0}), R);
        p.micro.kind = ProcessKind::deterministic_periodic;
        p.micro.params.spacing = 1.0;
        p.micro.params.radius = 0.25;
        p.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
        const auto t0 = std::chrono::steady_clock::now();
        const auto e = estimate_vbar(p, 1);
        slowest = std::max(slowest, seconds_since(t0));
        worst = std::max(worst, std::abs(e.mean - 1.6));
    }
    const LaminateSpec ls{{PhaseFunction::isotropic_quadratic(1.0), PhaseFunction::isotropic_quadratic(4.0)}, {0.5, 0.5}, 2.0};
    const double oracle = laminate_1d_vbar(ls, 1.0);
    return {worst <= 1e-6 && std::abs(oracle - 1.6) <= 1e-8 && slowest < 1.0,
            "max |err| " + fmt("%.2e", worst) + ", dual oracle " + fmt("%.12f", oracle) + ", slowest " +
                fmt("%.3f", slowest) + " s"};
}

const char* kCommutationConfig =
    "microstructure.kind = poisson\n"
    "microstructure.intensity = 0.3\n"
    "microstructure.radius = 1\n"
    "integrand.matrix_phase = quadratic(1)\n"
    "integrand.inclusion_phase = ball(2, quadratic(4))\n"
    "grid.cells_per_unit = 4\n"
    "solver.k_schedule = 1, 4, 16, 64, 256, 1024, 4096\n"
    "run.formula = dirichlet_trunc\n"
    "run.lambdas = 0.6 0.8\n"
    "run.R_list = 8\n"
    "run.realizations = 8\n"
    "run.master_seed = 2718\n";

ExperimentResult g_commutation;

Outcome commutation() {
    const auto cfg = parse_config(kCommutationConfig);
    g_commutation = run_experiment(cfg, RunOptions{1, (g_work / "c3_t1").string(), kCommutationConfig});
    const auto& e = g_commutation.estimates.front();
    std::size_t monotone = 0, stabilized = 0;
    double worst_drop = 0.0;
    for (const auto& r : e.realizations) {
        bool mono = true;
        for (std::size_t i = 1; i < r.solves.size(); ++i) {
            const double drop = r.solves[i - 1].value - r.solves[i].value;
            worst_drop = std::max(worst_drop, drop / std::abs(r.solves[i].value));
            if (drop > 10 * cfg.tol_e * std::abs(r.solves[i].value)) mono = false;
        }
        monotone += mono;
        stabilized += r.stabilized;
    }
    const std::size_t n = e.realizations.size();
    return {monotone == n && stabilized == n,
            std::to_string(monotone) + "/" + std::to_string(n) + " monotone (worst rel drop " + fmt("%.1e", worst_drop) +
                "), " + std::to_string(stabilized) + "/" + std::to_string(n) + " stabilized, mean " +
                fmt("%.6f", e.mean)};
}

Outcome obstruction() {
    CellProblem p = base(Formula::dirichlet_trunc, row({3.0 / std::sqrt(2.0), 3.0 / std::sqrt(2.0)}), 8);
    p.micro.params.intensity = 0.3;
    p.micro.params.radius = 1.0;
    p.spec.inclusion_phase = PhaseFunction::indicator_ball(2.0, PhaseFunction::isotropic_quadratic(4.0));
    p.master_seed = 2718;
    p.theta = 1.0;
    // realizations whose inclusions reach the boundary: some center within distance 1 of it
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < 64 && picked.size() < 8; ++i)
        if (min_boundary_distance(realization_sample(p, i, p.R)) <= 1.0) picked.push_back(i);
    CellProblem q = p;
    q.formula = Formula::buffer;
    std::vector<RealizationResult> dir(picked.size()), buf(picked.size());
    parallel_for_index(picked.size(), g_threads, [&](std::size_t j) {
        dir[j] = solve_realization(p, picked[j]);
        buf[j] = solve_realization(q, picked[j]);
    });
    std::size_t diverged = 0, stable = 0;
    for (std::size_t j = 0; j < picked.size(); ++j) {
        diverged += dir[j].diverged;
        stable += buf[j].stabilized && !buf[j].diverged && std::isfinite(buf[j].value);
    }
    const std::size_t n = picked.size();
    return {n > 0 && 10 * diverged >= 9 * n && stable == n,
            "dirichlet diverged " + std::to_string(diverged) + "/" + std::to_string(n) + ", buffer stabilized " +
                std::to_string(stable) + "/" + std::to_string(n)};
}

Outcome bc_ordering() {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const SolverOptions opt;
    std::size_t ok = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        IntegrandSpec spec;
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(2.0 + trial % 5);
        const Mat L = row({u(eng), u(eng)});
        const double k = std::pow(4.0, trial % 6);
        const BoxSpec box{2, 4.0, false};
        const Medium med(sample_poisson(0.4, box, 1000 + trial, "bc"));
        const Truncation tr{k};
        auto solve = [&](bool periodic, const BCSpec& bc) {
            return minimize_convex(Grid::make(2, 4.0, 16, periodic), spec, med, bc, tr, 1.0, opt).second.final_energy;
        };
        const double d = solve(false, BCSpec::dirichlet_affine(L));
        const double p = solve(true, BCSpec::periodic(L));
        const double m = solve(false, BCSpec::mean_zero(L));
        const double tol = 10 * opt.tol_e * std::abs(d);
        worst = std::max({worst, (p - d) / std::abs(d), (m - p) / std::abs(d)});
        ok += d >= p - tol && p >= m - tol;
    }
    // tiny grids against the value-only oracle
    std::size_t spot = 0;
    BruteForceOptions wide;
    wide.max_free_dims = 9;
    for (int trial = 0; trial < 5; ++trial) {
        IntegrandSpec spec;
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(3.0);
        const Mat L = row({u(eng), u(eng)});
        const Medium med(sample_poisson(0.5, BoxSpec{2, 2.0, false}, 2000 + trial, "bc"));
        const double d = brute_force_min(Grid::make(2, 2.0, 3, false), spec, med, BCSpec::dirichlet_affine(L), std::nullopt, 1, wide).value;
        const double p = brute_force_min(Grid::make(2, 2.0, 2, true), spec, med, BCSpec::periodic(L), std::nullopt, 1, wide).value;
        const double m = brute_force_min(Grid::make(2, 2.0, 2, false), spec, med, BCSpec::mean_zero(L), std::nullopt, 1, wide).value;
        const double d2 = brute_force_min(Grid::make(2, 2.0, 2, false), spec, med, BCSpec::dirichlet_affine(L), std::nullopt, 1, wide).value;
        spot += d2 >= p - 1e-12 && p >= m - 1e-12 && d >= 0.0;
    }
    return {ok == 20 && spot == 5, std::to_string(ok) + "/20 triples ordered (worst violation " + fmt("%.1e", worst) +
                                       "), " + std::to_string(spot) + "/5 brute-force spot checks"};
}

Outcome formula_agreement() {
    const Mat L = row({1.0, 0.5});
    std::vector<double> gap, gap_se;
    double se_sum16 = 0.0, h16 = 0.0;
    for (double R : {4.0, 8.0, 16.0}) {
        CellProblem p = base(Formula::dirichlet_trunc, L, R);
        p.micro.params.intensity = 0.3;
        p.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
        p.master_seed = 31;
        CellProblem q = p;
        q.formula = Formula::convexification;
        const auto a = estimate_vbar(p, 16, g_threads), b = estimate_vbar(q, 16, g_threads);
        // paired differences share the realization
        std::vector<double> d;
        for (std::size_t i = 0; i < 16; ++i) d.push_back(a.realizations[i].value - b.realizations[i].value);
        double mean = 0.0;
        for (double x : d) mean += x / 16.0;
        double ss = 0.0;
        for (double x : d) ss += (x - mean) * (x - mean);
        gap.push_back(mean);
        gap_se.push_back(std::sqrt(ss / 15.0 / 16.0));
        if (R == 16.0) {
            se_sum16 = a.std_error + b.std_error;
            h16 = p.h();
        }
    }
    const bool close = std::abs(gap[2]) <= 3 * se_sum16 + 5 * h16;
    bool shrinking = true;
    for (std::size_t i = 1; i < gap.size(); ++i)
        if (gap[i] > gap[i - 1] + 3 * std::hypot(gap_se[i], gap_se[i - 1])) shrinking = false;
    return {close && shrinking, "gaps R=4,8,16: " + fmt("%.4g", gap[0]) + ", " + fmt("%.4g", gap[1]) + ", " +
                                    fmt("%.4g", gap[2]) + " (bound at 16: " + fmt("%.3g", 3 * se_sum16 + 5 * h16) + ")"};
}

bool saturated(const PointSample& s, double r, bool torus) {
    const double step = r / 10, lo = s.box.lo(), hi = s.box.hi(), P = s.box.side;
    const double inset = torus ? 0.0 : 2 * r;
    for (double x = lo + inset; x <= hi - inset; x += step)
        for (double y = lo + inset; y <= hi - inset; y += step) {
            bool covered = false;
            for (const auto& q : s.points) {
                double dx = q[0] - x, dy = q[1] - y;
                if (torus) {
                    dx -= P * std::round(dx / P);
                    dy -= P * std::round(dy / P);
                }
                if (dx * dx + dy * dy < 4 * r * r) {
                    covered = true;
                    break;
                }
            }
            if (!covered) return false;
        }
    return true;
}

bool hardcore_ok(const PointSample& s, double r, bool torus) {
    const double P = s.box.side;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            double d2 = 0;
            for (int k = 0; k < s.box.dim; ++k) {
                double dx = s.points[i][k] - s.points[j][k];
                if (torus) dx -= P * std::round(dx / P);
                d2 += dx * dx;
            }
            if (d2 < 4 * r * r) return false;
        }
    return true;
}

Outcome periodization() {
    std::size_t exact = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const int d = 1 + static_cast<int>(s % 3);
        const BoxSpec box{d, 6.0, false};
        const auto smp = sample_poisson(0.4, box, s, "microstructure");
        const auto per = periodize_in_law(smp, box.side);
        Point lo{0, 0, 0}, hi{0, 0, 0};
        for (int i = 0; i < d; ++i) lo[i] = box.lo(), hi[i] = box.hi();
        exact += per.points_in_region(lo, hi) == smp.points;
    }
    const double r = 0.5;
    const BoxSpec box{2, 8.0, false};
    std::size_t park = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto smp = sample_random_parking(r, box, s, -1.0, 10.0 / ball_volume(2, r));
        const auto per = periodize_in_law(smp, box.side).base;
        park += hardcore_ok(smp, r, false) && saturated(smp, r, false) && hardcore_ok(per, r, true) &&
                saturated(per, r, true);
    }
    return {exact == 1000 && park == 100, std::to_string(exact) + "/1000 Poisson set equalities, " +
                                              std::to_string(park) + "/100 parking samples hardcore and saturated"};
}

Outcome sandwich() {
    const double gamma = 0.5, cap = 1.0;
    struct Medium_ {
        const char* name;
        CellProblem p;
        std::vector<Mat> lambdas;
    };
    std::vector<Medium_> media;
    {
        CellProblem p = base(Formula::nonconvex, row({1.0}), 4);
        p.micro.kind = ProcessKind::deterministic_periodic;
        p.micro.params.spacing = 1.0;
        p.micro.params.radius = 0.25;
        p.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
        media.push_back({"laminate", p, {row({-1.5}), row({-0.5}), row({0.25}), row({1.0}), row({2.0})}});
    }
    {
        CellProblem p = base(Formula::nonconvex, row({1.0, 0.0}), 4);
        p.micro.params.intensity = 0.3;
        p.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
        media.push_back({"poisson", p,
                         {row({1.0, 0.0}), row({0.0, -0.7}), row({0.6, 0.8}), row({-1.2, 0.4}), row({0.3, 1.5})}});
    }
    std::size_t ok = 0, total = 0, reduce_ok = 0;
    double worst_reduce = 0.0;
    for (auto& m : media) {
        m.p.master_seed = 77;
        m.p.restarts = 8;
        for (const Mat& L : m.lambdas) {
            CellProblem w = m.p;
            w.lambda = L;
            Mat xi = Mat::Ones(1, L.cols());
            w.spec.nonconvex = NonconvexSpec{gamma, cap, NonconvexKind::oscillatory, xi};
            CellProblem v = w;
            v.formula = Formula::convexification;
            const CorrectorConfig cc{0.0, CorrectorBC::convexification};
            const auto vb = estimate_vbar(v, 8, g_threads);
            const auto wb = estimate_wbar(w, cc, 8, g_threads);
            const double s = vb.std_error + wb.std_error;
            ++total;
            ok += vb.mean - 3 * s <= wb.mean && wb.mean <= (1 + gamma * cap) * (1 + vb.mean) + 3 * s;
            // gamma = 0 reproduces the convex estimate with identical seeds
            CellProblem w0 = w;
            w0.spec.nonconvex->gamma = 0.0;
            const auto w0b = estimate_wbar(w0, cc, 8, g_threads);
            bool same = true;
            for (std::size_t i = 0; i < 8; ++i) {
                const double a = w0b.realizations[i].value, b = vb.realizations[i].value;
                worst_reduce = std::max(worst_reduce, std::abs(a - b) / std::abs(b));
                if (std::abs(a - b) > 10 * w.solver.tol_e * std::abs(b)) same = false;
            }
            reduce_ok += same;
        }
    }
    return {ok == total && reduce_ok == total,
            std::to_string(ok) + "/" + std::to_string(total) + " sandwiches hold, " + std::to_string(reduce_ok) + "/" +
                std::to_string(total) + " gamma=0 reductions (worst rel " + fmt("%.1e", worst_reduce) + ")"};
}

Outcome convexity() {
    std::mt19937_64 eng(9);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::size_t ok = 0;
    double worst = -INFINITY;
    for (int i = 0; i < 10; ++i) {
        const Mat L1 = row({u(eng), u(eng)}), L2 = row({u(eng), u(eng)});
        const Mat Lm = 0.5 * (L1 + L2);
        auto est = [&](const Mat& L) {
            CellProblem p = base(Formula::convexification, L, 4);
            p.micro.params.intensity = 0.3;
            p.spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
            p.master_seed = 100 + i;
            return estimate_vbar(p, 8, g_threads);
        };
        const auto e1 = est(L1), e2 = est(L2), em = est(Lm);
        const auto probe = convexity_probe(e1, e2, em, 5 * 0.25);
        worst = std::max(worst, probe.midpoint - probe.chord);
        ok += probe.pass;
    }
    return {ok == 10, std::to_string(ok) + "/10 probes pass (max midpoint - chord " + fmt("%.3g", worst) + ")"};
}

Outcome oracle_equivalence() {
    std::size_t cases = 0, ok = 0;
    double worst = 0.0;
    BruteForceOptions wide;
    wide.max_free_dims = 9;
    auto convex_case = [&](const Grid& g, const IntegrandSpec& spec, const Medium& med, const BCSpec& bc,
                           const std::optional<Truncation>& k) {
        const double bf = brute_force_min(g, spec, med, bc, k, 1.0, wide).value;
        const double s = minimize_convex(g, spec, med, bc, k, 1.0, SolverOptions{}).second.final_energy;
        worst = std::max(worst, std::abs(bf - s));
        ++cases;
        ok += std::abs(bf - s) <= 1e-8;
    };
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    {
        IntegrandSpec spec;
        spec.inclusion_phase = PhaseFunction::isotropic_quadratic(4.0);
        PointSample smp;
        smp.box = BoxSpec{1, 3.0, false};
        smp.points = {{1.0, 0, 0}};
        smp.radii = {0.5};
        convex_case(Grid::make(1, 3.0, 3, false), spec, Medium(smp), BCSpec::dirichlet_affine(row({1.0})), std::nullopt);
    }
    for (int t = 0; t < 12; ++t) {
        IntegrandSpec spec;
        switch (t % 4) {
            case 0: spec.inclusion_phase = PhaseFunction::isotropic_quadratic(3.0); break;
            case 1: spec.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::isotropic_quadratic(2.0)); break;
            case 2: spec.matrix_phase = PhaseFunction::power_law(1.0, 3.0), spec.p = 3.0; break;
            case 3: spec.inclusion_phase = PhaseFunction::barrier(1.0, 1.0, 2.0); break;
        }
        const Medium med(sample_poisson(0.6, BoxSpec{2, 2.0, false}, 300 + t, "bf"));
        const Mat L = t % 4 == 3 ? Mat(0.2 * row({u(eng), u(eng)})) : row({u(eng), u(eng)});
        const std::optional<Truncation> k =
            t % 4 == 1 || t % 4 == 3 ? std::optional<Truncation>(Truncation{16.0}) : std::nullopt;
        convex_case(Grid::make(2, 2.0, 3, false), spec, med, BCSpec::dirichlet_affine(L), k);
        convex_case(Grid::make(2, 2.0, 2, false), spec, med, BCSpec::mean_zero(L), k);
    }
    // nonconvex: the dense scan brackets the multistart result from below
    std::size_t nc_ok = 0, nc_cases = 0;
    for (int t = 0; t < 6; ++t) {
        IntegrandSpec spec;
        spec.nonconvex = NonconvexSpec{0.5, 1.0, NonconvexKind::oscillatory, row({2.0 + t})};
        const Grid g = Grid::make(1, 2.0, t % 2 ? 3 : 2, false);
        const Field bd = Field::affine(g, row({u(eng)}));
        BruteForceOptions o;
        o.nonconvex = true;
        const double bf = brute_force_min(g, spec, Medium{}, BCSpec::dirichlet_data(bd), std::nullopt, 1.0, o).value;
        const double ms = solve_nonconvex(g, spec, Medium{}, bd, 1.0, 8, 40 + t, SolverOptions{}).second.final_energy;
        ++nc_cases;
        nc_ok += bf <= ms + 1e-6;
    }
    // density gradients against central differences
    std::size_t fd_bad = 0, fd_variants = 0;
    {
        struct V {
            IntegrandSpec spec;
            Region region;
            std::optional<Truncation> trunc;
            double scale;
            int m, d;
        };
        std::vector<V> vs;
        IntegrandSpec s;
        vs.push_back({s, Region::matrix, std::nullopt, 2.0, 1, 2});
        s.matrix_phase = PhaseFunction::power_law(1.5, 3.0);
        s.p = 3.0;
        vs.push_back({s, Region::matrix, std::nullopt, 2.0, 1, 3});
        vs.push_back({s, Region::buffer, std::nullopt, 2.0, 1, 2});
        s = IntegrandSpec{};
        s.inclusion_phase = PhaseFunction::barrier(2.0, 1.0, 2.0);
        vs.push_back({s, Region::inclusion, std::nullopt, 1.3, 1, 2});
        for (auto sch : {TruncationScheme::constraint_yosida, TruncationScheme::full_yosida}) {
            s.inclusion_phase = PhaseFunction::indicator_ball(1.0, PhaseFunction::isotropic_quadratic(4.0));
            vs.push_back({s, Region::inclusion, Truncation{16.0, sch}, 2.5, 1, 2});
            s.inclusion_phase = PhaseFunction::barrier(1.0, 1.0, 2.0);
            vs.push_back({s, Region::inclusion, Truncation{8.0, sch}, 2.5, 1, 2});
        }
        s = IntegrandSpec{};
        s.m = 2;
        Mat xi(2, 2);
        xi << 1.0, 0.5, -0.3, 0.8;
        s.nonconvex = NonconvexSpec{0.7, 0.5, NonconvexKind::oscillatory, xi};
        vs.push_back({s, Region::matrix, std::nullopt, 2.0, 2, 2});
        s.nonconvex->kind = NonconvexKind::det_well;
        vs.push_back({s, Region::matrix, std::nullopt, 1.5, 2, 2});
        std::mt19937_64 fe(23);
        for (const auto& v : vs) {
            ++fd_variants;
            std::uniform_real_distribution<double> w(-v.scale, v.scale);
            const bool nc = static_cast<bool>(v.spec.nonconvex);
            auto f = [&](const Mat& G) { return evaluate_region(v.spec, v.region, G, v.trunc, nc, false).value.value(); };
            for (int i = 0; i < 100; ++i) {
                Mat F(v.m, v.d);
                for (int a = 0; a < v.m; ++a)
                    for (int b = 0; b < v.d; ++b) F(a, b) = w(fe);
                const Mat g = evaluate_region(v.spec, v.region, F, v.trunc, nc, true).gradient;
                for (int a = 0; a < v.m; ++a)
                    for (int b = 0; b < v.d; ++b) {
                        Mat p = F, q = F;
                        p(a, b) += 1e-5;
                        q(a, b) -= 1e-5;
                        const double fd = (f(p) - f(q)) / 2e-5;
                        if (std::abs(fd - g(a, b)) > 1e-5 * std::max(1.0, std::abs(g(a, b)))) ++fd_bad;
                    }
            }
        }
    }
    return {ok == cases && nc_ok == nc_cases && fd_bad == 0,
            std::to_string(ok) + "/" + std::to_string(cases) + " convex (worst " + fmt("%.1e", worst) + "), " +
                std::to_string(nc_ok) + "/" + std::to_string(nc_cases) + " nonconvex brackets, " +
                std::to_string(fd_bad) + " finite-difference mismatches over " + std::to_string(fd_variants) +
                " variants x 100 points"};
}

Outcome determinism() {
    if (g_commutation.estimates.empty()) commutation();
    const auto cfg = parse_config(kCommutationConfig);
    run_experiment(cfg, RunOptions{8, (g_work / "c3_t8").string(), kCommutationConfig});
    bool same = true;
    for (const char* f : {"solves.csv", "summary.csv"})
        same = same && slurp(g_work / "c3_t1" / f) == slurp(g_work / "c3_t8" / f) && !slurp(g_work / "c3_t1" / f).empty();
    return {same, same ? "solves.csv and summary.csv byte-identical" : "CSV files differ"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::string work = (fs::temp_directory_path() / "infhom_acceptance").string();
    app.add_option("--only", only, "criteria to run (default: all)");
    app.add_option("--threads", g_threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--work", work, "scratch directory for experiment output");
    CLI11_PARSE(app, argc, argv);
    g_work = work;
    fs::create_directories(g_work);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"jensen identity", jensen},
        {"1D laminate oracle", laminate},
        {"truncation monotonicity and commutation", commutation},
        {"boundary obstruction dichotomy", obstruction},
        {"boundary condition ordering", bc_ordering},
        {"formula agreement for finite integrands", formula_agreement},
        {"periodization in law and parking invariants", periodization},
        {"nonconvex sandwich", sandwich},
        {"convexity probes", convexity},
        {"solver and oracle equivalence", oracle_equivalence},
        {"thread-count determinism", determinism},
    };
    const std::set<int> sel(only.begin(), only.end());
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!sel.empty() && !sel.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " -- "
                  << o.detail << " [" << fmt("%.1f", seconds_since(t0)) << " s]" << std::endl;
    }
    return all ? 0 : 1;
}
