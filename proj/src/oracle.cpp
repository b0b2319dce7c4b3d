#include "infhom/oracle.hpp"

#include "infhom/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace infhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double as_double(const ExtReal& v) { return v.is_finite() ? v.value() : kInf; }

// Maximizer of a concave (or unimodal) function on [a, b].
template <class F>
double golden_max(const F& g, double a, double b) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 400 && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d);
        }
    }
    return gc >= gd ? c : d;
}

Mat scalar(double x) {
    Mat F(1, 1);
    F(0, 0) = x;
    return F;
}

}  // namespace

void LaminateSpec::validate() const {
    if (phases.empty() || phases.size() != fractions.size())
        throw ParameterError("laminate: need one fraction per phase");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw ParameterError("laminate: fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ParameterError("laminate: fractions must sum to 1");
    if (!(p > 1.0)) throw ParameterError("laminate: p must exceed 1");
}

double legendre_conjugate(const std::function<ExtReal(double)>& f, double sigma, double domain_radius) {
    auto g = [&](double x) { return sigma * x - as_double(f(x)); };
    double X = domain_radius;
    if (!std::isfinite(X)) {
        X = 1.0;
        while (g(X) > g(0.5 * X) || g(-X) > g(-0.5 * X)) {
            X *= 2.0;
            if (X > 1e15) throw SolverError("legendre_conjugate: function is not superlinear", X);
        }
    }
    return g(golden_max(g, -X, X));
}

double laminate_1d_vbar(const LaminateSpec& spec, double lambda) {
    spec.validate();
    std::vector<std::function<ExtReal(double)>> fs;
    for (const auto& ph : spec.phases) fs.push_back([&ph](double x) { return ph.value(scalar(x)); });
    auto h = [&](double sigma) {
        double s = sigma * lambda;
        for (std::size_t i = 0; i < fs.size(); ++i)
            s -= spec.fractions[i] * legendre_conjugate(fs[i], sigma, spec.phases[i].domain_radius());
        return s;
    };
    double smax = 10.0 * spec.p * std::pow(std::abs(lambda), spec.p - 1.0);
    if (!(smax > 0.0)) smax = 1.0;
    const int n = 400;
    for (int grow = 0; grow < 30; ++grow, smax *= 4.0) {
        int best = 0;
        double hb = -kInf;
        std::vector<double> grid(n + 1);
        for (int i = 0; i <= n; ++i) {
            grid[i] = -smax + 2.0 * smax * i / n;
            const double v = h(grid[i]);
            if (v > hb) hb = v, best = i;
        }
        if (best == 0 || best == n) continue;  // maximizer may lie outside the range
        return h(golden_max(h, grid[best - 1], grid[best + 1]));
    }
    throw SolverError("laminate_1d_vbar: flux range exhausted", smax);
}

ExtReal constant_vbar(const PhaseFunction& phase, const Mat& lambda) { return phase.value(lambda); }

BruteForceResult brute_force_min(const Grid& grid, const IntegrandSpec& spec, const Medium& medium,
                                 const BCSpec& bc, const std::optional<Truncation>& truncation, double t,
                                 const BruteForceOptions& opt) {
    const CellEnergy E(grid, spec, medium, bc, truncation, t, opt.nonconvex);
    const bool project = bc.kind == BCKind::mean_zero;
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < E.size(); ++i)
        if (!E.constrained()[i]) free.push_back(i);
    const int D = static_cast<int>(free.size());
    if (D > opt.max_free_dims)
        throw UnsupportedError("brute_force_min: " + std::to_string(D) + " free values exceed the limit of " +
                               std::to_string(opt.max_free_dims));

    Field work = Field::zeros(grid, spec.m, bc.field_bc());
    auto nodal = [&](const Eigen::VectorXd& z) {
        std::fill(work.values.begin(), work.values.end(), 0.0);
        for (int i = 0; i < D; ++i) work.values[free[i]] = z[i];
        return project ? project_mean_zero(work).values : work.values;
    };
    auto eval = [&](const Eigen::VectorXd& z) { return as_double(E.value(nodal(z))); };

    BruteForceResult res;
    res.free_dims = D;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(D);
    const double e0 = eval(z);
    if (!std::isfinite(e0)) throw DomainError("brute_force_min: energy is infinite at zero");
    if (D == 0) {
        res.value = e0;
        res.minimizer = nodal(z);
        res.method = "linear";
        return res;
    }

    // Quadratic model from values: c + b.z + z.A z / 2 (exact when E is quadratic).
    auto model = [&](const Eigen::VectorXd& at, double s, Eigen::VectorXd& b, Eigen::MatrixXd& A) {
        const double c = eval(at);
        Eigen::VectorXd ep(D), em(D);
        for (int i = 0; i < D; ++i) {
            Eigen::VectorXd u = at;
            u[i] += s;
            ep[i] = eval(u);
            u[i] = at[i] - s;
            em[i] = eval(u);
        }
        b = (ep - em) / (2.0 * s);
        A.resize(D, D);
        for (int i = 0; i < D; ++i) {
            A(i, i) = (ep[i] + em[i] - 2.0 * c) / (s * s);
            for (int j = i + 1; j < D; ++j) {
                Eigen::VectorXd u = at;
                u[i] += s;
                u[j] += s;
                A(i, j) = A(j, i) = (eval(u) - ep[i] - ep[j] + c) / (s * s);
            }
        }
        return c;
    };
    auto newton_step = [&](const Eigen::MatrixXd& A, const Eigen::VectorXd& b) -> Eigen::VectorXd {
        return -Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(A).solve(b);
    };

    if (!opt.nonconvex) {
        Eigen::VectorXd b;
        Eigen::MatrixXd A;
        const double scale = std::max(1.0, grid.h());
        const double c = model(z, scale, b, A);
        Eigen::VectorXd zs = newton_step(A, b);
        bool quadratic = std::isfinite(eval(zs));
        Engine eng = make_engine(0x9e3779b97f4a7c15ULL, "brute-force-check");
        for (int trial = 0; trial < 4 && quadratic; ++trial) {
            Eigen::VectorXd u(D);
            for (int i = 0; i < D; ++i) u[i] = uniform_in(eng, -scale, scale);
            const double pred = c + b.dot(u) + 0.5 * u.dot(A * u);
            const double act = eval(u);
            quadratic = std::isfinite(act) && std::abs(act - pred) <= 1e-10 * (1.0 + std::abs(act));
        }
        if (quadratic) {
            res.value = eval(zs);
            res.minimizer = nodal(zs);
            res.method = "linear";
            return res;
        }
        // Damped Newton with value-differenced gradient and Hessian.
        double fz = e0;
        for (int it = 0; it < 500; ++it) {
            const double zn = z.cwiseAbs().maxCoeff();
            Eigen::VectorXd g, gd;
            Eigen::MatrixXd H, Hd;
            model(z, 1e-6 * (1.0 + zn), g, Hd);
            model(z, 1e-4 * (1.0 + zn), gd, H);
            Eigen::VectorXd d = newton_step(H, g);
            if (!(g.dot(d) < 0.0)) d = -g;
            double step = 1.0;
            bool moved = false;
            for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
                const Eigen::VectorXd trial = z + step * d;
                const double ft = eval(trial);
                if (ft < fz) {
                    z = trial;
                    fz = ft;
                    moved = true;
                    break;
                }
            }
            if (!moved || (step * d).cwiseAbs().maxCoeff() < 1e-14 * (1.0 + zn)) break;
        }
        res.value = fz;
        res.minimizer = nodal(z);
        res.method = "newton";
        return res;
    }

    // Nonconvex: dense tensor scan, then coordinate golden-section polish.
    const double L = opt.scan_radius > 0.0 ? opt.scan_radius : grid.side;
    const int q = std::max(3, static_cast<int>(std::floor(std::pow(static_cast<double>(opt.scan_samples), 1.0 / D))));
    const double spacing = 2.0 * L / (q - 1);
    Eigen::VectorXd best = z;
    double fbest = e0;
    std::vector<int> idx(D, 0);
    for (;;) {
        Eigen::VectorXd u(D);
        for (int i = 0; i < D; ++i) u[i] = -L + spacing * idx[i];
        const double fu = eval(u);
        if (fu < fbest) fbest = fu, best = u;
        int i = 0;
        while (i < D && ++idx[i] == q) idx[i++] = 0;
        if (i == D) break;
    }
    double width = spacing;
    for (int sweep = 0; sweep < 60; ++sweep) {
        const double before = fbest;
        for (int i = 0; i < D; ++i) {
            auto g = [&](double v) {
                Eigen::VectorXd u = best;
                u[i] = v;
                return -eval(u);
            };
            const double v = golden_max(g, best[i] - width, best[i] + width);
            const double fv = -g(v);
            if (fv < fbest) fbest = fv, best[i] = v;
        }
        if (D == 1 || (before - fbest) <= 1e-15 * (1.0 + std::abs(fbest))) {
            width *= 0.5;
            if (width < 1e-10 * spacing) break;
        }
    }
    res.value = fbest;
    res.minimizer = nodal(best);
    res.method = "scan";
    return res;
}

}  // namespace infhom
