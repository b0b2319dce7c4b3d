#include "infhom/integrands.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace infhom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(const Mat& F) {
    Eigen::VectorXd v(F.size());
    for (int i = 0; i < F.rows(); ++i)
        for (int j = 0; j < F.cols(); ++j) v[i * F.cols() + j] = F(i, j);
    return v;
}

Mat unvec(const Eigen::VectorXd& v, int rows, int cols) {
    Mat F(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) F(i, j) = v[i * cols + j];
    return F;
}

// Dense stand-in for A: a 1x1 A means A(0,0) * Identity.
Eigen::MatrixXd expand(const Eigen::MatrixXd& A, Eigen::Index n) {
    if (A.size() == 1) return A(0, 0) * Eigen::MatrixXd::Identity(n, n);
    if (A.rows() != n || A.cols() != n)
        throw ParameterError("quadratic phase: matrix size does not match m*d = " + std::to_string(n));
    return A;
}

bool isotropic(const QuadraticForm& q, double* coeff) {
    if (q.A.size() == 1) {
        *coeff = q.A(0, 0);
        return true;
    }
    const double c = q.A(0, 0);
    if ((q.A - c * Eigen::MatrixXd::Identity(q.A.rows(), q.A.cols())).cwiseAbs().maxCoeff() != 0.0) return false;
    *coeff = c;
    return true;
}

double barrier_value(const Barrier& b, double s) {
    const double D = 1.0 - s * s / (b.r * b.r);
    return b.c * std::pow(s, b.p) / D;
}

double barrier_derivative(const Barrier& b, double s) {
    const double D = 1.0 - s * s / (b.r * b.r);
    const double r2 = b.r * b.r;
    return b.c * (b.p * std::pow(s, b.p - 1.0) / D + (2.0 / r2) * std::pow(s, b.p + 1.0) / (D * D));
}

double barrier_second(const Barrier& b, double s) {
    const double r2 = b.r * b.r;
    const double D = 1.0 - s * s / r2;
    const double dD = 2.0 * s / r2;  // derivative of 1/D is dD / D^2
    const double p = b.p;
    return b.c * (p * (p - 1.0) * std::pow(s, p - 2.0) / D + p * std::pow(s, p - 1.0) * dD / (D * D) +
                  (2.0 / r2) * (p + 1.0) * std::pow(s, p) / (D * D) +
                  (2.0 / r2) * std::pow(s, p + 1.0) * 2.0 * dD / (D * D * D));
}

double radial_second(const PhaseFunction& f, double s) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ZeroPhase>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, PowerLaw>) {
                if (s == 0.0) return v.p >= 2.0 ? (v.p == 2.0 ? 2.0 * v.c : 0.0) : kInf;
                return v.c * v.p * (v.p - 1.0) * std::pow(s, v.p - 2.0);
            } else if constexpr (std::is_same_v<T, QuadraticForm>) {
                double c = 0.0;
                isotropic(v, &c);
                return 2.0 * c;
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                return radial_second(*v.inner, s);
            } else {
                return barrier_second(v, s);
            }
        },
        f.variant());
}

// Gradient of the phase; on the closed boundary of an indicator ball the inner
// gradient is returned unless `strict`.
Mat phase_gradient(const PhaseFunction& f, const Mat& F, bool strict) {
    return std::visit(
        [&](const auto& v) -> Mat {
            using T = std::decay_t<decltype(v)>;
            const double s = F.norm();
            if constexpr (std::is_same_v<T, ZeroPhase>) {
                return Mat::Zero(F.rows(), F.cols());
            } else if constexpr (std::is_same_v<T, PowerLaw>) {
                if (s == 0.0) return Mat::Zero(F.rows(), F.cols());
                return v.c * v.p * std::pow(s, v.p - 2.0) * F;
            } else if constexpr (std::is_same_v<T, QuadraticForm>) {
                if (v.A.size() == 1) return 2.0 * v.A(0, 0) * F;
                const Eigen::MatrixXd A = expand(v.A, F.size());
                return unvec((A + A.transpose()) * vec(F), static_cast<int>(F.rows()), static_cast<int>(F.cols()));
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                if (s > v.r || (strict && s == v.r))
                    throw DomainError("gradient: |F| = " + std::to_string(s) + " not inside ball of radius " +
                                      std::to_string(v.r));
                return phase_gradient(*v.inner, F, strict);
            } else {
                if (s >= v.r) throw DomainError("gradient: |F| outside barrier domain");
                if (s == 0.0) return Mat::Zero(F.rows(), F.cols());
                return (barrier_derivative(v, s) / s) * F;
            }
        },
        f.variant());
}

// Closed-form radial minimizer t of f(t) + k (s - t)^p when available.
std::optional<double> radial_closed_form(const PhaseFunction& f, double k, double p, double s) {
    return std::visit(
        [&](const auto& v) -> std::optional<double> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ZeroPhase>) {
                return s;
            } else if constexpr (std::is_same_v<T, PowerLaw>) {
                if (v.p != p) return std::nullopt;
                const double q = 1.0 / (p - 1.0);
                const double kq = std::pow(k, q);
                return s * kq / (std::pow(v.c, q) + kq);
            } else if constexpr (std::is_same_v<T, QuadraticForm>) {
                double c = 0.0;
                if (p != 2.0 || !isotropic(v, &c)) return std::nullopt;
                return s * k / (c + k);
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                auto t = radial_closed_form(*v.inner, k, p, s);
                if (!t) return std::nullopt;
                return std::min(*t, v.r);
            } else {
                return std::nullopt;
            }
        },
        f.variant());
}

// Safeguarded Newton on g'(t) = f'(t) - k p (s - t)^(p-1) over [0, hi].
double radial_newton(const PhaseFunction& f, double k, double p, double s, double hi) {
    auto dg = [&](double t) { return f.radial_derivative(t) - k * p * std::pow(s - t, p - 1.0); };
    auto d2g = [&](double t) {
        const double pen = (p == 2.0) ? 2.0 * k : k * p * (p - 1.0) * std::pow(std::max(s - t, 0.0), p - 2.0);
        return radial_second(f, t) + pen;
    };
    double lo = 0.0;
    if (dg(lo) >= 0.0) return lo;
    const double ghi = dg(hi);
    if (ghi <= 0.0) return hi;
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double g = dg(t);
        if (g == 0.0) return t;
        if (g < 0.0)
            lo = t;
        else
            hi = t;
        const double h2 = d2g(t);
        double next = (std::isfinite(h2) && h2 > 0.0) ? t - g / h2 : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-12 * std::max(1.0, s) || hi - lo <= 1e-15 * std::max(1.0, s)) return next;
        t = next;
    }
    throw SolverError("yosida: radial Newton did not converge", std::abs(dg(t)));
}

YosidaResult yosida_radial(const PhaseFunction& f, double k, double p, const Mat& F) {
    YosidaResult res;
    const double s = F.norm();
    if (s == 0.0) {
        res.value = f.radial_value(0.0).value();
        res.gradient = Mat::Zero(F.rows(), F.cols());
        res.minimizer = Mat::Zero(F.rows(), F.cols());
        return res;
    }
    const double rdom = f.domain_radius();
    double t = 0.0;
    if (auto cf = radial_closed_form(f, k, p, s)) {
        t = std::min(*cf, s);
    } else if (std::holds_alternative<Barrier>(f.variant())) {
        // open domain: f' blows up at r, so the root is interior
        const double hi = std::min(s, std::nextafter(rdom, 0.0));
        t = radial_newton(f, k, p, s, hi);
    } else {
        t = radial_newton(f, k, p, s, std::min(s, rdom));
    }
    const double gap = s - t;
    res.value = f.radial_value(t).value() + k * std::pow(gap, p);
    res.gradient = (k * p * std::pow(gap, p - 1.0) / s) * F;
    res.minimizer = (t / s) * F;
    return res;
}

// Projected gradient descent for non-radial phases.
YosidaResult yosida_general(const PhaseFunction& f, double k, double p, const Mat& F) {
    const double r = f.domain_radius();
    auto project = [&](Mat G) {
        const double n = G.norm();
        if (std::isfinite(r) && n > r) G *= r / n;
        return G;
    };
    auto objective = [&](const Mat& G) -> ExtReal {
        const ExtReal v = f.value(G);
        if (v.is_infinite()) return v;
        return ExtReal(v.value() + k * std::pow((F - G).norm(), p));
    };
    auto grad = [&](const Mat& G) -> Mat {
        const Mat D = G - F;
        const double n = D.norm();
        Mat g = phase_gradient(f, G, false);
        if (n > 0.0) g += k * p * std::pow(n, p - 2.0) * D;
        return g;
    };

    Mat G = project(F);
    if (std::holds_alternative<Barrier>(f.variant()) && G.norm() >= r) G *= 0.5;
    ExtReal val = objective(G);
    double step = 1.0 / (1.0 + 2.0 * k);
    for (int it = 0; it < 20000; ++it) {
        const Mat g = grad(G);
        bool moved = false;
        for (int bt = 0; bt < 80; ++bt) {
            const Mat trial = project(G - step * g);
            const ExtReal tv = objective(trial);
            const double decrease = (G - trial).squaredNorm() / (2.0 * step);
            if (tv.is_finite() && tv.value() <= val.value() - 1e-4 * decrease) {
                const double move = (trial - G).norm();
                G = trial;
                val = tv;
                moved = true;
                if (move <= 1e-13 * (1.0 + G.norm())) {
                    YosidaResult res;
                    res.value = val.value();
                    res.minimizer = G;
                    const Mat D = F - G;
                    const double n = D.norm();
                    res.gradient = n > 0.0 ? Mat(k * p * std::pow(n, p - 2.0) * D) : Mat(Mat::Zero(F.rows(), F.cols()));
                    return res;
                }
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            YosidaResult res;
            res.value = val.value();
            res.minimizer = G;
            const Mat D = F - G;
            const double n = D.norm();
            res.gradient = n > 0.0 ? Mat(k * p * std::pow(n, p - 2.0) * D) : Mat(Mat::Zero(F.rows(), F.cols()));
            return res;
        }
    }
    throw SolverError("yosida: projected gradient did not converge", grad(G).norm());
}

Mat cofactor(const Mat& F) {
    const auto n = F.rows();
    Mat C(n, n);
    if (n == 1) {
        C(0, 0) = 1.0;
    } else if (n == 2) {
        C << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
    } else {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int i1 = (i + 1) % 3, i2 = (i + 2) % 3, j1 = (j + 1) % 3, j2 = (j + 2) % 3;
                C(i, j) = F(i1, j1) * F(i2, j2) - F(i1, j2) * F(i2, j1);
            }
    }
    return C;
}

}  // namespace

// ---------------------------------------------------------------------------

PhaseFunction PhaseFunction::zero() { return PhaseFunction(ZeroPhase{}); }

PhaseFunction PhaseFunction::power_law(double c, double p) {
    if (!(c > 0.0) || !(p > 1.0)) throw ParameterError("power_law: need c > 0 and p > 1");
    return PhaseFunction(PowerLaw{c, p});
}

PhaseFunction PhaseFunction::quadratic(Eigen::MatrixXd A) {
    if (A.rows() != A.cols() || A.size() == 0) throw ParameterError("quadratic: A must be square");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff()))
        throw ParameterError("quadratic: A must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw ParameterError("quadratic: A must be positive definite");
    return PhaseFunction(QuadraticForm{std::move(A)});
}

PhaseFunction PhaseFunction::isotropic_quadratic(double c) {
    if (!(c > 0.0)) throw ParameterError("quadratic: coefficient must be positive");
    Eigen::MatrixXd A(1, 1);
    A(0, 0) = c;
    return PhaseFunction(QuadraticForm{A});
}

PhaseFunction PhaseFunction::indicator_ball(double r, PhaseFunction inner) {
    if (!(r > 0.0)) throw ParameterError("indicator_ball: r must be positive");
    return PhaseFunction(IndicatorBall{r, std::make_shared<const PhaseFunction>(std::move(inner))});
}

PhaseFunction PhaseFunction::barrier(double r, double c, double p) {
    if (!(r > 0.0) || !(c > 0.0)) throw ParameterError("barrier: need r > 0 and c > 0");
    if (!(p >= 2.0)) throw ParameterError("barrier: p >= 2 required");
    return PhaseFunction(Barrier{r, c, p});
}

ExtReal PhaseFunction::value(const Mat& F) const {
    return std::visit(
        [&](const auto& v) -> ExtReal {
            using T = std::decay_t<decltype(v)>;
            const double s = F.norm();
            if constexpr (std::is_same_v<T, ZeroPhase>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, PowerLaw>) {
                return v.c * std::pow(s, v.p);
            } else if constexpr (std::is_same_v<T, QuadraticForm>) {
                if (v.A.size() == 1) return v.A(0, 0) * s * s;
                const Eigen::VectorXd x = vec(F);
                return x.dot(expand(v.A, x.size()) * x);
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                if (s > v.r) return ExtReal::infinity();
                return v.inner->value(F);
            } else {
                if (s >= v.r) return ExtReal::infinity();
                return barrier_value(v, s);
            }
        },
        v_);
}

Mat PhaseFunction::gradient(const Mat& F) const { return phase_gradient(*this, F, true); }

bool PhaseFunction::finite_valued() const {
    return std::holds_alternative<ZeroPhase>(v_) || std::holds_alternative<PowerLaw>(v_) ||
           std::holds_alternative<QuadraticForm>(v_);
}

double PhaseFunction::domain_radius() const {
    if (const auto* b = std::get_if<IndicatorBall>(&v_)) return std::min(b->r, b->inner->domain_radius());
    if (const auto* b = std::get_if<Barrier>(&v_)) return b->r;
    return kInf;
}

bool PhaseFunction::radial() const {
    return std::visit(
        [](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, QuadraticForm>) {
                double c = 0.0;
                return isotropic(v, &c);
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                return v.inner->radial();
            } else {
                return true;
            }
        },
        v_);
}

ExtReal PhaseFunction::radial_value(double s) const {
    return std::visit(
        [&](const auto& v) -> ExtReal {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ZeroPhase>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, PowerLaw>) {
                return v.c * std::pow(s, v.p);
            } else if constexpr (std::is_same_v<T, QuadraticForm>) {
                double c = 0.0;
                isotropic(v, &c);
                return c * s * s;
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                if (s > v.r) return ExtReal::infinity();
                return v.inner->radial_value(s);
            } else {
                if (s >= v.r) return ExtReal::infinity();
                return barrier_value(v, s);
            }
        },
        v_);
}

double PhaseFunction::radial_derivative(double s) const {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ZeroPhase>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, PowerLaw>) {
                return s == 0.0 ? 0.0 : v.c * v.p * std::pow(s, v.p - 1.0);
            } else if constexpr (std::is_same_v<T, QuadraticForm>) {
                double c = 0.0;
                isotropic(v, &c);
                return 2.0 * c * s;
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                return v.inner->radial_derivative(s);
            } else {
                return barrier_derivative(v, s);
            }
        },
        v_);
}

std::string PhaseFunction::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ZeroPhase>) {
                os << "zero";
            } else if constexpr (std::is_same_v<T, PowerLaw>) {
                os << "power(" << v.c << ',' << v.p << ')';
            } else if constexpr (std::is_same_v<T, QuadraticForm>) {
                os << "quadratic(";
                for (Eigen::Index i = 0; i < v.A.size(); ++i) os << (i ? "," : "") << v.A(i / v.A.cols(), i % v.A.cols());
                os << ')';
            } else if constexpr (std::is_same_v<T, IndicatorBall>) {
                os << "ball(" << v.r << ',' << v.inner->describe() << ')';
            } else {
                os << "barrier(" << v.r << ',' << v.c << ',' << v.p << ')';
            }
        },
        v_);
    return os.str();
}

// ---------------------------------------------------------------------------

double NonconvexSpec::value(const Mat& F) const {
    if (kind == NonconvexKind::det_well) {
        if (F.rows() != F.cols()) throw ParameterError("det_well requires m = d");
        const double u = F.determinant() - 1.0;
        return gamma * cap * (1.0 - std::exp(-u * u / cap));
    }
    const double s = (F.array() * xi.array()).sum();
    const double sn = std::sin(s);
    return gamma * cap * (1.0 - std::exp(-sn * sn / cap));
}

Mat NonconvexSpec::gradient(const Mat& F) const {
    if (kind == NonconvexKind::det_well) {
        if (F.rows() != F.cols()) throw ParameterError("det_well requires m = d");
        const double u = F.determinant() - 1.0;
        return (2.0 * gamma * u * std::exp(-u * u / cap)) * cofactor(F);
    }
    const double s = (F.array() * xi.array()).sum();
    const double sn = std::sin(s);
    return (gamma * std::sin(2.0 * s) * std::exp(-sn * sn / cap)) * xi;
}

void IntegrandSpec::validate(int dim) const {
    if (!(p > 1.0)) throw ParameterError("integrand: p > 1 required");
    if (m != 1 && m != dim) throw ParameterError("integrand: m must be 1 or d");
    if (!(growth_C > 0.0)) throw ParameterError("integrand: growth constant must be positive");
    if (!matrix_phase.finite_valued()) throw ParameterError("integrand: matrix phase must be finite-valued");
    auto check_quadratic = [&](const PhaseFunction& f) {
        const PhaseFunction* cur = &f;
        while (const auto* b = std::get_if<IndicatorBall>(&cur->variant())) cur = b->inner.get();
        if (const auto* q = std::get_if<QuadraticForm>(&cur->variant()))
            if (q->A.size() != 1 && q->A.rows() != m * dim)
                throw ParameterError("integrand: quadratic matrix size must be m*d");
    };
    check_quadratic(matrix_phase);
    check_quadratic(inclusion_phase);
    if (nonconvex) {
        if (!(nonconvex->gamma >= 0.0) || !(nonconvex->cap > 0.0))
            throw ParameterError("integrand: need gamma >= 0 and cap > 0");
        if (nonconvex->kind == NonconvexKind::det_well) {
            if (m != dim) throw ParameterError("integrand: det_well requires m = d");
            if (p < 2.0) throw ParameterError("integrand: det_well requires p >= 2");
        } else if (nonconvex->xi.rows() != m || nonconvex->xi.cols() != dim) {
            throw ParameterError("integrand: oscillatory direction must be m x d");
        }
    }
}

YosidaResult yosida_transform(const PhaseFunction& phase, double k, double p, const Mat& F) {
    if (!(k > 0.0)) throw ParameterError("yosida: k must be positive");
    if (!(p > 1.0)) throw ParameterError("yosida: p > 1 required");
    if (phase.radial()) return yosida_radial(phase, k, p, F);
    if (const auto* q = std::get_if<QuadraticForm>(&phase.variant()); q && p == 2.0) {
        const Eigen::Index n = F.size();
        const Eigen::MatrixXd A = expand(q->A, n);
        const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
        const Eigen::VectorXd x = vec(F);
        const Eigen::VectorXd g = (S + k * Eigen::MatrixXd::Identity(n, n)).ldlt().solve(k * x);
        YosidaResult res;
        res.value = g.dot(A * g) + k * (x - g).squaredNorm();
        res.minimizer = unvec(g, static_cast<int>(F.rows()), static_cast<int>(F.cols()));
        res.gradient = 2.0 * k * (F - res.minimizer);
        return res;
    }
    return yosida_general(phase, k, p, F);
}

double frobenius_pow(const Mat& F, double p) { return std::pow(F.norm(), p); }

Evaluation evaluate_phase(const PhaseFunction& phase, double p, const std::optional<Truncation>& trunc,
                          const Mat& F, bool want_gradient) {
    Evaluation e;
    if (!trunc || phase.finite_valued()) {
        e.value = phase.value(F);
        if (want_gradient && e.value.is_finite()) e.gradient = phase_gradient(phase, F, false);
        return e;
    }
    if (trunc->scheme == TruncationScheme::constraint_yosida) {
        if (const auto* b = std::get_if<IndicatorBall>(&phase.variant())) {
            e = evaluate_phase(*b->inner, p, trunc, F, want_gradient);
            if (e.value.is_infinite()) return e;
            const double s = F.norm();
            const double excess = std::max(0.0, s - b->r);
            e.value += ExtReal(trunc->k * std::pow(excess, p));
            if (want_gradient && excess > 0.0) e.gradient += (trunc->k * p * std::pow(excess, p - 1.0) / s) * F;
            return e;
        }
    }
    const YosidaResult y = yosida_transform(phase, trunc->k, p, F);
    e.value = y.value;
    if (want_gradient) e.gradient = y.gradient;
    return e;
}

namespace {

// radial density with f'(s), f''(s): alpha = f'/s, beta = f'' - f'/s
Curvature radial(double fp, double fpp, double s) {
    const double a = fp / s;
    return {std::max(a, 0.0), std::max(fpp, 0.0) - std::max(a, 0.0)};
}

Curvature power_curvature(double c, double p, double s) {
    const double se = std::max(s, 1e-3);
    return radial(c * p * std::pow(se, p - 1.0), c * p * (p - 1.0) * std::pow(se, p - 2.0), se);
}

Curvature phase_curvature(const PhaseFunction& phase, double p, const std::optional<Truncation>& trunc, const Mat& F) {
    const double s = F.norm();
    if (const auto* q = std::get_if<QuadraticForm>(&phase.variant())) {
        double c = 0.0;
        if (isotropic(*q, &c)) return {2.0 * c, 0.0};
        return {2.0 * q->A.diagonal().cwiseAbs().maxCoeff(), 0.0};
    }
    if (const auto* pl = std::get_if<PowerLaw>(&phase.variant())) return power_curvature(pl->c, pl->p, s);
    if (std::holds_alternative<ZeroPhase>(phase.variant())) return {};
    if (!trunc) {
        if (const auto* b = std::get_if<IndicatorBall>(&phase.variant())) return phase_curvature(*b->inner, p, trunc, F);
        const auto& br = std::get<Barrier>(phase.variant());
        if (s >= br.r) return {};
        if (s < 1e-12) return {barrier_second(br, s), 0.0};
        return radial(barrier_derivative(br, s), barrier_second(br, s), s);
    }
    const double kc = trunc->k * p * std::max(p - 1.0, 1.0);
    if (trunc->scheme == TruncationScheme::constraint_yosida) {
        if (const auto* b = std::get_if<IndicatorBall>(&phase.variant())) {
            Curvature c = phase_curvature(*b->inner, p, trunc, F);
            const double e = s - b->r;
            if (e <= 0.0) return c;
            const double ee = p >= 2.0 ? e : std::max(e, 1e-3);
            const Curvature pen =
                radial(trunc->k * p * std::pow(e, p - 1.0), trunc->k * p * (p - 1.0) * std::pow(ee, p - 2.0), s);
            c.alpha += pen.alpha;
            c.beta += pen.beta;
            return c;
        }
    }
    // Moreau-type envelope: curvature bounded by the penalty's, combined in series.
    const YosidaResult y = yosida_transform(phase, trunc->k, p, F);
    const double fpp = radial_second(phase, y.minimizer.norm());
    if (!std::isfinite(fpp)) return {kc, 0.0};
    return {fpp * kc / (fpp + kc), 0.0};
}

}  // namespace

Curvature curvature_estimate(const IntegrandSpec& spec, Region region, const Mat& F,
                             const std::optional<Truncation>& trunc) {
    switch (region) {
        case Region::matrix: return phase_curvature(spec.matrix_phase, spec.p, trunc, F);
        case Region::inclusion: return phase_curvature(spec.inclusion_phase, spec.p, trunc, F);
        case Region::buffer: return power_curvature(1.0, spec.p, F.norm());
    }
    return {};
}

Evaluation evaluate_region(const IntegrandSpec& spec, Region region, const Mat& F,
                           const std::optional<Truncation>& trunc, bool with_nonconvex, bool want_gradient) {
    Evaluation e;
    switch (region) {
        case Region::matrix: e = evaluate_phase(spec.matrix_phase, spec.p, trunc, F, want_gradient); break;
        case Region::inclusion: e = evaluate_phase(spec.inclusion_phase, spec.p, trunc, F, want_gradient); break;
        case Region::buffer: {
            const double s = F.norm();
            e.value = std::pow(s, spec.p);
            if (want_gradient)
                e.gradient = s > 0.0 ? Mat(spec.p * std::pow(s, spec.p - 2.0) * F) : Mat(Mat::Zero(F.rows(), F.cols()));
            break;
        }
    }
    if (with_nonconvex && spec.nonconvex && e.value.is_finite()) {
        e.value += ExtReal(spec.nonconvex->value(F));
        if (want_gradient) e.gradient += spec.nonconvex->gradient(F);
    }
    return e;
}

ExtReal eval_convex(const IntegrandSpec& spec, const Medium& medium, const Point& y, const Mat& F) {
    return medium.contains(y) ? spec.inclusion_phase.value(F) : spec.matrix_phase.value(F);
}

ExtReal eval_nonconvex(const IntegrandSpec& spec, const Medium& medium, const Point& y, const Mat& F) {
    ExtReal v = eval_convex(spec, medium, y, F);
    if (spec.nonconvex && v.is_finite()) v += ExtReal(spec.nonconvex->value(F));
    return v;
}

ExtReal sup_envelope(const IntegrandSpec& spec, const Mat& F) {
    return max(spec.matrix_phase.value(F), spec.inclusion_phase.value(F));
}

double yosida_truncate(const IntegrandSpec& spec, const Truncation& k, const Medium& medium, const Point& y,
                       const Mat& F) {
    const PhaseFunction& f = medium.contains(y) ? spec.inclusion_phase : spec.matrix_phase;
    return yosida_transform(f, k.k, spec.p, F).value;
}

bool in_buffer(const Point& y, int dim, double side, double eta) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(y[i]));
    return 0.5 * side - m < eta;
}

ExtReal buffer_modify(const IntegrandSpec& spec, const Medium& medium, const Point& y, const Mat& F,
                      double side, double eta) {
    if (eta < 0.0) throw ParameterError("buffer_modify: eta must be >= 0");
    if (in_buffer(y, static_cast<int>(F.cols()), side, eta)) return std::pow(F.norm(), spec.p);
    return eval_convex(spec, medium, y, F);
}

Mat grad_lambda(const IntegrandSpec& spec, DensityKind kind, const Medium& medium, const Point& y, const Mat& F,
                const std::optional<Truncation>& truncation, double side, double eta) {
    const bool inside = medium.contains(y);
    const Region region = inside ? Region::inclusion : Region::matrix;
    switch (kind) {
        case DensityKind::convex:
        case DensityKind::nonconvex: {
            const PhaseFunction& f = inside ? spec.inclusion_phase : spec.matrix_phase;
            Mat g = f.gradient(F);
            if (kind == DensityKind::nonconvex && spec.nonconvex) g += spec.nonconvex->gradient(F);
            return g;
        }
        case DensityKind::truncated: {
            if (!truncation) throw ParameterError("grad_lambda: truncated density needs a truncation level");
            return evaluate_region(spec, region, F, truncation, false, true).gradient;
        }
        case DensityKind::buffer: {
            if (in_buffer(y, static_cast<int>(F.cols()), side, eta))
                return evaluate_region(spec, Region::buffer, F, std::nullopt, false, true).gradient;
            const PhaseFunction& f = inside ? spec.inclusion_phase : spec.matrix_phase;
            return f.gradient(F);
        }
    }
    throw ParameterError("grad_lambda: unknown density kind");
}

double growth_constant(const IntegrandSpec& spec) {
    const double gc = spec.nonconvex ? spec.nonconvex->bound() : 0.0;
    return std::max(1.0 + gc, spec.growth_C);
}

std::string to_string(NonconvexKind kind) { return kind == NonconvexKind::det_well ? "det_well" : "oscillatory"; }

std::string to_string(TruncationScheme scheme) {
    return scheme == TruncationScheme::constraint_yosida ? "constraint_yosida" : "full_yosida";
}

}  // namespace infhom
