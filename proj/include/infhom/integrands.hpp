#pragma once

// Two-phase extended-real convex densities, their truncations and the bounded
// nonconvex perturbations W = V + W^nc.

#include "infhom/extended_real.hpp"
#include "infhom/microstructure.hpp"
#include "infhom/types.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <variant>

namespace infhom {

class PhaseFunction;

struct ZeroPhase {};

/// c |F|^p
struct PowerLaw {
    double c = 1.0;
    double p = 2.0;
};

/// vec(F)^T A vec(F) with vec row-major; a 1x1 A stands for A(0,0) * Identity.
struct QuadraticForm {
    Eigen::MatrixXd A;
};

/// inner(F) for |F| <= r, +inf otherwise.
struct IndicatorBall {
    double r = 1.0;
    std::shared_ptr<const PhaseFunction> inner;
};

/// c |F|^p / (1 - |F|^2 / r^2) for |F| < r, +inf otherwise.
struct Barrier {
    double r = 1.0;
    double c = 1.0;
    double p = 2.0;
};

/// Convex lower semicontinuous function of the gradient; |F| is the Frobenius norm.
class PhaseFunction {
public:
    using Variant = std::variant<ZeroPhase, PowerLaw, QuadraticForm, IndicatorBall, Barrier>;

    PhaseFunction() : v_(ZeroPhase{}) {}

    static PhaseFunction zero();
    static PhaseFunction power_law(double c, double p);
    static PhaseFunction quadratic(Eigen::MatrixXd A);
    static PhaseFunction isotropic_quadratic(double c);
    static PhaseFunction indicator_ball(double r, PhaseFunction inner);
    static PhaseFunction barrier(double r, double c, double p);

    const Variant& variant() const { return v_; }

    ExtReal value(const Mat& F) const;

    /// Throws DomainError outside or on the boundary of the domain.
    Mat gradient(const Mat& F) const;

    bool finite_valued() const;

    /// Radius of the (ball-shaped) effective domain; +inf when finite-valued.
    double domain_radius() const;

    /// True when value(F) depends on |F| only.
    bool radial() const;

    /// Radial profile f(s) with value(F) = f(|F|); only valid when radial().
    ExtReal radial_value(double s) const;
    double radial_derivative(double s) const;

    std::string describe() const;

private:
    explicit PhaseFunction(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

enum class NonconvexKind { det_well, oscillatory };

struct NonconvexSpec {
    double gamma = 0.0;
    double cap = 1.0;
    NonconvexKind kind = NonconvexKind::oscillatory;
    Mat xi;  // direction for the oscillatory profile (m x d)

    double value(const Mat& F) const;
    Mat gradient(const Mat& F) const;
    double bound() const { return gamma * cap; }
};

/// Truncation V^k: both schemes give a sequence increasing in k towards V.
///  - constraint_yosida: finite phases untouched; indicator_ball(r, inner) becomes
///    inner + k dist(F, B_r)^p (Yosida transform of the indicator); barrier phases
///    use the full Yosida transform.
///  - full_yosida: inf_G (V(G) + k |F - G|^p) for every phase.
enum class TruncationScheme { constraint_yosida, full_yosida };

struct Truncation {
    double k = 1.0;
    TruncationScheme scheme = TruncationScheme::constraint_yosida;
};

struct IntegrandSpec {
    PhaseFunction matrix_phase = PhaseFunction::isotropic_quadratic(1.0);
    PhaseFunction inclusion_phase = PhaseFunction::isotropic_quadratic(1.0);
    double p = 2.0;
    int m = 1;
    double growth_C = 1.0;
    std::optional<NonconvexSpec> nonconvex;

    void validate(int dim) const;
};

/// Which part of the two-phase structure a point belongs to.
enum class Region { matrix, inclusion, buffer };

struct Evaluation {
    ExtReal value;
    Mat gradient;  // empty when not requested or when value is infinite
};

/// Exact Yosida transform inf_G (phase(G) + k |F - G|^p).
struct YosidaResult {
    double value = 0.0;
    Mat gradient;
    Mat minimizer;
};
YosidaResult yosida_transform(const PhaseFunction& phase, double k, double p, const Mat& F);

/// Phase value after truncation (or exact when `trunc` is empty).
Evaluation evaluate_phase(const PhaseFunction& phase, double p, const std::optional<Truncation>& trunc,
                          const Mat& F, bool want_gradient);

/// Density of one region at F: matrix/inclusion phase (possibly truncated), or |F|^p in
/// the buffer, plus W^nc when `with_nonconvex` and the spec has one.
Evaluation evaluate_region(const IntegrandSpec& spec, Region region, const Mat& F,
                           const std::optional<Truncation>& trunc, bool with_nonconvex, bool want_gradient);

double frobenius_pow(const Mat& F, double p);

/// Curvature model alpha I + beta n n^T (n = F/|F|) of the region density at F, used to
/// build solver preconditioners; not an exact second derivative. alpha, alpha+beta >= 0.
struct Curvature {
    double alpha = 0.0;
    double beta = 0.0;
};
Curvature curvature_estimate(const IntegrandSpec& spec, Region region, const Mat& F,
                             const std::optional<Truncation>& trunc);

/// V(y, F) for the two-phase medium.
ExtReal eval_convex(const IntegrandSpec& spec, const Medium& medium, const Point& y, const Mat& F);

/// W(y, F) = V(y, F) + W^nc(F).
ExtReal eval_nonconvex(const IntegrandSpec& spec, const Medium& medium, const Point& y, const Mat& F);

/// M(F) = max(a(F), b(F)).
ExtReal sup_envelope(const IntegrandSpec& spec, const Mat& F);

/// Full Yosida transform of the phase active at y.
double yosida_truncate(const IntegrandSpec& spec, const Truncation& k, const Medium& medium, const Point& y,
                       const Mat& F);

enum class DensityKind { convex, truncated, nonconvex, buffer };

/// Gradient in F of a finite density; DomainError where the density is infinite.
/// `truncation` is used by DensityKind::truncated, `side` / `eta` by DensityKind::buffer.
Mat grad_lambda(const IntegrandSpec& spec, DensityKind kind, const Medium& medium, const Point& y, const Mat& F,
                const std::optional<Truncation>& truncation = std::nullopt, double side = 0.0, double eta = 0.0);

/// |F|^p when dist(y, boundary of the cube of given side) < eta (max-norm), else V(y, F).
ExtReal buffer_modify(const IntegrandSpec& spec, const Medium& medium, const Point& y, const Mat& F,
                      double side, double eta);

/// Buffer membership used by buffer_modify and the discrete energy.
bool in_buffer(const Point& y, int dim, double side, double eta);

/// Constant of the two-sided bound V <= W <= C(1 + V): max(1 + gamma cap, declared C).
double growth_constant(const IntegrandSpec& spec);

std::string to_string(NonconvexKind kind);
std::string to_string(TruncationScheme scheme);

}  // namespace infhom
