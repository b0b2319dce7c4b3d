#pragma once

// Q1 finite elements on the cube Q_R = [-R/2, R/2)^d with 2-point Gauss quadrature.

#include "infhom/extended_real.hpp"
#include "infhom/integrands.hpp"
#include "infhom/microstructure.hpp"
#include "infhom/types.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace infhom {

struct Grid {
    int dim = 2;
    double side = 1.0;  // R
    int cells = 2;      // per axis
    bool periodic = false;

    static Grid make(int dim, double side, int cells, bool periodic);

    double h() const { return side / cells; }
    int nodes_per_axis() const { return periodic ? cells : cells + 1; }
    std::size_t node_count() const;
    std::size_t cell_count() const;

    std::array<int, 3> node_multi(std::size_t node) const;
    /// Wraps indices when periodic.
    std::size_t node_index(const std::array<int, 3>& multi) const;
    Point node_position(std::size_t node) const;
    bool is_boundary_node(std::size_t node) const;

    bool operator==(const Grid&) const = default;
};

enum class FieldBC { dirichlet_zero, periodic, free };

std::string to_string(FieldBC bc);

/// Nodal vector field, node-major: values[node * components + c].
struct Field {
    Grid grid;
    int components = 1;
    std::vector<double> values;
    FieldBC bc = FieldBC::free;

    static Field zeros(const Grid& grid, int components, FieldBC bc);
    /// Nodal interpolant of x -> G x.
    static Field affine(const Grid& grid, const Mat& G, FieldBC bc = FieldBC::free);

    double& at(std::size_t node, int c) { return values[node * components + c]; }
    double at(std::size_t node, int c) const { return values[node * components + c]; }
};

enum class BCKind { dirichlet_affine, periodic, mean_zero, dirichlet_data, buffer };

std::string to_string(BCKind kind);

/// Boundary / admissibility condition of a cell problem.
struct BCSpec {
    BCKind kind = BCKind::dirichlet_affine;
    Mat lambda;                          // background gradient (unused for dirichlet_data)
    double eta = 0.0;                    // buffer width
    std::shared_ptr<const Field> data;   // boundary data g for dirichlet_data

    static BCSpec dirichlet_affine(const Mat& lambda);
    static BCSpec periodic(const Mat& lambda);
    static BCSpec mean_zero(const Mat& lambda);
    static BCSpec dirichlet_data(Field g);
    static BCSpec buffer(const Mat& lambda, double eta);

    FieldBC field_bc() const;
    bool periodic_grid() const { return kind == BCKind::periodic; }
};

/// Discrete energy  fint_{Q_R} density(y, total gradient)  for one cell problem, with
/// the phase of every quadrature point resolved once at construction.
///
/// Total gradient at a quadrature point: t (Lambda + grad phi) for the affine kinds and
/// t grad g + grad v for dirichlet_data.
class CellEnergy {
public:
    CellEnergy(Grid grid, IntegrandSpec spec, const Medium& medium, BCSpec bc,
               std::optional<Truncation> truncation = std::nullopt, double t = 1.0, bool nonconvex = false);

    const Grid& grid() const { return grid_; }
    const BCSpec& bc() const { return bc_; }
    int components() const { return m_; }
    std::size_t size() const { return grid_.node_count() * static_cast<std::size_t>(m_); }
    const std::vector<char>& constrained() const { return constrained_; }

    void set_truncation(std::optional<Truncation> trunc) { trunc_ = trunc; }
    const std::optional<Truncation>& truncation() const { return trunc_; }

    ExtReal value(std::span<const double> nodal) const;

    /// Energy and its gradient w.r.t. the nodal values; constrained entries are zero.
    /// The gradient is left untouched when the energy is infinite.
    ExtReal value_and_gradient(std::span<const double> nodal, std::span<double> grad) const;

    /// Stiffness matrix weighted by the local curvature estimate of the density at the
    /// given state (identity rows on constrained dofs, small diagonal shift): an SPD
    /// approximation of the energy Hessian for preconditioning.
    Eigen::SparseMatrix<double> curvature_matrix(std::span<const double> nodal) const;

    /// Fraction of quadrature points in each region (matrix, inclusion, buffer).
    std::array<double, 3> region_fractions() const;

private:
    template <bool WithGrad>
    ExtReal evaluate(std::span<const double> nodal, std::span<double> grad) const;

    Grid grid_;
    IntegrandSpec spec_;
    BCSpec bc_;
    std::optional<Truncation> trunc_;
    double t_;
    bool nonconvex_;
    int m_;
    int nq_;     // quadrature points per cell
    int nloc_;   // nodes per cell
    double weight_;
    std::vector<double> shape_grad_;          // [q][a][j]
    std::vector<std::size_t> connectivity_;   // [cell][a]
    std::vector<unsigned char> region_;       // [cell][q]
    std::vector<double> background_;          // [cell][q][m*d], dirichlet_data only
    std::vector<char> constrained_;           // per nodal dof
};

ExtReal energy(const Grid& grid, const Field& field, const IntegrandSpec& spec, const Medium& medium,
               const BCSpec& bc, const std::optional<Truncation>& truncation = std::nullopt, double t = 1.0);

/// DomainError when the energy is infinite.
std::vector<double> energy_gradient(const Grid& grid, const Field& field, const IntegrandSpec& spec,
                                    const Medium& medium, const BCSpec& bc,
                                    const std::optional<Truncation>& truncation = std::nullopt, double t = 1.0);

/// Volume average of grad phi over Q_R (m x d).
Mat mean_gradient(const Grid& grid, std::span<const double> nodal, int components);
Mat mean_gradient(const Field& field);

/// Adjoint of mean_gradient: nodal vector of d/dphi <H, mean_gradient(phi)>.
std::vector<double> mean_gradient_adjoint(const Grid& grid, const Mat& H);

/// phi <- phi - (mean gradient) x.
Field project_mean_zero(const Field& field);

/// Text format: header `dim R n m bc`, then one node per line (17 digits).
void write_field(std::ostream& os, const Field& field);
Field read_field(std::istream& is);

}  // namespace infhom
