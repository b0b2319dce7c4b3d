#include "infhom/grid.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace infhom {

namespace {

constexpr std::size_t kChunkCells = 64;

struct Reference {
    int nq = 0;
    int nloc = 0;
    std::vector<double> xi;          // [q][i] in [0,1]
    std::vector<double> shape_grad;  // [q][a][j]
};

Reference reference_element(int dim, double h) {
    Reference ref;
    ref.nq = 1 << dim;
    ref.nloc = 1 << dim;
    const double g = 0.5 / std::sqrt(3.0);
    const double pts[2] = {0.5 - g, 0.5 + g};
    ref.xi.resize(static_cast<std::size_t>(ref.nq) * dim);
    for (int q = 0; q < ref.nq; ++q)
        for (int i = 0; i < dim; ++i) ref.xi[q * dim + i] = pts[(q >> i) & 1];
    ref.shape_grad.resize(static_cast<std::size_t>(ref.nq) * ref.nloc * dim);
    for (int q = 0; q < ref.nq; ++q)
        for (int a = 0; a < ref.nloc; ++a)
            for (int j = 0; j < dim; ++j) {
                double v = ((a >> j) & 1) ? 1.0 / h : -1.0 / h;
                for (int i = 0; i < dim; ++i) {
                    if (i == j) continue;
                    const double x = ref.xi[q * dim + i];
                    v *= ((a >> i) & 1) ? x : 1.0 - x;
                }
                ref.shape_grad[(q * ref.nloc + a) * dim + j] = v;
            }
    return ref;
}

std::array<int, 3> cell_multi(const Grid& g, std::size_t cell) {
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < g.dim; ++i) {
        c[i] = static_cast<int>(cell % static_cast<std::size_t>(g.cells));
        cell /= static_cast<std::size_t>(g.cells);
    }
    return c;
}

std::size_t local_node(const Grid& g, const std::array<int, 3>& c, int a) {
    std::array<int, 3> n = c;
    for (int i = 0; i < g.dim; ++i) n[i] += (a >> i) & 1;
    return g.node_index(n);
}

// Fixed-topology pairwise reduction; the summation order depends only on the size.
double pairwise_sum(std::span<const double> v) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace

// ---------------------------------------------------------------------------

Grid Grid::make(int dim, double side, int cells, bool periodic) {
    if (dim < 1 || dim > 3) throw ParameterError("Grid: dim must be 1, 2 or 3");
    if (!(side > 0.0) || !std::isfinite(side)) throw ParameterError("Grid: side must be positive");
    if (cells < 2) throw ParameterError("Grid: at least 2 cells per side required");
    return Grid{dim, side, cells, periodic};
}

std::size_t Grid::node_count() const {
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(nodes_per_axis());
    return n;
}

std::size_t Grid::cell_count() const {
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(cells);
    return n;
}

std::array<int, 3> Grid::node_multi(std::size_t node) const {
    std::array<int, 3> m{0, 0, 0};
    const auto npa = static_cast<std::size_t>(nodes_per_axis());
    for (int i = 0; i < dim; ++i) {
        m[i] = static_cast<int>(node % npa);
        node /= npa;
    }
    return m;
}

std::size_t Grid::node_index(const std::array<int, 3>& multi) const {
    const int npa = nodes_per_axis();
    std::size_t idx = 0;
    for (int i = dim - 1; i >= 0; --i) {
        int k = multi[i];
        if (periodic) k = ((k % cells) + cells) % cells;
        idx = idx * static_cast<std::size_t>(npa) + static_cast<std::size_t>(k);
    }
    return idx;
}

Point Grid::node_position(std::size_t node) const {
    const auto m = node_multi(node);
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) p[i] = -0.5 * side + m[i] * h();
    return p;
}

bool Grid::is_boundary_node(std::size_t node) const {
    if (periodic) return false;
    const auto m = node_multi(node);
    for (int i = 0; i < dim; ++i)
        if (m[i] == 0 || m[i] == cells) return true;
    return false;
}

std::string to_string(FieldBC bc) {
    switch (bc) {
        case FieldBC::dirichlet_zero: return "dirichlet_zero";
        case FieldBC::periodic: return "periodic";
        case FieldBC::free: return "free";
    }
    return "?";
}

std::string to_string(BCKind kind) {
    switch (kind) {
        case BCKind::dirichlet_affine: return "dirichlet_affine";
        case BCKind::periodic: return "periodic";
        case BCKind::mean_zero: return "mean_zero";
        case BCKind::dirichlet_data: return "dirichlet_data";
        case BCKind::buffer: return "buffer";
    }
    return "?";
}

Field Field::zeros(const Grid& grid, int components, FieldBC bc) {
    if (bc == FieldBC::periodic && !grid.periodic) throw ParameterError("periodic field needs a periodic grid");
    if (bc != FieldBC::periodic && grid.periodic) throw ParameterError("periodic grid needs a periodic field");
    Field f;
    f.grid = grid;
    f.components = components;
    f.bc = bc;
    f.values.assign(grid.node_count() * static_cast<std::size_t>(components), 0.0);
    return f;
}

Field Field::affine(const Grid& grid, const Mat& G, FieldBC bc) {
    if (G.cols() != grid.dim) throw ParameterError("Field::affine: gradient has wrong number of columns");
    Field f = zeros(grid, static_cast<int>(G.rows()), bc);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        const Point x = grid.node_position(n);
        for (int c = 0; c < f.components; ++c) {
            double v = 0.0;
            for (int j = 0; j < grid.dim; ++j) v += G(c, j) * x[j];
            f.at(n, c) = v;
        }
    }
    return f;
}

BCSpec BCSpec::dirichlet_affine(const Mat& lambda) { return BCSpec{BCKind::dirichlet_affine, lambda, 0.0, nullptr}; }
BCSpec BCSpec::periodic(const Mat& lambda) { return BCSpec{BCKind::periodic, lambda, 0.0, nullptr}; }
BCSpec BCSpec::mean_zero(const Mat& lambda) { return BCSpec{BCKind::mean_zero, lambda, 0.0, nullptr}; }

BCSpec BCSpec::dirichlet_data(Field g) {
    Mat zero = Mat::Zero(g.components, g.grid.dim);
    return BCSpec{BCKind::dirichlet_data, zero, 0.0, std::make_shared<const Field>(std::move(g))};
}

BCSpec BCSpec::buffer(const Mat& lambda, double eta) {
    if (!(eta >= 0.0)) throw ParameterError("buffer: eta must be >= 0");
    return BCSpec{BCKind::buffer, lambda, eta, nullptr};
}

FieldBC BCSpec::field_bc() const {
    switch (kind) {
        case BCKind::periodic: return FieldBC::periodic;
        case BCKind::mean_zero: return FieldBC::free;
        default: return FieldBC::dirichlet_zero;
    }
}

// ---------------------------------------------------------------------------

CellEnergy::CellEnergy(Grid grid, IntegrandSpec spec, const Medium& medium, BCSpec bc,
                       std::optional<Truncation> truncation, double t, bool nonconvex)
    : grid_(grid), spec_(std::move(spec)), bc_(std::move(bc)), trunc_(truncation), t_(t), nonconvex_(nonconvex),
      m_(spec_.m) {
    if (grid_.periodic != bc_.periodic_grid())
        throw ParameterError("CellEnergy: grid periodicity does not match bc " + to_string(bc_.kind));
    if (!(t_ > 0.0) || t_ > 1.0) throw ParameterError("CellEnergy: dilation t must lie in (0, 1]");
    if (bc_.kind == BCKind::dirichlet_data) {
        if (!bc_.data || !(bc_.data->grid == grid_) || bc_.data->components != m_)
            throw ParameterError("CellEnergy: boundary data does not match the grid");
    } else if (bc_.lambda.rows() != m_ || bc_.lambda.cols() != grid_.dim) {
        throw ParameterError("CellEnergy: Lambda must be m x d");
    }
    if (trunc_ && !(trunc_->k > 0.0)) throw ParameterError("CellEnergy: truncation level must be positive");

    const int d = grid_.dim;
    const double h = grid_.h();
    const Reference ref = reference_element(d, h);
    nq_ = ref.nq;
    nloc_ = ref.nloc;
    shape_grad_ = ref.shape_grad;
    weight_ = 1.0 / (static_cast<double>(grid_.cell_count()) * nq_);

    const std::size_t ncell = grid_.cell_count();
    connectivity_.resize(ncell * nloc_);
    region_.resize(ncell * nq_);
    if (bc_.kind == BCKind::dirichlet_data) background_.assign(ncell * nq_ * m_ * d, 0.0);

    for (std::size_t cell = 0; cell < ncell; ++cell) {
        const auto c = cell_multi(grid_, cell);
        for (int a = 0; a < nloc_; ++a) connectivity_[cell * nloc_ + a] = local_node(grid_, c, a);
        for (int q = 0; q < nq_; ++q) {
            Point y{0.0, 0.0, 0.0};
            for (int i = 0; i < d; ++i) y[i] = -0.5 * grid_.side + (c[i] + ref.xi[q * d + i]) * h;
            Region r = Region::matrix;
            if (bc_.kind == BCKind::buffer && in_buffer(y, d, grid_.side, bc_.eta))
                r = Region::buffer;
            else if (medium.contains(y))
                r = Region::inclusion;
            region_[cell * nq_ + q] = static_cast<unsigned char>(r);
            if (bc_.kind == BCKind::dirichlet_data) {
                double* bg = &background_[((cell * nq_) + q) * m_ * d];
                for (int a = 0; a < nloc_; ++a) {
                    const std::size_t node = connectivity_[cell * nloc_ + a];
                    for (int comp = 0; comp < m_; ++comp)
                        for (int j = 0; j < d; ++j)
                            bg[comp * d + j] += bc_.data->at(node, comp) * shape_grad_[(q * nloc_ + a) * d + j];
                }
            }
        }
    }

    constrained_.assign(size(), 0);
    if (bc_.field_bc() == FieldBC::dirichlet_zero)
        for (std::size_t n = 0; n < grid_.node_count(); ++n)
            if (grid_.is_boundary_node(n))
                for (int comp = 0; comp < m_; ++comp) constrained_[n * m_ + comp] = 1;
}

template <bool WithGrad>
ExtReal CellEnergy::evaluate(std::span<const double> nodal, std::span<double> grad) const {
    if (nodal.size() != size()) throw ParameterError("CellEnergy: nodal vector has wrong size");
    if constexpr (WithGrad) {
        if (grad.size() != size()) throw ParameterError("CellEnergy: gradient buffer has wrong size");
    }
    const int d = grid_.dim;
    const std::size_t ncell = grid_.cell_count();
    const bool data_bc = bc_.kind == BCKind::dirichlet_data;
    const double chain = data_bc ? 1.0 : t_;

    std::vector<double> local_grad;
    std::vector<double> chunk_sums;
    chunk_sums.reserve(ncell / kChunkCells + 1);
    if constexpr (WithGrad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        local_grad.resize(static_cast<std::size_t>(nloc_) * m_);
    }

    Mat F(m_, d);
    double chunk = 0.0;
    for (std::size_t cell = 0; cell < ncell; ++cell) {
        const std::size_t* conn = &connectivity_[cell * nloc_];
        if constexpr (WithGrad) std::fill(local_grad.begin(), local_grad.end(), 0.0);
        for (int q = 0; q < nq_; ++q) {
            const double* sg = &shape_grad_[static_cast<std::size_t>(q) * nloc_ * d];
            F.setZero();
            for (int a = 0; a < nloc_; ++a) {
                const double* u = &nodal[conn[a] * m_];
                for (int comp = 0; comp < m_; ++comp)
                    for (int j = 0; j < d; ++j) F(comp, j) += u[comp] * sg[a * d + j];
            }
            if (data_bc) {
                const double* bg = &background_[((cell * nq_) + q) * m_ * d];
                for (int comp = 0; comp < m_; ++comp)
                    for (int j = 0; j < d; ++j) F(comp, j) += t_ * bg[comp * d + j];
            } else {
                F = t_ * (bc_.lambda + F);
            }
            const auto region = static_cast<Region>(region_[cell * nq_ + q]);
            const Evaluation e = evaluate_region(spec_, region, F, trunc_, nonconvex_, WithGrad);
            if (e.value.is_infinite()) return ExtReal::infinity();
            chunk += weight_ * e.value.value();
            if constexpr (WithGrad) {
                for (int a = 0; a < nloc_; ++a)
                    for (int comp = 0; comp < m_; ++comp) {
                        double s = 0.0;
                        for (int j = 0; j < d; ++j) s += e.gradient(comp, j) * sg[a * d + j];
                        local_grad[a * m_ + comp] += weight_ * chain * s;
                    }
            }
        }
        if constexpr (WithGrad) {
            for (int a = 0; a < nloc_; ++a)
                for (int comp = 0; comp < m_; ++comp) grad[conn[a] * m_ + comp] += local_grad[a * m_ + comp];
        }
        if ((cell + 1) % kChunkCells == 0 || cell + 1 == ncell) {
            chunk_sums.push_back(chunk);
            chunk = 0.0;
        }
    }
    if constexpr (WithGrad) {
        for (std::size_t i = 0; i < grad.size(); ++i)
            if (constrained_[i]) grad[i] = 0.0;
    }
    return ExtReal(pairwise_sum(chunk_sums));
}

ExtReal CellEnergy::value(std::span<const double> nodal) const { return evaluate<false>(nodal, {}); }

ExtReal CellEnergy::value_and_gradient(std::span<const double> nodal, std::span<double> grad) const {
    return evaluate<true>(nodal, grad);
}

Eigen::SparseMatrix<double> CellEnergy::curvature_matrix(std::span<const double> nodal) const {
    if (nodal.size() != size()) throw ParameterError("CellEnergy: nodal vector has wrong size");
    const int d = grid_.dim;
    const std::size_t ncell = grid_.cell_count();
    const bool data_bc = bc_.kind == BCKind::dirichlet_data;
    const double chain = data_bc ? 1.0 : t_;

    const int nl = nloc_ * m_;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ncell * nl * nl + size());
    std::vector<double> kloc(static_cast<std::size_t>(nl) * nl), gn(static_cast<std::size_t>(nl));
    Mat F(m_, d);
    double diag_sum = 0.0;
    std::size_t diag_count = 0;
    for (std::size_t cell = 0; cell < ncell; ++cell) {
        const std::size_t* conn = &connectivity_[cell * nloc_];
        std::fill(kloc.begin(), kloc.end(), 0.0);
        for (int q = 0; q < nq_; ++q) {
            const double* sg = &shape_grad_[static_cast<std::size_t>(q) * nloc_ * d];
            F.setZero();
            for (int a = 0; a < nloc_; ++a) {
                const double* u = &nodal[conn[a] * m_];
                for (int comp = 0; comp < m_; ++comp)
                    for (int j = 0; j < d; ++j) F(comp, j) += u[comp] * sg[a * d + j];
            }
            if (data_bc) {
                const double* bg = &background_[((cell * nq_) + q) * m_ * d];
                for (int comp = 0; comp < m_; ++comp)
                    for (int j = 0; j < d; ++j) F(comp, j) += t_ * bg[comp * d + j];
            } else {
                F = t_ * (bc_.lambda + F);
            }
            const auto region = static_cast<Region>(region_[cell * nq_ + q]);
            Curvature c = curvature_estimate(spec_, region, F, trunc_);
            if (!std::isfinite(c.alpha) || !std::isfinite(c.beta)) c = {};
            const double w = weight_ * chain * chain;
            const double fn = F.norm();
            // shape gradient projected on the unit direction of F, per component
            for (int a = 0; a < nloc_; ++a)
                for (int comp = 0; comp < m_; ++comp) {
                    double s = 0.0;
                    if (fn > 0.0)
                        for (int j = 0; j < d; ++j) s += sg[a * d + j] * F(comp, j) / fn;
                    gn[a * m_ + comp] = s;
                }
            for (int a = 0; a < nloc_; ++a)
                for (int b = 0; b < nloc_; ++b) {
                    double s = 0.0;
                    for (int j = 0; j < d; ++j) s += sg[a * d + j] * sg[b * d + j];
                    for (int ca = 0; ca < m_; ++ca)
                        for (int cb = 0; cb < m_; ++cb) {
                            double v = c.beta * gn[a * m_ + ca] * gn[b * m_ + cb];
                            if (ca == cb) v += c.alpha * s;
                            kloc[(a * m_ + ca) * nl + b * m_ + cb] += w * v;
                        }
                }
        }
        for (int a = 0; a < nl; ++a)
            for (int b = 0; b < nl; ++b) {
                const std::size_t i = conn[a / m_] * m_ + a % m_, j = conn[b / m_] * m_ + b % m_;
                if (constrained_[i] || constrained_[j]) continue;
                trip.emplace_back(static_cast<int>(i), static_cast<int>(j), kloc[a * nl + b]);
                if (a == b) diag_sum += kloc[a * nl + b], ++diag_count;
            }
    }
    const double mean_diag = diag_count ? diag_sum / static_cast<double>(diag_count) : 0.0;
    const double shift = mean_diag > 0.0 ? 1e-8 * mean_diag : 1.0;
    for (std::size_t i = 0; i < size(); ++i)
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), constrained_[i] ? 1.0 : shift);
    Eigen::SparseMatrix<double> K(static_cast<int>(size()), static_cast<int>(size()));
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

std::array<double, 3> CellEnergy::region_fractions() const {
    std::array<double, 3> f{0.0, 0.0, 0.0};
    for (unsigned char r : region_) f[r] += 1.0;
    for (double& x : f) x /= static_cast<double>(region_.size());
    return f;
}

// ---------------------------------------------------------------------------

namespace {

void check_field(const Grid& grid, const Field& field, const BCSpec& bc, int m) {
    if (!(field.grid == grid)) throw ParameterError("field grid does not match");
    if (field.components != m) throw ParameterError("field components do not match the integrand");
    if (field.bc != bc.field_bc())
        throw ParameterError("field bc " + to_string(field.bc) + " incompatible with " + to_string(bc.kind));
}

}  // namespace

ExtReal energy(const Grid& grid, const Field& field, const IntegrandSpec& spec, const Medium& medium,
               const BCSpec& bc, const std::optional<Truncation>& truncation, double t) {
    check_field(grid, field, bc, spec.m);
    CellEnergy e(grid, spec, medium, bc, truncation, t);
    return e.value(field.values);
}

std::vector<double> energy_gradient(const Grid& grid, const Field& field, const IntegrandSpec& spec,
                                    const Medium& medium, const BCSpec& bc,
                                    const std::optional<Truncation>& truncation, double t) {
    check_field(grid, field, bc, spec.m);
    CellEnergy e(grid, spec, medium, bc, truncation, t);
    std::vector<double> g(e.size());
    if (e.value_and_gradient(field.values, g).is_infinite())
        throw DomainError("energy_gradient: energy is infinite");
    return g;
}

Mat mean_gradient(const Grid& grid, std::span<const double> nodal, int components) {
    const int d = grid.dim;
    const Reference ref = reference_element(d, grid.h());
    const double w = 1.0 / (static_cast<double>(grid.cell_count()) * ref.nq);
    Mat G = Mat::Zero(components, d);
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        const auto c = cell_multi(grid, cell);
        for (int a = 0; a < ref.nloc; ++a) {
            const std::size_t node = local_node(grid, c, a);
            for (int q = 0; q < ref.nq; ++q)
                for (int comp = 0; comp < components; ++comp)
                    for (int j = 0; j < d; ++j)
                        G(comp, j) += w * nodal[node * components + comp] * ref.shape_grad[(q * ref.nloc + a) * d + j];
        }
    }
    return G;
}

Mat mean_gradient(const Field& field) { return mean_gradient(field.grid, field.values, field.components); }

std::vector<double> mean_gradient_adjoint(const Grid& grid, const Mat& H) {
    const int d = grid.dim;
    const auto m = static_cast<int>(H.rows());
    const Reference ref = reference_element(d, grid.h());
    const double w = 1.0 / (static_cast<double>(grid.cell_count()) * ref.nq);
    std::vector<double> out(grid.node_count() * m, 0.0);
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        const auto c = cell_multi(grid, cell);
        for (int a = 0; a < ref.nloc; ++a) {
            const std::size_t node = local_node(grid, c, a);
            for (int q = 0; q < ref.nq; ++q)
                for (int comp = 0; comp < m; ++comp)
                    for (int j = 0; j < d; ++j)
                        out[node * m + comp] += w * H(comp, j) * ref.shape_grad[(q * ref.nloc + a) * d + j];
        }
    }
    return out;
}

Field project_mean_zero(const Field& field) {
    if (field.grid.periodic) throw ParameterError("project_mean_zero: needs a non-periodic grid");
    const Mat G = mean_gradient(field);
    const Field lin = Field::affine(field.grid, G, field.bc);
    Field out = field;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= lin.values[i];
    return out;
}

void write_field(std::ostream& os, const Field& field) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", field.grid.side);
    os << field.grid.dim << ' ' << buf << ' ' << field.grid.cells << ' ' << field.components << ' '
       << to_string(field.bc) << '\n';
    for (std::size_t n = 0; n < field.grid.node_count(); ++n) {
        for (int c = 0; c < field.components; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", field.at(n, c));
            os << (c ? " " : "") << buf;
        }
        os << '\n';
    }
}

Field read_field(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParameterError("read_field: missing header");
    std::istringstream hs(header);
    int dim = 0, n = 0, m = 0;
    double side = 0.0;
    std::string bc;
    if (!(hs >> dim >> side >> n >> m >> bc)) throw ParameterError("read_field: malformed header '" + header + "'");
    FieldBC fbc;
    if (bc == "dirichlet_zero")
        fbc = FieldBC::dirichlet_zero;
    else if (bc == "periodic")
        fbc = FieldBC::periodic;
    else if (bc == "free")
        fbc = FieldBC::free;
    else
        throw ParameterError("read_field: unknown bc '" + bc + "'");
    Field f = Field::zeros(Grid::make(dim, side, n, fbc == FieldBC::periodic), m, fbc);
    for (double& v : f.values)
        if (!(is >> v)) throw ParameterError("read_field: not enough nodal values");
    return f;
}

}  // namespace infhom
