#include "infhom/microstructure.hpp"

#include "infhom/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace infhom {

namespace {

double sq(double x) { return x * x; }

double torus_delta(double dx, double period) { return dx - period * std::round(dx / period); }

double dist2(const Point& a, const Point& b, int dim, std::optional<double> period = std::nullopt) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        double dx = a[i] - b[i];
        if (period) dx = torus_delta(dx, *period);
        s += dx * dx;
    }
    return s;
}

Point uniform_point(Engine& eng, int dim, double lo, double hi) {
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) p[i] = uniform_in(eng, lo, hi);
    return p;
}

bool in_cube(const Point& y, int dim, double lo, double hi) {
    for (int i = 0; i < dim; ++i)
        if (y[i] < lo || y[i] >= hi) return false;
    return true;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw ParameterError(std::string(what) + " must be finite");
}

// Uniform cell list over [lo, lo + ncell*cell)^d used by the greedy thinning.
class CellList {
public:
    CellList(int dim, double lo, double extent, double min_cell, bool wrap)
        : dim_(dim), lo_(lo), wrap_(wrap) {
        ncell_ = std::max<long>(1, static_cast<long>(std::floor(extent / min_cell)));
        ncell_ = std::min<long>(ncell_, 1L << 20);
        cell_ = extent / static_cast<double>(ncell_);
    }

    std::array<long, 3> cell_of(const Point& x) const {
        std::array<long, 3> c{0, 0, 0};
        for (int i = 0; i < dim_; ++i) {
            long k = static_cast<long>(std::floor((x[i] - lo_) / cell_));
            if (wrap_) {
                k %= ncell_;
                if (k < 0) k += ncell_;
            }
            c[i] = k;
        }
        return c;
    }

    long key(const std::array<long, 3>& c) const {
        // offsets keep out-of-range (non-wrapped) cells distinct
        const long span = ncell_ + 4;
        long k = 0;
        for (int i = dim_ - 1; i >= 0; --i) k = k * span + (c[i] + 2);
        return k;
    }

    void insert(const Point& x, std::size_t id) { cells_[key(cell_of(x))].push_back(id); }

    template <class F>
    void for_neighbors(const Point& x, F&& f) const {
        const auto c = cell_of(x);
        std::vector<long> seen;
        std::array<long, 3> off{-1, -1, -1};
        const int total = dim_ == 1 ? 3 : (dim_ == 2 ? 9 : 27);
        for (int t = 0; t < total; ++t) {
            int r = t;
            std::array<long, 3> nc{0, 0, 0};
            for (int i = 0; i < dim_; ++i) {
                off[i] = r % 3 - 1;
                r /= 3;
                long k = c[i] + off[i];
                if (wrap_) k = ((k % ncell_) + ncell_) % ncell_;
                nc[i] = k;
            }
            const long kk = key(nc);
            if (std::find(seen.begin(), seen.end(), kk) != seen.end()) continue;
            seen.push_back(kk);
            auto it = cells_.find(kk);
            if (it == cells_.end()) continue;
            for (std::size_t id : it->second) f(id);
        }
    }

private:
    int dim_;
    double lo_;
    bool wrap_;
    long ncell_ = 1;
    double cell_ = 1.0;
    std::unordered_map<long, std::vector<std::size_t>> cells_;
};

std::vector<MarkedPoint> poisson_candidates(Engine& eng, double rate, int dim, double lo, double hi) {
    const double vol = std::pow(hi - lo, dim);
    const auto count = poisson_count(eng, rate * vol);
    std::vector<MarkedPoint> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        MarkedPoint mp;
        mp.x = uniform_point(eng, dim, lo, hi);
        mp.time = uniform_in(eng, 0.0, 1.0);
        out.push_back(mp);
    }
    return out;
}

// Candidates on Q_R (core stream) plus the shell Q_{R+2 margin} \ Q_R (shell stream).
std::vector<MarkedPoint> thinning_candidates(const BoxSpec& box, double rate, double margin,
                                             std::uint64_t seed, const std::string& label,
                                             bool include_shell) {
    Engine core = make_engine(seed, label + "/core");
    auto cands = poisson_candidates(core, rate, box.dim, box.lo(), box.hi());
    if (include_shell && margin > 0.0) {
        Engine shell = make_engine(seed, label + "/shell");
        const double lo = box.lo() - margin;
        const double hi = box.hi() + margin;
        for (auto& c : poisson_candidates(shell, rate, box.dim, lo, hi))
            if (!in_cube(c.x, box.dim, box.lo(), box.hi())) cands.push_back(c);
    }
    return cands;
}

// Continues the parking process to infinite time: darts uniform on the union of cells not
// yet covered by an exclusion ball (a superset of the free space), refined 2^d-fold per
// round, until no free space remains. Returns the points added.
std::vector<Point> saturate(const std::vector<Point>& accepted, int dim, double radius, double lo, double hi,
                            std::optional<double> period, Engine& eng) {
    const double diam = 2.0 * radius;
    const double d2 = diam * diam;
    const double extent = hi - lo;
    CellList index(dim, lo, std::max(extent, diam), diam, period.has_value());
    std::vector<Point> pts = accepted;
    for (std::size_t i = 0; i < pts.size(); ++i) index.insert(pts[i], i);

    auto blocked = [&](const Point& x) {
        bool hit = false;
        index.for_neighbors(x, [&](std::size_t id) {
            if (!hit && dist2(x, pts[id], dim, period) < d2) hit = true;
        });
        return hit;
    };
    // cell (corner c, size s) lies inside a single exclusion ball
    auto covered = [&](const Point& c, double s) {
        Point mid = c;
        for (int i = 0; i < dim; ++i) mid[i] += 0.5 * s;
        bool cov = false;
        index.for_neighbors(mid, [&](std::size_t id) {
            if (cov) return;
            for (int corner = 0; corner < (1 << dim); ++corner) {
                Point q = c;
                for (int i = 0; i < dim; ++i)
                    if (corner >> i & 1) q[i] += s;
                if (dist2(q, pts[id], dim, period) >= d2) return;
            }
            cov = true;
        });
        return cov;
    };

    const long n0 = static_cast<long>(std::ceil(extent / (diam / std::sqrt(static_cast<double>(dim)))));
    double s = extent / static_cast<double>(n0);
    std::vector<Point> active;
    {
        std::array<long, 3> z{0, 0, 0};
        for (;;) {
            Point c{0.0, 0.0, 0.0};
            for (int i = 0; i < dim; ++i) c[i] = lo + s * static_cast<double>(z[i]);
            if (!covered(c, s)) active.push_back(c);
            int i = 0;
            for (; i < dim; ++i) {
                if (++z[i] < n0) break;
                z[i] = 0;
            }
            if (i == dim) break;
        }
    }
    const std::size_t first_new = pts.size();
    while (!active.empty() && s > 1e-9 * radius) {
        const std::size_t darts = active.size();
        for (std::size_t t = 0; t < darts; ++t) {
            const std::size_t pick =
                std::min(active.size() - 1, static_cast<std::size_t>(uniform_in(eng, 0.0, static_cast<double>(active.size()))));
            Point x = active[pick];
            for (int i = 0; i < dim; ++i) x[i] += uniform_in(eng, 0.0, s);
            if (blocked(x)) continue;
            pts.push_back(x);
            index.insert(x, pts.size() - 1);
        }
        std::vector<Point> next;
        const double h = 0.5 * s;
        for (const Point& c : active) {
            if (covered(c, s)) continue;
            for (int child = 0; child < (1 << dim); ++child) {
                Point q = c;
                for (int i = 0; i < dim; ++i)
                    if (child >> i & 1) q[i] += h;
                if (!covered(q, h)) next.push_back(q);
            }
        }
        active.swap(next);
        s = h;
    }
    return {pts.begin() + static_cast<std::ptrdiff_t>(first_new), pts.end()};
}

PointSample thinned_sample(ProcessKind kind, const ProcessParams& params, const BoxSpec& box,
                           std::uint64_t seed, const std::string& label) {
    const double rate = kind == ProcessKind::random_parking ? params.candidate_intensity : params.intensity;
    const auto cands = thinning_candidates(box, rate, params.margin, seed, label, !box.periodic);
    const std::optional<double> period = box.periodic ? std::optional<double>(box.side) : std::nullopt;
    const auto accepted = graphical_construction(cands, box.dim, params.radius, period);

    PointSample s;
    s.box = box;
    s.kind = kind;
    s.master_seed = seed;
    s.stream_label = label;
    s.params = params;
    std::vector<Point> pts;
    pts.reserve(accepted.size());
    for (std::size_t id : accepted) pts.push_back(cands[id].x);
    if (kind == ProcessKind::random_parking) {
        Engine eng = make_engine(seed, label + "/saturate");
        const double m = box.periodic ? 0.0 : params.margin;
        const auto extra = saturate(pts, box.dim, params.radius, box.lo() - m, box.hi() + m, period, eng);
        pts.insert(pts.end(), extra.begin(), extra.end());
    }
    for (const Point& x : pts) {
        if (!in_cube(x, box.dim, box.lo(), box.hi())) continue;
        s.points.push_back(x);
        s.radii.push_back(params.radius);
    }
    return s;
}

}  // namespace

double BoxSpec::volume() const { return std::pow(side, dim); }

bool BoxSpec::contains(const Point& y) const { return in_cube(y, dim, lo(), hi()); }

void BoxSpec::validate() const {
    if (dim < 1 || dim > 3) throw ParameterError("BoxSpec: dim must be 1, 2 or 3");
    if (!(side > 0.0) || !std::isfinite(side)) throw ParameterError("BoxSpec: side must be positive");
}

std::string to_string(ProcessKind kind) {
    switch (kind) {
        case ProcessKind::poisson: return "poisson";
        case ProcessKind::random_parking: return "random_parking";
        case ProcessKind::hardcore: return "hardcore";
        case ProcessKind::deterministic_periodic: return "deterministic_periodic";
    }
    return "?";
}

ProcessKind process_kind_from_string(const std::string& s) {
    if (s == "poisson") return ProcessKind::poisson;
    if (s == "random_parking") return ProcessKind::random_parking;
    if (s == "hardcore") return ProcessKind::hardcore;
    if (s == "deterministic_periodic") return ProcessKind::deterministic_periodic;
    throw ParameterError("unknown process kind '" + s + "'");
}

bool PointSample::operator==(const PointSample& o) const {
    return box.dim == o.box.dim && box.side == o.box.side && box.periodic == o.box.periodic &&
           points == o.points && radii == o.radii && kind == o.kind && master_seed == o.master_seed;
}

std::vector<Point> PeriodizedSample::points_in_region(const Point& lo, const Point& hi) const {
    const int d = base.box.dim;
    std::array<long, 3> zlo{0, 0, 0}, zhi{0, 0, 0};
    for (int i = 0; i < d; ++i) {
        zlo[i] = static_cast<long>(std::floor(lo[i] / period)) - 1;
        zhi[i] = static_cast<long>(std::ceil(hi[i] / period)) + 1;
    }
    std::vector<Point> out;
    std::array<long, 3> z = zlo;
    for (;;) {
        for (const auto& q : base.points) {
            Point p = q;
            for (int i = 0; i < d; ++i) p[i] = q[i] + period * static_cast<double>(z[i]);
            bool inside = true;
            for (int i = 0; i < d; ++i)
                if (p[i] < lo[i] || p[i] >= hi[i]) inside = false;
            if (inside) out.push_back(p);
        }
        int i = 0;
        for (; i < d; ++i) {
            if (++z[i] <= zhi[i]) break;
            z[i] = zlo[i];
        }
        if (i == d) break;
    }
    return out;
}

std::vector<std::size_t> graphical_construction(const std::vector<MarkedPoint>& candidates, int dim,
                                                double radius, std::optional<double> torus_period) {
    if (!(radius > 0.0)) throw ParameterError("graphical_construction: radius must be positive");
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (candidates[a].time != candidates[b].time) return candidates[a].time < candidates[b].time;
        return a < b;
    });
    if (candidates.empty()) return {};

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    if (torus_period) {
        lo = -0.5 * *torus_period;
        hi = 0.5 * *torus_period;
    } else {
        for (const auto& c : candidates)
            for (int i = 0; i < dim; ++i) {
                lo = std::min(lo, c.x[i]);
                hi = std::max(hi, c.x[i]);
            }
        hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    }
    const double diam = 2.0 * radius;
    const double d2 = diam * diam;
    CellList cells(dim, lo, std::max(hi - lo, diam), diam, torus_period.has_value());

    std::vector<std::size_t> accepted;
    for (std::size_t id : order) {
        const Point& x = candidates[id].x;
        bool ok = true;
        cells.for_neighbors(x, [&](std::size_t other) {
            if (ok && dist2(x, candidates[other].x, dim, torus_period) < d2) ok = false;
        });
        if (!ok) continue;
        accepted.push_back(id);
        cells.insert(x, id);
    }
    return accepted;
}

double ball_volume(int dim, double radius) {
    switch (dim) {
        case 1: return 2.0 * radius;
        case 2: return std::numbers::pi * radius * radius;
        case 3: return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
        default: throw ParameterError("ball_volume: dim must be 1, 2 or 3");
    }
}

double default_parking_margin(double radius, double side) {
    return std::max(0.0, 3.0 * radius * std::log(side));
}

double default_candidate_intensity(int dim, double radius) { return 5.0 / ball_volume(dim, radius); }

PointSample sample_poisson(double intensity, const BoxSpec& box, std::uint64_t seed,
                           const std::string& label, double radius) {
    require_finite(intensity, "sample_poisson: intensity");
    if (intensity < 0.0) throw ParameterError("sample_poisson: intensity must be >= 0");
    if (!(radius > 0.0)) throw ParameterError("sample_poisson: radius must be positive");
    box.validate();

    PointSample s;
    s.box = box;
    s.kind = ProcessKind::poisson;
    s.master_seed = seed;
    s.stream_label = label;
    s.params.intensity = intensity;
    s.params.radius = radius;

    Engine eng = make_engine(seed, label);
    const auto count = poisson_count(eng, intensity * box.volume());
    s.points.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) s.points.push_back(uniform_point(eng, box.dim, box.lo(), box.hi()));
    s.radii.assign(s.points.size(), radius);
    return s;
}

PointSample sample_random_parking(double radius, const BoxSpec& box, std::uint64_t seed, double margin,
                                  double candidate_intensity, const std::string& label) {
    require_finite(radius, "sample_random_parking: radius");
    if (!(radius > 0.0)) throw ParameterError("sample_random_parking: radius must be positive");
    box.validate();
    ProcessParams params;
    params.radius = radius;
    params.margin = margin >= 0.0 ? margin : default_parking_margin(radius, box.side);
    params.candidate_intensity =
        candidate_intensity > 0.0 ? candidate_intensity : default_candidate_intensity(box.dim, radius);
    require_finite(params.margin, "sample_random_parking: margin");
    require_finite(params.candidate_intensity, "sample_random_parking: candidate intensity");
    return thinned_sample(ProcessKind::random_parking, params, box, seed, label);
}

PointSample sample_hardcore(double intensity, double radius, const BoxSpec& box, std::uint64_t seed,
                            const std::string& label, double margin) {
    require_finite(intensity, "sample_hardcore: intensity");
    if (intensity < 0.0) throw ParameterError("sample_hardcore: intensity must be >= 0");
    if (!(radius > 0.0)) throw ParameterError("sample_hardcore: radius must be positive");
    box.validate();
    ProcessParams params;
    params.intensity = intensity;
    params.radius = radius;
    params.margin = margin >= 0.0 ? margin : default_parking_margin(radius, box.side);
    return thinned_sample(ProcessKind::hardcore, params, box, seed, label);
}

PointSample sample_deterministic_periodic(double spacing, double offset, double radius, const BoxSpec& box) {
    if (!(spacing > 0.0)) throw ParameterError("lattice spacing must be positive");
    if (!(radius > 0.0)) throw ParameterError("lattice radius must be positive");
    box.validate();
    PointSample s;
    s.box = box;
    s.kind = ProcessKind::deterministic_periodic;
    s.stream_label = "lattice";
    s.params.spacing = spacing;
    s.params.offset = offset;
    s.params.radius = radius;

    const long zmin = static_cast<long>(std::floor((box.lo() - offset) / spacing)) - 1;
    const long zmax = static_cast<long>(std::ceil((box.hi() - offset) / spacing)) + 1;
    std::array<long, 3> z{zmin, zmin, zmin};
    for (int i = box.dim; i < 3; ++i) z[i] = 0;
    for (;;) {
        Point p{0.0, 0.0, 0.0};
        for (int i = 0; i < box.dim; ++i) p[i] = offset + spacing * static_cast<double>(z[i]);
        if (box.contains(p)) {
            s.points.push_back(p);
            s.radii.push_back(radius);
        }
        int i = 0;
        for (; i < box.dim; ++i) {
            if (++z[i] <= zmax) break;
            z[i] = zmin;
        }
        if (i == box.dim) break;
    }
    return s;
}

PointSample generate_sample(ProcessKind kind, const ProcessParams& params, const BoxSpec& box,
                            std::uint64_t seed, const std::string& label) {
    switch (kind) {
        case ProcessKind::poisson: return sample_poisson(params.intensity, box, seed, label, params.radius);
        case ProcessKind::random_parking:
            return sample_random_parking(params.radius, box, seed, params.margin, params.candidate_intensity, label);
        case ProcessKind::hardcore:
            return sample_hardcore(params.intensity, params.radius, box, seed, label, params.margin);
        case ProcessKind::deterministic_periodic:
            return sample_deterministic_periodic(params.spacing, params.offset, params.radius, box);
    }
    throw ParameterError("generate_sample: unknown kind");
}

PeriodizedSample periodize_in_law(const PointSample& sample, double period) {
    if (!(std::abs(period - sample.box.side) <= 1e-12 * sample.box.side))
        throw ParameterError("periodize_in_law: period must equal the sample box side");
    PeriodizedSample out;
    out.period = period;
    switch (sample.kind) {
        case ProcessKind::poisson:
        case ProcessKind::deterministic_periodic:
            out.base = sample;
            break;
        case ProcessKind::random_parking:
        case ProcessKind::hardcore: {
            BoxSpec torus = sample.box;
            torus.periodic = true;
            out.base = thinned_sample(sample.kind, sample.params, torus, sample.master_seed, sample.stream_label);
            break;
        }
    }
    out.base.box.periodic = true;
    return out;
}

bool inclusion_indicator(const PointSample& sample, const Point& y) {
    const int d = sample.box.dim;
    for (std::size_t n = 0; n < sample.points.size(); ++n)
        if (dist2(y, sample.points[n], d) < sq(sample.radii[n])) return true;
    return false;
}

bool inclusion_indicator(const PeriodizedSample& sample, const Point& y) {
    const int d = sample.base.box.dim;
    const double P = sample.period;
    for (std::size_t n = 0; n < sample.base.points.size(); ++n) {
        const double r = sample.base.radii[n];
        const Point& q = sample.base.points[n];
        if (r <= 0.5 * P) {
            if (dist2(y, q, d, P) < r * r) return true;
            continue;
        }
        // large balls may overlap several images
        const int total = d == 1 ? 3 : (d == 2 ? 9 : 27);
        for (int t = 0; t < total; ++t) {
            int rr = t;
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                const double dx = torus_delta(y[i] - q[i], P) + P * static_cast<double>(rr % 3 - 1);
                rr /= 3;
                s += dx * dx;
            }
            if (s < r * r) return true;
        }
    }
    return false;
}

bool check_separation(const PointSample& sample, double C) {
    if (!(C > 0.0)) throw ParameterError("check_separation: C must be positive");
    const int d = sample.box.dim;
    const std::size_t N = sample.points.size();
    for (std::size_t n = 0; n < N; ++n) {
        const double Rn = sample.radii[n];
        if (Rn > C) return false;
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < N; ++m) {
            if (m == n) continue;
            const double g = std::sqrt(dist2(sample.points[m], sample.points[n], d)) - sample.radii[m] - Rn;
            gap = std::min(gap, std::max(0.0, g));
        }
        if (gap / Rn < 1.0 / C) return false;
    }
    return true;
}

double min_boundary_distance(const PointSample& sample) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : sample.points)
        for (int i = 0; i < sample.box.dim; ++i) best = std::min(best, sample.box.hi() - std::abs(q[i]));
    return best;
}

bool Medium::contains(const Point& y) const {
    if (const auto* s = std::get_if<PointSample>(&data_)) return inclusion_indicator(*s, y);
    if (const auto* s = std::get_if<PeriodizedSample>(&data_)) return inclusion_indicator(*s, y);
    return false;
}

bool Medium::empty() const {
    if (const auto* s = std::get_if<PointSample>(&data_)) return s->points.empty();
    if (const auto* s = std::get_if<PeriodizedSample>(&data_)) return s->base.points.empty();
    return true;
}

const PointSample* Medium::sample() const {
    if (const auto* s = std::get_if<PointSample>(&data_)) return s;
    if (const auto* s = std::get_if<PeriodizedSample>(&data_)) return &s->base;
    return nullptr;
}

void write_sample(std::ostream& os, const PointSample& sample) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", sample.box.side);
    os << sample.box.dim << ' ' << buf << ' ' << to_string(sample.kind) << ' ' << sample.master_seed << '\n';
    for (std::size_t n = 0; n < sample.points.size(); ++n) {
        for (int i = 0; i < sample.box.dim; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", sample.points[n][i]);
            os << buf << ' ';
        }
        std::snprintf(buf, sizeof buf, "%.17g", sample.radii[n]);
        os << buf << '\n';
    }
}

PointSample read_sample(std::istream& is) {
    PointSample s;
    std::string header;
    if (!std::getline(is, header)) throw ParameterError("read_sample: missing header");
    std::istringstream hs(header);
    std::string kind;
    if (!(hs >> s.box.dim >> s.box.side >> kind >> s.master_seed))
        throw ParameterError("read_sample: malformed header '" + header + "'");
    s.kind = process_kind_from_string(kind);
    s.box.validate();
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Point p{0.0, 0.0, 0.0};
        double r = 0.0;
        for (int i = 0; i < s.box.dim; ++i)
            if (!(ls >> p[i])) throw ParameterError("read_sample: malformed point line '" + line + "'");
        if (!(ls >> r) || !(r > 0.0)) throw ParameterError("read_sample: malformed radius in '" + line + "'");
        s.points.push_back(p);
        s.radii.push_back(r);
    }
    return s;
}

}  // namespace infhom
