#pragma once

// Stationary point processes and their union-of-balls inclusion sets.

#include "infhom/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace infhom {

/// The cube Q_R = [-R/2, R/2)^d, optionally identified as a torus.
struct BoxSpec {
    int dim = 2;
    double side = 1.0;
    bool periodic = false;

    double lo() const { return -0.5 * side; }
    double hi() const { return 0.5 * side; }
    double volume() const;
    bool contains(const Point& y) const;
    void validate() const;
};

enum class ProcessKind { poisson, random_parking, hardcore, deterministic_periodic };

std::string to_string(ProcessKind kind);
ProcessKind process_kind_from_string(const std::string& s);

/// Parameters needed to regenerate a sample (e.g. for periodization in law).
struct ProcessParams {
    double intensity = 0.0;            // poisson / hardcore candidate rate
    double radius = 1.0;               // inclusion radius R_n (constant)
    double candidate_intensity = 0.0;  // random parking candidate rate
    double margin = 0.0;               // stabilization margin around Q_R
    double spacing = 1.0;              // deterministic lattice spacing
    double offset = 0.0;               // deterministic lattice offset (all axes)
};

struct PointSample {
    BoxSpec box;
    std::vector<Point> points;
    std::vector<double> radii;
    ProcessKind kind = ProcessKind::poisson;
    std::uint64_t master_seed = 0;
    std::string stream_label;
    ProcessParams params;

    std::size_t size() const { return points.size(); }
    bool operator==(const PointSample& o) const;
};

/// R-periodic tiling of a base sample on Q_R; copies are resolved at query time.
struct PeriodizedSample {
    PointSample base;
    double period = 1.0;

    /// All tiled centers lying in the half-open box [lo, hi)^d.
    std::vector<Point> points_in_region(const Point& lo, const Point& hi) const;
};

/// Candidate of the graphical construction: a location with a time mark.
struct MarkedPoint {
    Point x{};
    double time = 0.0;
};

/// Greedy thinning by increasing time mark: a candidate is accepted iff it is at
/// distance >= 2*radius from every previously accepted one. With `torus_period`
/// the torus metric on Q_period is used. Returns accepted indices in time order.
std::vector<std::size_t> graphical_construction(const std::vector<MarkedPoint>& candidates, int dim,
                                                double radius,
                                                std::optional<double> torus_period = std::nullopt);

double ball_volume(int dim, double radius);
double default_parking_margin(double radius, double side);
double default_candidate_intensity(int dim, double radius);

PointSample sample_poisson(double intensity, const BoxSpec& box, std::uint64_t seed,
                           const std::string& label, double radius = 1.0);

/// Penrose's graphical construction on Q_{R+2 margin} x [0,1], continued to infinite time
/// (saturation) and restricted to Q_R. The candidate intensity only sets how much of the
/// process runs on explicit candidates. Non-positive `candidate_intensity` / negative
/// `margin` select the defaults.
PointSample sample_random_parking(double radius, const BoxSpec& box, std::uint64_t seed,
                                  double margin = -1.0, double candidate_intensity = -1.0,
                                  const std::string& label = "parking");

PointSample sample_hardcore(double intensity, double radius, const BoxSpec& box, std::uint64_t seed,
                            const std::string& label = "hardcore", double margin = -1.0);

/// Lattice offset + spacing * Z^d intersected with Q_R.
PointSample sample_deterministic_periodic(double spacing, double offset, double radius,
                                          const BoxSpec& box);

/// Uniform entry point used by the experiment layer.
PointSample generate_sample(ProcessKind kind, const ProcessParams& params, const BoxSpec& box,
                            std::uint64_t seed, const std::string& label);

/// Poisson and lattices: tile the base sample. Random parking / hardcore: re-run the
/// graphical construction on the R-periodized candidate set with the torus metric.
PeriodizedSample periodize_in_law(const PointSample& sample, double period);

bool inclusion_indicator(const PointSample& sample, const Point& y);
bool inclusion_indicator(const PeriodizedSample& sample, const Point& y);

/// inf_{m != n} dist(B_m, B_n) / R_n >= 1/C and R_n <= C for every inclusion.
bool check_separation(const PointSample& sample, double C);

/// Smallest distance from a center to the boundary of Q_R (+inf if empty).
double min_boundary_distance(const PointSample& sample);

/// Read-only inclusion set seen by the energy: empty, plain, or periodized.
class Medium {
public:
    Medium() = default;
    explicit Medium(PointSample s) : data_(std::move(s)) {}
    explicit Medium(PeriodizedSample s) : data_(std::move(s)) {}

    bool contains(const Point& y) const;
    bool empty() const;
    bool periodized() const { return std::holds_alternative<PeriodizedSample>(data_); }
    const PointSample* sample() const;

private:
    std::variant<std::monostate, PointSample, PeriodizedSample> data_;
};

/// Text format: header `dim R kind seed`, then `x1 ... xd radius` per point (17 digits).
void write_sample(std::ostream& os, const PointSample& sample);
PointSample read_sample(std::istream& is);

}  // namespace infhom
