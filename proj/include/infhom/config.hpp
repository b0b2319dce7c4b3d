#pragma once

// Line-oriented `section.key = value` experiment configuration.

#include "infhom/homogenize.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace infhom {

struct ConfigError : ParameterError {
    using ParameterError::ParameterError;
};

struct ExperimentConfig {
    // microstructure
    ProcessKind kind = ProcessKind::poisson;
    double intensity = 0.0;
    double radius = 1.0;
    double candidate_intensity = -1.0;  // < 0: 5 / vol(ball)
    double margin = -1.0;               // < 0: 3 radius log R
    double spacing = 1.0;
    double offset = 0.0;
    // integrand
    PhaseFunction matrix_phase = PhaseFunction::isotropic_quadratic(1.0);
    PhaseFunction inclusion_phase = PhaseFunction::isotropic_quadratic(1.0);
    double p = 2.0;
    double growth_C = 1.0;
    double gamma = 0.0;
    double cap = 1.0;
    std::string nonconvex_kind = "none";  // none | oscillatory | det_well
    Mat xi;                               // empty: all-ones direction
    TruncationScheme truncation = TruncationScheme::constraint_yosida;
    // grid
    double cells_per_unit = 4.0;
    // solver
    double tol_e = 1e-9;
    double tol_g = 1e-7;
    int max_iter = 10000;
    int restarts = 8;
    std::vector<double> k_schedule = default_k_schedule();
    std::vector<double> t_schedule = {1.0};
    double stab_tol = 1e-4;
    // run
    std::vector<Formula> formulas = {Formula::dirichlet_trunc};
    std::vector<Mat> lambdas;
    std::vector<double> R_list = {4.0};
    int realizations = 1;
    double theta = 1.0;
    std::uint64_t master_seed = 0;
    std::string out_path = "out";
    CorrectorBC corrector_bc = CorrectorBC::periodic;
    double R_outer = 0.0;      // <= 0: same as R
    bool record_timing = false;
    double mesh_margin = -1.0;  // < 0: 5 h

    int dim() const;
    int m() const;
    IntegrandSpec integrand() const;
    SolverOptions solver_options() const;
    SweepOptions sweep_options() const;
    CellProblem problem(Formula f, const Mat& lambda, double R, double t) const;
};

/// Canonical text: every key with its resolved value; re-parses to an equal config.
std::string to_text(const ExperimentConfig& c);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// ConfigError naming the line and key on unknown keys, malformed values, duplicate
/// keys (both lines) and invariant violations; "run.lambdas missing" when absent.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// `quadratic(4)`, `power(1,3)`, `zero`, `ball(2,quadratic(4))`, `barrier(1,1,2)`, ...
PhaseFunction parse_phase(const std::string& text);

/// Matrices separated by `|`, rows by `;`, entries by spaces or commas.
std::vector<Mat> parse_matrices(const std::string& text);

}  // namespace infhom
