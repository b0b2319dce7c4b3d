#pragma once

// Experiment execution and file emission for the command line tool and bindings.

#include "infhom/config.hpp"
#include "infhom/oracle.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace infhom {

struct RunOptions {
    int threads = 1;
    std::string out_dir;        // empty: config.out_path
    std::string config_source;  // original config text, hashed into the report
};

struct ExperimentResult {
    std::vector<HomogEstimate> estimates;
    std::size_t infeasible = 0;
    double wall_seconds = 0.0;
};

/// Every (formula, Lambda, R, t) combination; writes solves.csv, summary.csv, report.txt.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opt);

/// R-sweeps (rate fit) and t-sweeps (extrapolation) per (formula, Lambda); writes sweep.csv.
void run_sweeps(const ExperimentConfig& config, const RunOptions& opt);

struct OracleRow {
    Mat lambda;
    double R = 0.0;
    double value = 0.0;
    std::string source;  // "constant" or "laminate"
};

/// Oracle values that apply to the configuration (constant media, 1D lattices).
std::vector<OracleRow> oracle_values(const ExperimentConfig& config);

/// Writes oracle rows in the summary schema (formula = oracle) to oracle.csv.
std::vector<OracleRow> run_oracle(const ExperimentConfig& config, const RunOptions& opt);

/// Realization `index` of the first (formula, Lambda, R, t); the cell value.
double run_cell(const ExperimentConfig& config, std::size_t index = 0);

/// Sample of realization `index` on Q_R for the first R.
PointSample config_sample(const ExperimentConfig& config, std::size_t index = 0);

/// Git-style blob hash: sha1("blob <len>\0" + content), lowercase hex.
std::string git_blob_sha1(const std::string& content);

/// "%.17g", with inf / -inf / nan spelled out.
std::string format_real(double v);

void write_solves_csv(std::ostream& os, const std::vector<HomogEstimate>& estimates, bool record_timing);
void write_summary_csv(std::ostream& os, const std::vector<HomogEstimate>& estimates);

/// Built-in invariant suite; one PASS/FAIL line per check, true when all pass.
bool run_self_check(std::ostream& os, int threads = 2);

}  // namespace infhom
