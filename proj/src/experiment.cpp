#include "infhom/experiment.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace infhom {

namespace {

namespace fs = std::filesystem;

std::string out_dir(const ExperimentConfig& c, const RunOptions& o) { return o.out_dir.empty() ? c.out_path : o.out_dir; }

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return f;
}

std::string lambda_header(const Mat& L) {
    std::string s;
    for (int i = 0; i < L.rows(); ++i)
        for (int j = 0; j < L.cols(); ++j) s += ",lambda_" + std::to_string(i + 1) + std::to_string(j + 1);
    return s;
}

std::string lambda_cells(const Mat& L) {
    std::string s;
    for (int i = 0; i < L.rows(); ++i)
        for (int j = 0; j < L.cols(); ++j) s += "," + format_real(L(i, j));
    return s;
}

HomogEstimate estimate(const ExperimentConfig& c, Formula f, const Mat& L, double R, double t, int threads) {
    const CellProblem p = c.problem(f, L, R, t);
    if (f == Formula::nonconvex)
        return estimate_wbar(p, CorrectorConfig{c.R_outer, c.corrector_bc}, c.realizations, threads);
    return estimate_vbar(p, c.realizations, threads);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string git_blob_sha1(const std::string& content) {
    const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1)
        throw std::runtime_error("sha1 failed");
    std::string hex;
    char b[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

void write_solves_csv(std::ostream& os, const std::vector<HomogEstimate>& estimates, bool record_timing) {
    if (estimates.empty()) return;
    os << "formula" << lambda_header(estimates.front().lambda)
       << ",R,n,k,t,eta,seed_index,value,converged,iterations,seconds\n";
    for (const auto& e : estimates)
        for (const auto& r : e.realizations)
            for (const auto& s : r.solves)
                os << to_string(e.formula) << lambda_cells(e.lambda) << ',' << format_real(e.R) << ',' << e.n << ','
                   << format_real(s.k) << ',' << format_real(e.t) << ',' << format_real(e.eta) << ',' << r.index
                   << ',' << format_real(s.value) << ',' << (s.converged ? 1 : 0) << ',' << s.iterations << ','
                   << format_real(record_timing ? s.seconds : 0.0) << '\n';
}

void write_summary_csv(std::ostream& os, const std::vector<HomogEstimate>& estimates) {
    if (estimates.empty()) return;
    os << "formula" << lambda_header(estimates.front().lambda) << ",R,mean,stderr,N,diverged,t,infeasible\n";
    for (const auto& e : estimates)
        os << to_string(e.formula) << lambda_cells(e.lambda) << ',' << format_real(e.R) << ','
           << format_real(e.mean) << ',' << format_real(e.std_error) << ',' << e.N << ',' << e.diverged_count << ','
           << format_real(e.t) << ',' << (e.infeasible ? 1 : 0) << '\n';
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    for (Formula f : config.formulas)
        for (const Mat& L : config.lambdas)
            for (double R : config.R_list)
                for (double t : config.t_schedule) {
                    res.estimates.push_back(estimate(config, f, L, R, t, opt.threads));
                    if (res.estimates.back().infeasible) ++res.infeasible;
                }
    res.wall_seconds = seconds_since(t0);

    const std::string dir = out_dir(config, opt);
    {
        auto f = open_out(dir, "solves.csv");
        write_solves_csv(f, res.estimates, config.record_timing);
    }
    {
        auto f = open_out(dir, "summary.csv");
        write_summary_csv(f, res.estimates);
    }
    auto rep = open_out(dir, "report.txt");
    const std::string resolved = to_text(config);
    std::size_t solves = 0;
    double solve_seconds = 0.0;
    for (const auto& e : res.estimates)
        for (const auto& r : e.realizations)
            for (const auto& s : r.solves) ++solves, solve_seconds += s.seconds;
    rep << "# resolved configuration\n"
        << resolved << "\n# hashes (git blob sha1)\n"
        << "input_sha1 = " << git_blob_sha1(opt.config_source.empty() ? resolved : opt.config_source) << '\n'
        << "resolved_sha1 = " << git_blob_sha1(resolved) << '\n'
        << "\n# totals\n"
        << "estimates = " << res.estimates.size() << '\n'
        << "infeasible_estimates = " << res.infeasible << '\n'
        << "solves = " << solves << '\n'
        << "threads = " << opt.threads << '\n'
        << "solve_seconds = " << format_real(solve_seconds) << '\n'
        << "wall_seconds = " << format_real(res.wall_seconds) << '\n'
        << "\n# nonconvex values are best local minima over the multistart, not certified infima\n";
    return res;
}

void run_sweeps(const ExperimentConfig& config, const RunOptions& opt) {
    const std::string dir = out_dir(config, opt);
    auto out = open_out(dir, "sweep.csv");
    out << "sweep,formula" << lambda_header(config.lambdas.front())
        << ",R,t,mean,stderr,N,diverged,rate,extrapolated\n";
    const std::vector<double> ts = config.t_schedule.size() > 1 ? config.t_schedule : default_t_schedule();
    for (Formula f : config.formulas) {
        if (f == Formula::nonconvex) continue;  // sweeps cover the convex formulas
        for (const Mat& L : config.lambdas) {
            for (double t : config.t_schedule) {
                const auto rs = r_sweep(config.problem(f, L, config.R_list.front(), t), config.R_list,
                                        config.realizations, opt.threads);
                for (const auto& e : rs.estimates)
                    out << "R," << to_string(f) << lambda_cells(L) << ',' << format_real(e.R) << ','
                        << format_real(t) << ',' << format_real(e.mean) << ',' << format_real(e.std_error) << ','
                        << e.N << ',' << e.diverged_count << ','
                        << format_real(rs.rate_fitted ? rs.rate : std::nan("")) << ",nan\n";
            }
            for (double R : config.R_list) {
                const auto tsr = t_sweep(config.problem(f, L, R, ts.back()), ts, config.realizations, opt.threads);
                for (std::size_t i = 0; i < tsr.estimates.size(); ++i) {
                    const auto& e = tsr.estimates[i];
                    out << "t," << to_string(f) << lambda_cells(L) << ',' << format_real(R) << ','
                        << format_real(tsr.t_values[i]) << ',' << format_real(e.mean) << ','
                        << format_real(e.std_error) << ',' << e.N << ',' << e.diverged_count << ",nan,"
                        << format_real(tsr.extrapolated_value) << '\n';
                }
            }
        }
    }
}

std::vector<OracleRow> oracle_values(const ExperimentConfig& config) {
    std::vector<OracleRow> rows;
    const bool empty_medium =
        (config.kind == ProcessKind::poisson || config.kind == ProcessKind::hardcore) && config.intensity == 0.0;
    const bool same_phase = config.matrix_phase.describe() == config.inclusion_phase.describe();
    const bool laminate = config.dim() == 1 && config.kind == ProcessKind::deterministic_periodic;
    for (const Mat& L : config.lambdas)
        for (double R : config.R_list) {
            if (empty_medium || same_phase) {
                const ExtReal v = constant_vbar(config.matrix_phase, L);
                rows.push_back({L, R, v.value_or(std::numeric_limits<double>::infinity()), "constant"});
            } else if (laminate) {
                const double f_inc = std::min(2.0 * config.radius / config.spacing, 1.0);
                LaminateSpec ls;
                ls.p = config.p;
                if (f_inc < 1.0) {
                    ls.phases = {config.matrix_phase, config.inclusion_phase};
                    ls.fractions = {1.0 - f_inc, f_inc};
                } else {
                    ls.phases = {config.inclusion_phase};
                    ls.fractions = {1.0};
                }
                rows.push_back({L, R, laminate_1d_vbar(ls, L(0, 0)), "laminate"});
            }
        }
    return rows;
}

std::vector<OracleRow> run_oracle(const ExperimentConfig& config, const RunOptions& opt) {
    const auto rows = oracle_values(config);
    auto out = open_out(out_dir(config, opt), "oracle.csv");
    out << "formula" << lambda_header(config.lambdas.front()) << ",R,mean,stderr,N,diverged,t,infeasible\n";
    for (const auto& r : rows)
        out << "oracle" << lambda_cells(r.lambda) << ',' << format_real(r.R) << ',' << format_real(r.value)
            << ",0,1,0,1," << (std::isinf(r.value) ? 1 : 0) << '\n';
    return rows;
}

double run_cell(const ExperimentConfig& config, std::size_t index) {
    const CellProblem p =
        config.problem(config.formulas.front(), config.lambdas.front(), config.R_list.front(), config.t_schedule.back());
    p.validate();
    const RealizationResult r = p.formula == Formula::nonconvex
                                    ? solve_realization_nonconvex(p, CorrectorConfig{config.R_outer, config.corrector_bc}, index)
                                    : solve_realization(p, index);
    return r.value;
}

PointSample config_sample(const ExperimentConfig& config, std::size_t index) {
    const CellProblem p =
        config.problem(config.formulas.front(), config.lambdas.front(), config.R_list.front(), 1.0);
    return realization_sample(p, index, p.R);
}

}  // namespace infhom
