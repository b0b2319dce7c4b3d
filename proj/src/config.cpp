#include "infhom/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace infhom {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_any(const std::string& s, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (seps.find(ch) != std::string::npos) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double to_double(const std::string& s) {
    const std::string t = trim(s);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) throw ConfigError("expected a number, got '" + s + "'");
    return v;
}

long long to_integer(const std::string& s) {
    const std::string t = trim(s);
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) throw ConfigError("expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    const std::string t = trim(s);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t[0] == '-' || end != t.c_str() + t.size())
        throw ConfigError("expected an unsigned 64-bit integer, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& s) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("expected true/false, got '" + s + "'");
}

std::vector<double> to_list(const std::string& s) {
    std::vector<double> out;
    if (trim(s) == "none") return out;
    for (const auto& tok : split_any(s, " ,\t")) out.push_back(to_double(tok));
    return out;
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    if (v.empty()) return "none";
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string fmt_matrix(const Mat& M) {
    std::string s;
    for (int i = 0; i < M.rows(); ++i) {
        if (i) s += "; ";
        for (int j = 0; j < M.cols(); ++j) s += (j ? " " : "") + fmt(M(i, j));
    }
    return s;
}

// Recursive-descent phase parser.
struct PhaseParser {
    const std::string& s;
    std::size_t pos = 0;

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw ConfigError(std::string("phase '") + s + "': expected '" + c + "'");
    }
    std::string name() {
        skip();
        const std::size_t a = pos;
        while (pos < s.size() && (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        return s.substr(a, pos - a);
    }
    double number() {
        skip();
        const std::size_t a = pos;
        while (pos < s.size() && s[pos] != ',' && s[pos] != ')' && !std::isspace(static_cast<unsigned char>(s[pos])))
            ++pos;
        return to_double(s.substr(a, pos - a));
    }
    std::vector<double> numbers() {
        std::vector<double> v{number()};
        while (accept(',')) v.push_back(number());
        return v;
    }
    PhaseFunction phase() {
        const std::string n = name();
        if (n == "zero") return PhaseFunction::zero();
        expect('(');
        PhaseFunction out;
        if (n == "power") {
            const auto v = numbers();
            if (v.size() != 2) throw ConfigError("power(c,p) takes two arguments");
            out = PhaseFunction::power_law(v[0], v[1]);
        } else if (n == "quadratic") {
            const auto v = numbers();
            if (v.size() == 1) {
                out = PhaseFunction::isotropic_quadratic(v[0]);
            } else {
                const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v.size()))));
                if (k * k != static_cast<int>(v.size())) throw ConfigError("quadratic(...) needs 1 or n*n entries");
                Eigen::MatrixXd A(k, k);
                for (int i = 0; i < k * k; ++i) A(i / k, i % k) = v[i];
                out = PhaseFunction::quadratic(A);
            }
        } else if (n == "ball") {
            const double r = number();
            expect(',');
            out = PhaseFunction::indicator_ball(r, phase());
        } else if (n == "barrier") {
            const auto v = numbers();
            if (v.size() != 3) throw ConfigError("barrier(r,c,p) takes three arguments");
            out = PhaseFunction::barrier(v[0], v[1], v[2]);
        } else {
            throw ConfigError("unknown phase '" + n + "'");
        }
        expect(')');
        return out;
    }
};

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"microstructure.kind", [](auto& c, auto& v) { c.kind = process_kind_from_string(trim(v)); }},
        {"microstructure.intensity",
         [](auto& c, auto& v) {
             c.intensity = to_double(v);
             if (!(c.intensity >= 0.0) || !std::isfinite(c.intensity))
                 throw ConfigError("intensity must be finite and >= 0");
         }},
        {"microstructure.radius",
         [](auto& c, auto& v) {
             c.radius = to_double(v);
             if (!(c.radius > 0.0)) throw ConfigError("radius must be positive");
         }},
        {"microstructure.candidate_intensity", [](auto& c, auto& v) { c.candidate_intensity = to_double(v); }},
        {"microstructure.margin", [](auto& c, auto& v) { c.margin = to_double(v); }},
        {"microstructure.spacing",
         [](auto& c, auto& v) {
             c.spacing = to_double(v);
             if (!(c.spacing > 0.0)) throw ConfigError("spacing must be positive");
         }},
        {"microstructure.offset", [](auto& c, auto& v) { c.offset = to_double(v); }},
        {"integrand.matrix_phase", [](auto& c, auto& v) { c.matrix_phase = parse_phase(v); }},
        {"integrand.inclusion_phase", [](auto& c, auto& v) { c.inclusion_phase = parse_phase(v); }},
        {"integrand.p",
         [](auto& c, auto& v) {
             c.p = to_double(v);
             if (!(c.p > 1.0)) throw ConfigError("p > 1 required");
         }},
        {"integrand.growth_C",
         [](auto& c, auto& v) {
             c.growth_C = to_double(v);
             if (!(c.growth_C > 0.0)) throw ConfigError("growth_C must be positive");
         }},
        {"integrand.gamma",
         [](auto& c, auto& v) {
             c.gamma = to_double(v);
             if (!(c.gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
         }},
        {"integrand.cap",
         [](auto& c, auto& v) {
             c.cap = to_double(v);
             if (!(c.cap > 0.0)) throw ConfigError("cap must be positive");
         }},
        {"integrand.nonconvex_kind",
         [](auto& c, auto& v) {
             const std::string k = trim(v);
             if (k != "none" && k != "oscillatory" && k != "det_well")
                 throw ConfigError("nonconvex_kind must be none, oscillatory or det_well");
             c.nonconvex_kind = k;
         }},
        {"integrand.xi",
         [](auto& c, auto& v) {
             const auto ms = parse_matrices(v);
             if (ms.size() != 1) throw ConfigError("xi must be a single matrix");
             c.xi = ms[0];
         }},
        {"integrand.truncation",
         [](auto& c, auto& v) {
             const std::string k = trim(v);
             if (k == "constraint_yosida")
                 c.truncation = TruncationScheme::constraint_yosida;
             else if (k == "full_yosida")
                 c.truncation = TruncationScheme::full_yosida;
             else
                 throw ConfigError("truncation must be constraint_yosida or full_yosida");
         }},
        {"grid.cells_per_unit",
         [](auto& c, auto& v) {
             c.cells_per_unit = to_double(v);
             if (!(c.cells_per_unit > 0.0)) throw ConfigError("cells_per_unit must be positive");
         }},
        {"solver.tol_e",
         [](auto& c, auto& v) {
             c.tol_e = to_double(v);
             if (!(c.tol_e > 0.0)) throw ConfigError("tol_e must be positive");
         }},
        {"solver.tol_g",
         [](auto& c, auto& v) {
             c.tol_g = to_double(v);
             if (!(c.tol_g > 0.0)) throw ConfigError("tol_g must be positive");
         }},
        {"solver.max_iter",
         [](auto& c, auto& v) {
             const long long n = to_integer(v);
             if (n < 1 || n > 100000000) throw ConfigError("max_iter must be a positive integer");
             c.max_iter = static_cast<int>(n);
         }},
        {"solver.restarts",
         [](auto& c, auto& v) {
             const long long n = to_integer(v);
             if (n < 0 || n > 100000) throw ConfigError("restarts must be >= 0");
             c.restarts = static_cast<int>(n);
         }},
        {"solver.k_schedule",
         [](auto& c, auto& v) {
             c.k_schedule = to_list(v);
             for (std::size_t i = 0; i < c.k_schedule.size(); ++i)
                 if (!(c.k_schedule[i] > 0.0) || (i && !(c.k_schedule[i] > c.k_schedule[i - 1])))
                     throw ConfigError("k_schedule must be positive and strictly increasing");
         }},
        {"solver.t_schedule",
         [](auto& c, auto& v) {
             c.t_schedule = to_list(v);
             if (c.t_schedule.empty()) throw ConfigError("t_schedule must not be empty");
             for (double t : c.t_schedule)
                 if (!(t > 0.0) || t > 1.0) throw ConfigError("t values must lie in (0, 1]");
         }},
        {"solver.stab_tol",
         [](auto& c, auto& v) {
             c.stab_tol = to_double(v);
             if (!(c.stab_tol > 0.0)) throw ConfigError("stab_tol must be positive");
         }},
        {"run.formula",
         [](auto& c, auto& v) {
             c.formulas.clear();
             for (const auto& tok : split_any(v, " ,\t")) c.formulas.push_back(formula_from_string(tok));
             if (c.formulas.empty()) throw ConfigError("formula list is empty");
         }},
        {"run.lambdas", [](auto& c, auto& v) { c.lambdas = parse_matrices(v); }},
        {"run.R_list",
         [](auto& c, auto& v) {
             c.R_list = to_list(v);
             if (c.R_list.empty()) throw ConfigError("R_list must not be empty");
             for (std::size_t i = 0; i < c.R_list.size(); ++i)
                 if (!(c.R_list[i] > 0.0) || (i && !(c.R_list[i] > c.R_list[i - 1])))
                     throw ConfigError("R_list must be positive and increasing");
         }},
        {"run.realizations",
         [](auto& c, auto& v) {
             const long long n = to_integer(v);
             if (n < 1 || n > 100000000) throw ConfigError("realizations must be >= 1");
             c.realizations = static_cast<int>(n);
         }},
        {"run.theta",
         [](auto& c, auto& v) {
             c.theta = to_double(v);
             if (!(c.theta > 0.0)) throw ConfigError("theta must be positive");
         }},
        {"run.master_seed", [](auto& c, auto& v) { c.master_seed = to_u64(v); }},
        {"run.out_path", [](auto& c, auto& v) { c.out_path = trim(v); }},
        {"run.corrector_bc", [](auto& c, auto& v) { c.corrector_bc = corrector_bc_from_string(trim(v)); }},
        {"run.R_outer", [](auto& c, auto& v) { c.R_outer = to_double(v); }},
        {"run.record_timing", [](auto& c, auto& v) { c.record_timing = to_bool(v); }},
        {"run.mesh_margin", [](auto& c, auto& v) { c.mesh_margin = to_double(v); }},
    };
    return table;
}

}  // namespace

int ExperimentConfig::dim() const { return lambdas.empty() ? 0 : static_cast<int>(lambdas.front().cols()); }
int ExperimentConfig::m() const { return lambdas.empty() ? 0 : static_cast<int>(lambdas.front().rows()); }

IntegrandSpec ExperimentConfig::integrand() const {
    IntegrandSpec s;
    s.matrix_phase = matrix_phase;
    s.inclusion_phase = inclusion_phase;
    s.p = p;
    s.m = m();
    s.growth_C = growth_C;
    if (nonconvex_kind != "none") {
        NonconvexSpec nc;
        nc.gamma = gamma;
        nc.cap = cap;
        nc.kind = nonconvex_kind == "det_well" ? NonconvexKind::det_well : NonconvexKind::oscillatory;
        nc.xi = xi.size() ? xi : Mat(Mat::Ones(m(), dim()));
        s.nonconvex = nc;
    }
    return s;
}

SolverOptions ExperimentConfig::solver_options() const {
    SolverOptions o;
    o.tol_e = tol_e;
    o.tol_g = tol_g;
    o.max_iter = max_iter;
    return o;
}

SweepOptions ExperimentConfig::sweep_options() const {
    SweepOptions s;
    s.k_schedule = k_schedule;
    s.stab_tol = stab_tol;
    s.scheme = truncation;
    return s;
}

CellProblem ExperimentConfig::problem(Formula f, const Mat& lambda, double R, double t) const {
    CellProblem cp;
    cp.formula = f;
    cp.lambda = lambda;
    cp.dim = static_cast<int>(lambda.cols());
    cp.R = R;
    cp.cells_per_unit = cells_per_unit;
    cp.sweep = sweep_options();
    cp.t = t;
    cp.theta = theta;
    cp.micro.kind = kind;
    cp.micro.params.intensity = intensity;
    cp.micro.params.radius = radius;
    cp.micro.params.candidate_intensity = candidate_intensity;
    cp.micro.params.margin = margin;
    cp.micro.params.spacing = spacing;
    cp.micro.params.offset = offset;
    cp.spec = integrand();
    cp.solver = solver_options();
    cp.restarts = restarts;
    cp.master_seed = master_seed;
    return cp;
}

std::string to_text(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "microstructure.kind = " << to_string(c.kind) << '\n'
       << "microstructure.intensity = " << fmt(c.intensity) << '\n'
       << "microstructure.radius = " << fmt(c.radius) << '\n'
       << "microstructure.candidate_intensity = " << fmt(c.candidate_intensity) << '\n'
       << "microstructure.margin = " << fmt(c.margin) << '\n'
       << "microstructure.spacing = " << fmt(c.spacing) << '\n'
       << "microstructure.offset = " << fmt(c.offset) << '\n'
       << "integrand.matrix_phase = " << c.matrix_phase.describe() << '\n'
       << "integrand.inclusion_phase = " << c.inclusion_phase.describe() << '\n'
       << "integrand.p = " << fmt(c.p) << '\n'
       << "integrand.growth_C = " << fmt(c.growth_C) << '\n'
       << "integrand.gamma = " << fmt(c.gamma) << '\n'
       << "integrand.cap = " << fmt(c.cap) << '\n'
       << "integrand.nonconvex_kind = " << c.nonconvex_kind << '\n';
    if (c.xi.size()) os << "integrand.xi = " << fmt_matrix(c.xi) << '\n';
    os << "integrand.truncation = " << to_string(c.truncation) << '\n'
       << "grid.cells_per_unit = " << fmt(c.cells_per_unit) << '\n'
       << "solver.tol_e = " << fmt(c.tol_e) << '\n'
       << "solver.tol_g = " << fmt(c.tol_g) << '\n'
       << "solver.max_iter = " << c.max_iter << '\n'
       << "solver.restarts = " << c.restarts << '\n'
       << "solver.k_schedule = " << fmt_list(c.k_schedule) << '\n'
       << "solver.t_schedule = " << fmt_list(c.t_schedule) << '\n'
       << "solver.stab_tol = " << fmt(c.stab_tol) << '\n';
    os << "run.formula = ";
    for (std::size_t i = 0; i < c.formulas.size(); ++i) os << (i ? ", " : "") << to_string(c.formulas[i]);
    os << '\n' << "run.lambdas = ";
    for (std::size_t i = 0; i < c.lambdas.size(); ++i) os << (i ? " | " : "") << fmt_matrix(c.lambdas[i]);
    os << '\n'
       << "run.R_list = " << fmt_list(c.R_list) << '\n'
       << "run.realizations = " << c.realizations << '\n'
       << "run.theta = " << fmt(c.theta) << '\n'
       << "run.master_seed = " << c.master_seed << '\n'
       << "run.out_path = " << c.out_path << '\n'
       << "run.corrector_bc = " << to_string(c.corrector_bc) << '\n'
       << "run.R_outer = " << fmt(c.R_outer) << '\n'
       << "run.record_timing = " << (c.record_timing ? "true" : "false") << '\n'
       << "run.mesh_margin = " << fmt(c.mesh_margin) << '\n';
    return os.str();
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_text(a) == to_text(b); }

PhaseFunction parse_phase(const std::string& text) {
    PhaseParser p{text};
    PhaseFunction f = p.phase();
    p.skip();
    if (p.pos != text.size()) throw ConfigError("phase '" + text + "': trailing characters");
    return f;
}

std::vector<Mat> parse_matrices(const std::string& text) {
    std::vector<Mat> out;
    for (const auto& block : split_any(text, "|")) {
        std::vector<std::vector<double>> rows;
        for (const auto& row : split_any(block, ";")) {
            auto toks = split_any(row, " ,\t");
            if (toks.empty()) continue;
            std::vector<double> r;
            for (const auto& t : toks) r.push_back(to_double(t));
            rows.push_back(std::move(r));
        }
        if (rows.empty()) continue;
        const std::size_t cols = rows.front().size();
        if (rows.size() > 3 || cols > 3) throw ConfigError("matrices are at most 3 x 3");
        Mat M(static_cast<int>(rows.size()), static_cast<int>(cols));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) throw ConfigError("matrix rows differ in length");
            for (std::size_t j = 0; j < cols; ++j) M(i, j) = rows[i][j];
        }
        out.push_back(M);
    }
    if (out.empty()) throw ConfigError("no matrix given");
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::map<std::string, int> seen;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (auto [pos, fresh] = seen.emplace(key, lineno); !fresh)
            throw ConfigError("duplicate key '" + key + "' on lines " + std::to_string(pos->second) + " and " +
                              std::to_string(lineno));
        try {
            it->second(c, value);
        } catch (const ParameterError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "': " + e.what());
        }
    }
    if (c.lambdas.empty()) throw ConfigError("run.lambdas missing");
    const int d = c.dim(), m = c.m();
    if (d < 1 || d > 3) throw ConfigError("run.lambdas: dimension must be 1, 2 or 3");
    if (m != 1 && m != d) throw ConfigError("run.lambdas: matrices must have 1 or d rows");
    for (const auto& L : c.lambdas)
        if (L.rows() != m || L.cols() != d) throw ConfigError("run.lambdas: all matrices must have the same shape");
    if (c.xi.size() && (c.xi.rows() != m || c.xi.cols() != d)) throw ConfigError("integrand.xi must be m x d");
    try {
        c.integrand().validate(d);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    for (Formula f : c.formulas)
        if (f == Formula::nonconvex && c.nonconvex_kind == "none")
            throw ConfigError("run.formula nonconvex needs integrand.nonconvex_kind");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace infhom
