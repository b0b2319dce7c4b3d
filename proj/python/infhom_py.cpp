// Python bindings: configs in, plain python values out.

#include "infhom/experiment.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <sstream>

namespace py = pybind11;
using namespace infhom;

namespace {

Mat to_mat(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.size() > 3 || rows.front().empty() || rows.front().size() > 3)
        throw ParameterError("matrix must be between 1x1 and 3x3");
    Mat M(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ParameterError("ragged matrix rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    }
    return M;
}

std::vector<std::vector<double>> from_mat(const Mat& M) {
    std::vector<std::vector<double>> out(M.rows(), std::vector<double>(M.cols()));
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) out[i][j] = M(i, j);
    return out;
}

py::dict sample_dict(const PointSample& s) {
    std::vector<std::vector<double>> pts;
    for (const auto& p : s.points) pts.emplace_back(p.begin(), p.begin() + s.box.dim);
    py::dict d;
    d["dim"] = s.box.dim;
    d["side"] = s.box.side;
    d["periodic"] = s.box.periodic;
    d["points"] = pts;
    d["radii"] = s.radii;
    return d;
}

py::dict estimate_dict(const HomogEstimate& e) {
    py::dict d;
    d["formula"] = to_string(e.formula);
    d["lambda"] = from_mat(e.lambda);
    d["R"] = e.R;
    d["t"] = e.t;
    d["mean"] = e.mean;
    d["stderr"] = e.std_error;
    d["N"] = e.N;
    d["diverged"] = e.diverged_count;
    d["infeasible"] = e.infeasible;
    std::vector<double> values;
    for (const auto& r : e.realizations) values.push_back(r.diverged ? std::numeric_limits<double>::infinity() : r.value);
    d["values"] = values;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Homogenized energy densities of random media with infinite-valued phases";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);

    m.def("canonical_config", [](const std::string& text) { return to_text(parse_config(text)); }, py::arg("text"),
          "Parse a config and return its canonical text.");

    m.def(
        "homogenize",
        [](const std::string& text, int threads, const std::string& out_dir) {
            const auto cfg = parse_config(text);
            ExperimentResult res;
            {
                py::gil_scoped_release nogil;
                res = run_experiment(cfg, RunOptions{threads, out_dir, text});
            }
            py::list out;
            for (const auto& e : res.estimates) out.append(estimate_dict(e));
            return out;
        },
        py::arg("text"), py::arg("threads") = 1, py::arg("out_dir") = "",
        "Run every configured case, write the CSV/report files and return the estimates.");

    m.def(
        "cell",
        [](const std::string& text, std::size_t index) {
            const auto cfg = parse_config(text);
            py::gil_scoped_release nogil;
            return run_cell(cfg, index);
        },
        py::arg("text"), py::arg("index") = 0, "Cell value of one realization.");

    m.def("sample", [](const std::string& text, std::size_t index) { return sample_dict(config_sample(parse_config(text), index)); },
          py::arg("text"), py::arg("index") = 0, "Point sample of one realization on Q_R.");

    m.def(
        "sample_poisson",
        [](double intensity, int dim, double side, std::uint64_t seed) {
            return sample_dict(sample_poisson(intensity, BoxSpec{dim, side, false}, seed, "microstructure"));
        },
        py::arg("intensity"), py::arg("dim"), py::arg("side"), py::arg("seed"));

    m.def(
        "sample_random_parking",
        [](double radius, int dim, double side, std::uint64_t seed, bool periodic) {
            return sample_dict(sample_random_parking(radius, BoxSpec{dim, side, periodic}, seed));
        },
        py::arg("radius"), py::arg("dim"), py::arg("side"), py::arg("seed"), py::arg("periodic") = false);

    m.def(
        "phase_value",
        [](const std::string& phase, const std::vector<std::vector<double>>& F) {
            return parse_phase(phase).value(to_mat(F)).value_or(std::numeric_limits<double>::infinity());
        },
        py::arg("phase"), py::arg("F"), "Phase density at F (inf outside its domain).");

    m.def(
        "yosida",
        [](const std::string& phase, double k, double p, const std::vector<std::vector<double>>& F) {
            const auto r = yosida_transform(parse_phase(phase), k, p, to_mat(F));
            return py::make_tuple(r.value, from_mat(r.gradient));
        },
        py::arg("phase"), py::arg("k"), py::arg("p"), py::arg("F"), "Yosida transform value and gradient.");

    m.def(
        "laminate_vbar",
        [](const std::vector<std::string>& phases, const std::vector<double>& fractions, double lam, double p) {
            LaminateSpec ls;
            for (const auto& s : phases) ls.phases.push_back(parse_phase(s));
            ls.fractions = fractions;
            ls.p = p;
            return laminate_1d_vbar(ls, lam);
        },
        py::arg("phases"), py::arg("fractions"), py::arg("lam"), py::arg("p") = 2.0,
        "Homogenized density of a 1D laminate.");

    m.def(
        "self_check",
        [](int threads) {
            std::ostringstream os;
            bool ok;
            {
                py::gil_scoped_release nogil;
                ok = run_self_check(os, threads);
            }
            return py::make_tuple(ok, os.str());
        },
        py::arg("threads") = 2);
}
