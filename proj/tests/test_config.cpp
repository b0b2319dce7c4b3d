#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace infhom;
using namespace infhom::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("infhom_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

const char* kConstant =
    "microstructure.kind = poisson\n"
    "microstructure.intensity = 0.5\n"
    "run.formula = dirichlet_trunc, convexification\n"
    "run.lambdas = 1.2 1.6\n"
    "run.R_list = 4\n"
    "run.realizations = 2\n";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("required and invalid values") {
    CHECK(error_of("").find("run.lambdas missing") != std::string::npos);
    CHECK(error_of("run.lambdas = 1 0\nintegrand.p = 0.5\n").find("p > 1 required") != std::string::npos);
    const std::string dup = error_of("run.lambdas = 1 0\n# comment\nrun.R_list = 4\nrun.R_list = 8\n");
    CHECK(dup.find("duplicate key") != std::string::npos);
    CHECK(dup.find("3") != std::string::npos);
    CHECK(dup.find("4") != std::string::npos);
    CHECK(error_of("run.lambdas = 1 0\nrun.colour = red\n").find("line 2") != std::string::npos);
    CHECK(error_of("run.lambdas = 1 0\nrun.R_list = four\n").find("run.R_list") != std::string::npos);
    CHECK_FALSE(error_of("run.lambdas = 1 0\ngrid.cells_per_unit = -2\n").empty());
}

TEST_CASE("phases and matrices") {
    CHECK(parse_phase("quadratic(4)").describe() == PhaseFunction::isotropic_quadratic(4.0).describe());
    CHECK(parse_phase("ball(2, quadratic(4))").domain_radius() == 2.0);
    CHECK(parse_phase("barrier(1,1,2)").value(row({0.9})).value() == doctest::Approx(0.81 / 0.19));
    CHECK(parse_phase("zero").value(row({5.0})).value() == 0.0);
    CHECK_THROWS_AS(parse_phase("ball(2)"), ParameterError);
    const auto ms = parse_matrices("1 0 | 0.5, 0.25 | 1 2; 3 4");
    REQUIRE(ms.size() == 3);
    CHECK(ms[1](0, 1) == 0.25);
    CHECK(ms[2].rows() == 2);
    CHECK(ms[2](1, 0) == 3.0);
}

TEST_CASE("canonical text round trip") {
    const auto c = parse_config(kConstant);
    CHECK(c.dim() == 2);
    CHECK(c.m() == 1);
    CHECK(c.formulas.size() == 2);
    const auto again = parse_config(to_text(c));
    CHECK(again == c);
    CHECK(to_text(again) == to_text(c));
}

TEST_CASE("constant-density experiment") {
    auto c = parse_config(kConstant);
    const auto dir = scratch("const");
    RunOptions ro{1, dir.string(), kConstant};
    const auto res = run_experiment(c, ro);
    for (const auto& e : res.estimates) {
        CHECK(e.mean == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(e.std_error == 0.0);
    }
    const std::string summary = slurp(dir / "summary.csv");
    CHECK(summary.rfind("formula,lambda_11,lambda_12,R,mean,stderr,N,diverged", 0) == 0);
    const std::string solves = slurp(dir / "solves.csv");
    CHECK(solves.rfind("formula,lambda_11,lambda_12,R,n,k,t,eta,seed_index,value,converged,iterations,seconds", 0) == 0);
    CHECK(slurp(dir / "report.txt").find("input_sha1 = " + git_blob_sha1(kConstant)) != std::string::npos);

    SUBCASE("same seed gives byte-identical files") {
        const auto dir2 = scratch("const2");
        run_experiment(c, RunOptions{2, dir2.string(), kConstant});
        CHECK(slurp(dir2 / "solves.csv") == solves);
        CHECK(slurp(dir2 / "summary.csv") == summary);
    }
    SUBCASE("another seed keeps the deterministic means") {
        c.master_seed = 99;
        const auto dir3 = scratch("const3");
        const auto r3 = run_experiment(c, RunOptions{1, dir3.string(), kConstant});
        for (const auto& e : r3.estimates) CHECK(e.mean == doctest::Approx(4.0).epsilon(1e-12));
    }
    CHECK(run_cell(c) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("oracle rows") {
    const auto c = parse_config(
        "microstructure.kind = deterministic_periodic\nmicrostructure.spacing = 1\nmicrostructure.radius = 0.25\n"
        "integrand.inclusion_phase = quadratic(4)\nrun.formula = periodization\nrun.lambdas = 1\nrun.R_list = 2\n");
    const auto rows = oracle_values(c);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].source == "laminate");
    CHECK(rows[0].value == doctest::Approx(1.6).epsilon(1e-9));
}

TEST_CASE("formatting and hashing") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_real(INFINITY) == "inf");
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("self check suite passes") {
    std::ostringstream os;
    CHECK(run_self_check(os, 2));
    CHECK(os.str().find("FAIL") == std::string::npos);
}

}
