// infhom: sample / cell / homogenize / oracle / sweep / check

#include "infhom/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace infhom;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homogenized energy densities of random media with infinite-valued phases"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    std::size_t index = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "experiment config file");
        if (needs_config) opt->required();
        sub->add_option("--seed", seed, "override run.master_seed");
        sub->add_option("--out", out_dir, "output directory (default run.out_path)");
        sub->add_option("--threads", threads, "worker threads (results do not depend on it)")
            ->check(CLI::PositiveNumber);
    };
    auto* sample = app.add_subcommand("sample", "write the point sample of one realization");
    auto* cell = app.add_subcommand("cell", "solve one cell problem and print its value");
    auto* homog = app.add_subcommand("homogenize", "Monte Carlo estimate over all configured cases");
    auto* oracle = app.add_subcommand("oracle", "reference values that apply to the configuration");
    auto* sweep = app.add_subcommand("sweep", "R and t sweeps");
    auto* check = app.add_subcommand("check", "built-in invariant suite");
    for (auto* s : {sample, cell, homog, oracle, sweep}) add_common(s, true);
    add_common(check, false);
    for (auto* s : {sample, cell}) s->add_option("--index", index, "realization index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (check->parsed()) {
            return run_self_check(std::cout, threads) ? 0 : 1;
        }
        const std::string source = read_file(config_path);
        ExperimentConfig cfg = parse_config(source);
        if (!app.get_subcommands().front()->get_option("--seed")->empty()) cfg.master_seed = seed;
        RunOptions ro{threads, out_dir, source};

        if (sample->parsed()) {
            const PointSample s = config_sample(cfg, index);
            if (out_dir.empty()) {
                write_sample(std::cout, s);
            } else {
                std::filesystem::create_directories(out_dir);
                std::ofstream f(std::filesystem::path(out_dir) / "sample.txt");
                write_sample(f, s);
            }
        } else if (cell->parsed()) {
            std::cout << format_real(run_cell(cfg, index)) << '\n';
        } else if (homog->parsed()) {
            const auto res = run_experiment(cfg, ro);
            for (const auto& e : res.estimates)
                std::cout << to_string(e.formula) << " R=" << format_real(e.R) << " t=" << format_real(e.t)
                          << " mean=" << format_real(e.mean) << " stderr=" << format_real(e.std_error)
                          << " N=" << e.N << " diverged=" << e.diverged_count
                          << (e.infeasible ? " INFEASIBLE" : "") << '\n';
        } else if (oracle->parsed()) {
            const auto rows = run_oracle(cfg, ro);
            if (rows.empty()) std::cerr << "no oracle applies to this configuration\n";
            for (const auto& r : rows)
                std::cout << r.source << " R=" << format_real(r.R) << " value=" << format_real(r.value) << '\n';
        } else if (sweep->parsed()) {
            run_sweeps(cfg, ro);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
