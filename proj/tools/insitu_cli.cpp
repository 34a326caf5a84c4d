// Command line front end: run, sweep, compare, report.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "insitu/runner.hpp"

namespace fs = std::filesystem;
using namespace insitu;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

fs::path output_dir(const std::string& explicit_dir, const std::string& name)
{
    if (!explicit_dir.empty()) {
        return explicit_dir;
    }
    if (const char* env = std::getenv("INSITU_OUT_DIR"); env && *env) {
        return fs::path(env) / name;
    }
    return fs::path("out") / name;
}

void print_summary(const RunArtifacts& art)
{
    if (art.run) {
        std::cout << format_es_report(art.report);
    }
    for (const auto& row : art.summary) {
        std::cout << row.quantity << " = " << row.value << '\n';
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"In-situ power measurement simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;

    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its artifacts");
    run_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
    run_cmd->add_option("--out", out, "Output directory (default: $INSITU_OUT_DIR/<name> or out/<name>)");
    run_cmd->add_option("--seed", seed, "Override the scenario seed")->each([&](const std::string&) { seed_given = true; });

    int seeds = 0;
    std::vector<double> currents;
    auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a scenario over seeds and report error percentiles");
    sweep_cmd->add_option("--seeds", seeds, "Number of seeds")->required()->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--currents-ma", currents, "Constant load currents to sweep, in mA")->delimiter(',');
    sweep_cmd->add_option("--out", out, "Output directory");
    sweep_cmd->add_option("scenario", scenario_path, "Scenario file")->required();

    std::string run_dir;
    auto* compare_cmd = app.add_subcommand("compare", "Compare a run directory with its oracle");
    compare_cmd->add_option("run_dir", run_dir, "Run directory")->required();

    std::string bins;
    auto* report_cmd = app.add_subcommand("report", "Rebin a finished run");
    report_cmd->add_option("--bins", bins, "Bin width, e.g. 2h, 30m, 600s")->required();
    report_cmd->add_option("run_dir", run_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*run_cmd) {
            const Scenario sc = load_scenario(scenario_path);
            const RunArtifacts art = execute(sc, seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
            const fs::path dir = output_dir(out, sc.name);
            write_artifacts(sc, art, dir);
            print_summary(art);
            std::cout << "artifacts: " << dir.string() << '\n';
        } else if (*sweep_cmd) {
            const Scenario sc = load_scenario(scenario_path);
            const SweepResult res = sweep(sc, seeds, currents);
            const fs::path dir = output_dir(out, sc.name + "_sweep");
            write_sweep(res, dir);
            std::cout << "runs = " << res.runs.size() << '\n'
                      << "median |rel error| = " << csv::num(res.abs_rel_error.p50) << '\n'
                      << "p95 |rel error| = " << csv::num(res.abs_rel_error.p95) << '\n';
            if (res.deviation_fit) {
                std::cout << "deviation fit slope [A/A] = " << csv::num(res.deviation_fit->slope) << '\n'
                          << "deviation fit intercept [A] = " << csv::num(res.deviation_fit->intercept) << '\n';
            }
            std::cout << "artifacts: " << dir.string() << '\n';
        } else if (*compare_cmd) {
            const auto rows = compare_oracle(run_dir);
            write_compare(rows, fs::path(run_dir) / "compare.csv");
            for (const auto& r : rows) {
                std::cout << r.quantity << ": measured " << csv::num(r.measured) << ", oracle " << csv::num(r.oracle)
                          << ", rel " << csv::num(r.rel_error) << '\n';
            }
        } else if (*report_cmd) {
            const csv::Table t = rebin(run_dir, parse_duration(bins));
            csv::write(fs::path(run_dir) / "report.csv", t);
            std::cout << csv::render(t);
        }
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
