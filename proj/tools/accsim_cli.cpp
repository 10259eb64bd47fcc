// Command line front end: simulate | platoon | ccc-compare | certify.
// Exit codes: 0 ok, 1 config/io/numeric failure, 2 certification failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "accsim/app.hpp"

namespace {

void add_common(CLI::App* cmd, accsim::RunOptions& opt, bool scenario_required) {
    auto* s = cmd->add_option("-s,--scenario", opt.scenario,
                              "Scenario: preset:<name> or a JSON file path");
    if (scenario_required) s->required();
    cmd->add_option("-o,--out", opt.out_dir, "Output directory for trace.csv / summary.json")
        ->capture_default_str();
    cmd->add_option_function<double>(
        "--dt", [&opt](double v) { opt.dt = v; }, "Override integration step [s]");
    cmd->add_option_function<double>(
        "--horizon", [&opt](double v) { opt.horizon = v; }, "Override horizon [s]");
    cmd->add_option_function<int>(
        "--followers", [&opt](int v) { opt.n_followers = v; }, "Override follower count");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&opt](std::uint64_t v) { opt.seed = v; }, "Override noise seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulation of an estimator-based safe cruise controller"};
    app.require_subcommand(1);

    accsim::RunOptions sim_opt, platoon_opt, ccc_opt, cert_opt;

    CLI::App* sim = app.add_subcommand("simulate", "Run one scenario and write its artifacts");
    add_common(sim, sim_opt, true);

    CLI::App* platoon = app.add_subcommand("platoon", "Run a follower chain scenario");
    add_common(platoon, platoon_opt, true);

    CLI::App* ccc = app.add_subcommand(
        "ccc-compare", "Compare adaptive and constant margins under periodic updates");
    add_common(ccc, ccc_opt, false);

    CLI::App* cert =
        app.add_subcommand("certify", "Run a scenario and check every applicable certificate");
    add_common(cert, cert_opt, true);

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return accsim::run_simulate(sim_opt, std::cout, std::cerr);
    if (platoon->parsed()) return accsim::run_platoon(platoon_opt, std::cout, std::cerr);
    if (ccc->parsed()) return accsim::run_ccc_compare(ccc_opt, std::cout, std::cerr);
    if (cert->parsed()) return accsim::run_certify(cert_opt, std::cout, std::cerr);
    return accsim::exit_failure;
}
