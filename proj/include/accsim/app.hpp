#pragma once

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "errors.hpp"
#include "scenario.hpp"
#include "sim.hpp"
#include "trace_io.hpp"

namespace accsim {

// Shared options of all subcommands. The scenario reference is either
// "preset:<name>" or a path to a JSON file; overrides apply on top.
struct RunOptions {
    std::string scenario;
    std::string out_dir = ".";
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<int> n_followers;
    std::optional<std::uint64_t> seed;
};

// Exit codes shared by the subcommands.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;       // config, io or numeric failure
inline constexpr int exit_cert_failed = 2;   // a certification check did not hold

inline Scenario resolve_scenario(const RunOptions& opt) {
    constexpr const char* prefix = "preset:";
    Scenario sc = opt.scenario.rfind(prefix, 0) == 0
                      ? scenario_preset(opt.scenario.substr(std::string(prefix).size()))
                      : load_scenario(opt.scenario);
    if (opt.dt) sc.sim.dt = *opt.dt;
    if (opt.horizon) sc.sim.horizon = *opt.horizon;
    if (opt.n_followers) {
        sc.sim.n_followers = *opt.n_followers;
        if (sc.sim.followers.size() > 1) sc.sim.followers.resize(1);
    }
    if (opt.seed) sc.sim.noise_seed = *opt.seed;
    if (opt.dt || opt.horizon || opt.n_followers)
        validate_config(sc.sim, sc.profile());
    return sc;
}

namespace detail {

inline void print_warnings(const Scenario& sc, std::ostream& err) {
    for (const std::string& w : sc.warnings) err << "warning: " << w << "\n";
}

inline void print_report(const Scenario& sc, const StabilityReport& rep, std::ostream& out) {
    out << std::setprecision(6);
    out << "scenario: " << sc.name << "\n";
    out << "  min h: " << rep.safety.min_h << " m at t=" << rep.safety.t_at_min << " s\n";
    out << "  mean h: " << rep.mean_h << " m\n";
    out << "  bound violations: " << rep.bound_violations << "\n";
    if (rep.lyapunov_checked)
        out << "  certificate decrease: " << (rep.lyapunov.monotone ? "monotone" : "NOT monotone")
            << " (max jump " << rep.lyapunov.max_jump << ")\n";
    if (!rep.string_gains.empty()) {
        out << "  string gains:";
        for (double g : rep.string_gains) out << " " << g;
        out << "\n";
    }
    for (std::size_t i = 0; i < rep.steady.followers.size(); ++i) {
        const FollowerSteady& fs = rep.steady.followers[i];
        out << "  follower " << i << " steady: h=" << fs.h.mean
            << " d_tilde=" << fs.d_tilde.mean << " v1_tilde=" << fs.v1_tilde.mean
            << " u1_tilde=" << fs.u1_tilde.mean << "\n";
    }
}

inline nlohmann::json summary_of(const Scenario& sc, const StabilityReport& rep) {
    nlohmann::json j;
    j["scenario"] = scenario_to_json(sc);
    j["report"] = report_to_json(rep);
    j["warnings"] = sc.warnings;
    return j;
}

} // namespace detail

// Run one scenario, write trace.csv and summary.json into out_dir.
inline int run_simulate(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        Scenario sc = resolve_scenario(opt);
        detail::print_warnings(sc, err);
        const LeadProfile profile = sc.profile();
        const Trace trace = run_scenario(sc.sim, profile, sc.gains, sc.controller);
        const StabilityReport rep = analyze(trace, sc.gains, sc.controller, sc.analysis);

        std::filesystem::create_directories(opt.out_dir);
        write_trace_csv(opt.out_dir + "/trace.csv", trace);
        write_summary_json(opt.out_dir + "/summary.json", detail::summary_of(sc, rep));
        detail::print_report(sc, rep, out);
        return exit_ok;
    } catch (const numeric_error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

// Platoon flavor of the same engine; chains of one are legal and identical
// to run_simulate.
inline int run_platoon(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    return run_simulate(opt, out, err);
}

// Run the scenario twice, adaptive margin versus constant margin, and
// report the headway cost of the fixed conservative bound.
inline int run_ccc_compare(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        RunOptions base = opt;
        if (base.scenario.empty()) base.scenario = "preset:ccc-2s";
        Scenario sc = resolve_scenario(base);
        if (!sc.sim.comm_period)
            throw config_error("ccc-compare needs a scenario with comm_period set");
        detail::print_warnings(sc, err);
        const LeadProfile profile = sc.profile();

        Scenario adaptive = sc;
        adaptive.sim.mode = ControllerMode::adaptive;
        Scenario constant = sc;
        constant.sim.mode = ControllerMode::baseline;
        // Mode-dependent defaults only apply when the scenario left them
        // unset; explicit follower entries are kept as-is for both runs.

        const Trace tr_a = run_scenario(adaptive.sim, profile, sc.gains, sc.controller);
        const Trace tr_c = run_scenario(constant.sim, profile, sc.gains, sc.controller);
        const StabilityReport rep_a = analyze(tr_a, sc.gains, sc.controller, sc.analysis);
        const StabilityReport rep_c = analyze(tr_c, sc.gains, sc.controller, sc.analysis);

        std::filesystem::create_directories(opt.out_dir);
        write_trace_csv(opt.out_dir + "/trace_adaptive.csv", tr_a);
        write_trace_csv(opt.out_dir + "/trace_constant.csv", tr_c);

        nlohmann::json j;
        j["scenario"] = scenario_to_json(sc);
        j["adaptive"] = report_to_json(rep_a);
        j["constant"] = report_to_json(rep_c);
        j["comparison"] = {{"mean_h_adaptive", rep_a.mean_h},
                           {"mean_h_constant", rep_c.mean_h},
                           {"headway_saved", rep_c.mean_h - rep_a.mean_h},
                           {"min_h_adaptive", rep_a.safety.min_h},
                           {"min_h_constant", rep_c.safety.min_h}};
        j["warnings"] = sc.warnings;
        write_summary_json(opt.out_dir + "/summary.json", j);

        out << std::setprecision(6);
        out << "margin      mean h [m]   min h [m]\n";
        out << "adaptive    " << std::setw(10) << rep_a.mean_h << "   " << std::setw(9)
            << rep_a.safety.min_h << "\n";
        out << "constant    " << std::setw(10) << rep_c.mean_h << "   " << std::setw(9)
            << rep_c.safety.min_h << "\n";
        out << "headway saved by adapting: " << rep_c.mean_h - rep_a.mean_h << " m\n";
        return exit_ok;
    } catch (const numeric_error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

// Run the scenario and hold it against every certificate that applies:
// constraint satisfaction, one-sided error bounds, certificate decrease,
// string gains, and the mode-specific invariants.
inline int run_certify(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        Scenario sc = resolve_scenario(opt);
        detail::print_warnings(sc, err);
        const LeadProfile profile = sc.profile();
        const Trace trace = run_scenario(sc.sim, profile, sc.gains, sc.controller);
        const StabilityReport rep = analyze(trace, sc.gains, sc.controller, sc.analysis);

        std::filesystem::create_directories(opt.out_dir);
        write_trace_csv(opt.out_dir + "/trace.csv", trace);
        write_summary_json(opt.out_dir + "/summary.json", detail::summary_of(sc, rep));

        bool all_ok = true;
        auto check = [&](const std::string& name, bool ok, double value) {
            out << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << std::setprecision(9) << value
                << ")\n";
            all_ok = all_ok && ok;
        };

        check("constraint h stays nonnegative", rep.safety.min_h >= -1e-6, rep.safety.min_h);
        check("one-sided error bounds hold", rep.bound_violations == 0,
              static_cast<double>(rep.bound_violations));
        if (rep.lyapunov_checked)
            check("certificate value decreases", rep.lyapunov.monotone, rep.lyapunov.max_jump);
        if (!rep.string_gains.empty()) {
            double worst = 0.0;
            for (double g : rep.string_gains) worst = std::max(worst, g);
            check("string gains below one", worst < 1.0, worst);
        }
        if (sc.sim.mode == ControllerMode::baseline)
            check("forward invariance certificate", rep.certificate_margin >= -1e-6,
                  rep.certificate_margin);
        else
            check("adaptation stays within its envelope", rep.adaptation_margin >= -1e-6,
                  rep.adaptation_margin);

        return all_ok ? exit_ok : exit_cert_failed;
    } catch (const numeric_error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace accsim
