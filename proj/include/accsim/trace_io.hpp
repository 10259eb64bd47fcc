#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

#include <json.hpp>

#include "analysis.hpp"
#include "errors.hpp"
#include "scenario.hpp"
#include "sim.hpp"

namespace accsim {

// Column layout: time and lead channels, then one block per follower
// prefixed f<i>_. Full double precision so a written trace is as
// reproducible as the run that made it.
inline void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << std::setprecision(17);
    out << "t,lead_v1,lead_u1,lead_uj";
    const std::size_t nf = trace.empty() ? 0 : trace.front().followers.size();
    static constexpr const char* cols[] = {"d", "v", "u", "d_hat", "v1_hat", "u1_hat",
                                           "d_tilde", "v1_tilde", "u1_tilde", "h", "h_hat",
                                           "epsilon", "v_m", "d_c", "V1", "V2"};
    for (std::size_t i = 0; i < nf; ++i)
        for (const char* c : cols) out << ",f" << i << "_" << c;
    out << "\n";

    for (const TraceRecord& r : trace) {
        out << r.t << "," << r.lead_v1 << "," << r.lead_u1 << "," << r.lead_uj;
        for (const FollowerRecord& f : r.followers) {
            out << "," << f.d << "," << f.v << "," << f.u << "," << f.d_hat << "," << f.v1_hat
                << "," << f.u1_hat << "," << f.d_tilde << "," << f.v1_tilde << "," << f.u1_tilde
                << "," << f.h << "," << f.h_hat << "," << f.epsilon << "," << f.v_m << ","
                << f.d_c << "," << f.V1 << "," << f.V2;
        }
        out << "\n";
    }
}

inline void write_trace_csv(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw error("cannot open trace output file: " + path);
    write_trace_csv(out, trace);
    if (!out.good()) throw error("failed while writing trace: " + path);
}

inline nlohmann::json report_to_json(const StabilityReport& rep) {
    using nlohmann::json;
    json j;
    j["min_h"] = rep.safety.min_h;
    j["t_at_min_h"] = rep.safety.t_at_min;
    j["mean_h"] = rep.mean_h;
    j["bound_violations"] = rep.bound_violations;
    j["certificate_margin"] = rep.certificate_margin;
    j["adaptation_margin"] = rep.adaptation_margin;

    json ly;
    ly["checked"] = rep.lyapunov_checked;
    if (rep.lyapunov_checked) {
        ly["monotone"] = rep.lyapunov.monotone;
        ly["max_jump"] = rep.lyapunov.max_jump;
    }
    j["lyapunov"] = std::move(ly);

    if (!rep.string_gains.empty()) j["string_gains"] = rep.string_gains;

    json ss;
    ss["window_start"] = rep.steady.window_start;
    ss["followers"] = nlohmann::json::array();
    for (const FollowerSteady& fs : rep.steady.followers) {
        auto ch = [](const SteadyChannel& c) {
            return json{{"mean", c.mean}, {"max_dev", c.max_dev}};
        };
        ss["followers"].push_back(json{{"d_tilde", ch(fs.d_tilde)},
                                       {"v1_tilde", ch(fs.v1_tilde)},
                                       {"u1_tilde", ch(fs.u1_tilde)},
                                       {"h", ch(fs.h)},
                                       {"epsilon", ch(fs.epsilon)},
                                       {"d_c", ch(fs.d_c)}});
    }
    j["steady_state"] = std::move(ss);
    return j;
}

inline void write_summary_json(const std::string& path, const nlohmann::json& summary) {
    std::ofstream out(path);
    if (!out) throw error("cannot open summary output file: " + path);
    out << summary.dump(2) << "\n";
    if (!out.good()) throw error("failed while writing summary: " + path);
}

} // namespace accsim
