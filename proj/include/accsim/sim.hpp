#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "controller.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "integrate.hpp"
#include "matops.hpp"
#include "plant.hpp"

namespace accsim {

enum class Integrator { rk4, euler };
enum class ControllerMode { baseline, adaptive };

// Initial conditions for one follower. Unset estimator fields default to
// exact truth; unset adaptation fields default per controller mode
// (baseline: epsilon = E_v and the matching constant margin; adaptive: all
// zero, the margin is learned from scratch).
struct FollowerInit {
    double d0 = 0.0;
    double v0 = 0.0;
    std::optional<double> d_hat0;
    std::optional<double> v1_hat0;
    std::optional<double> u1_hat0;
    std::optional<double> eps0;
    std::optional<double> vm0;
    std::optional<double> dc0;
};

struct SimConfig {
    double dt = 1e-3;
    double horizon = 10.0;
    Integrator integrator = Integrator::rk4;
    ControllerMode mode = ControllerMode::baseline;
    // Period of vehicle-to-vehicle updates; unset disables them. Events fire
    // at the first step boundary reaching each multiple of the period.
    std::optional<double> comm_period;
    int n_followers = 1;
    double lead_v0 = 0.0;
    // One entry per follower; a single entry is replicated across the chain.
    std::vector<FollowerInit> followers;
    // Every record_stride-th step lands in the trace (plus the final step).
    int record_stride = 10;
    // Reference jerk for the disturbance-shifted Lyapunov column V2.
    double u_j_ref = 0.0;
    // Optional zero-mean Gaussian noise on the measured gap, held constant
    // within each step. Off by default; the truth trace is never noised.
    double noise_stddev = 0.0;
    std::uint64_t noise_seed = 0;
};

struct FollowerRecord {
    double d = 0.0, v = 0.0, u = 0.0;
    double d_hat = 0.0, v1_hat = 0.0, u1_hat = 0.0;
    double d_tilde = 0.0, v1_tilde = 0.0, u1_tilde = 0.0;
    double h = 0.0, h_hat = 0.0;
    double epsilon = 0.0, v_m = 0.0, d_c = 0.0;
    double V1 = 0.0, V2 = 0.0;
};

struct TraceRecord {
    double t = 0.0;
    double lead_v1 = 0.0, lead_u1 = 0.0, lead_uj = 0.0;
    std::vector<FollowerRecord> followers;
};

using Trace = std::vector<TraceRecord>;

namespace detail {

// Flat state layout: y[0] = lead velocity, then 8 slots per follower.
constexpr int slots_per_follower = 8;
enum Slot { s_d = 0, s_v, s_dhat, s_v1hat, s_u1hat, s_eps, s_vm, s_dc };

inline std::size_t base_of(int follower) {
    return 1 + static_cast<std::size_t>(slots_per_follower) * follower;
}

} // namespace detail

inline void validate_config(const SimConfig& cfg, const LeadProfile& profile) {
    if (!(cfg.dt > 0.0)) throw config_error("dt must be positive");
    if (!(cfg.horizon >= cfg.dt)) throw config_error("horizon must cover at least one step");
    const double steps = cfg.horizon / cfg.dt;
    if (std::abs(steps - std::llround(steps)) > 1e-6)
        throw config_error("horizon must be an integer number of steps");
    if (cfg.comm_period && !(*cfg.comm_period >= cfg.dt))
        throw config_error("communication period must be at least one step");
    if (cfg.n_followers < 1) throw config_error("need at least one follower");
    if (cfg.followers.empty())
        throw config_error("follower initial conditions are required");
    if (cfg.followers.size() != 1 &&
        cfg.followers.size() != static_cast<std::size_t>(cfg.n_followers))
        throw config_error("follower initial conditions must be one entry or one per follower");
    if (cfg.record_stride < 1) throw config_error("record stride must be positive");
    if (!(cfg.noise_stddev >= 0.0)) throw config_error("noise level must be nonnegative");
    if (profile.duration() + 1e-9 < cfg.horizon)
        throw config_error("lead profile does not cover the horizon");
}

// Warnings that do not stop a run: bounds configured below what the
// worst-case jerk can induce at steady state.
inline void feasibility_warnings(const ControllerParams& p, const EstimatorGains& g,
                                 std::vector<std::string>* warnings) {
    if (!warnings) return;
    const ErrorBounds b = min_error_bounds(p.U_min, g);
    if (p.E_v < b.E_v_min - 1e-12)
        warnings->push_back("E_v below the stationary error induced by the worst-case jerk (" +
                            std::to_string(b.E_v_min) + "); steady conditions may violate it");
    if (p.E_u < b.E_u_min - 1e-12)
        warnings->push_back("E_u below the stationary error induced by the worst-case jerk (" +
                            std::to_string(b.E_u_min) + "); steady conditions may violate it");
}

namespace detail {

struct Engine {
    const SimConfig& cfg;
    const LeadProfile& profile;
    const EstimatorGains& gains;
    const ControllerParams& params;
    Matrix3 P;
    ErrorState e_star;
    double dc_const;
    std::vector<double> gap_noise; // per-follower offset, held per step

    Engine(const SimConfig& c, const LeadProfile& pr, const EstimatorGains& g,
           const ControllerParams& p)
        : cfg(c), profile(pr), gains(g), params(p) {
        const auto [A, B] = error_matrix(gains);
        (void)B;
        P = solve_continuous_lyapunov(A, Matrix3::identity());
        e_star = equilibrium_error(gains, cfg.u_j_ref);
        dc_const = conservative_distance_const(params.E_v, gains.g1);
        gap_noise.assign(cfg.n_followers, 0.0);
    }

    const FollowerInit& init_of(int i) const {
        return cfg.followers.size() == 1 ? cfg.followers[0]
                                         : cfg.followers[static_cast<std::size_t>(i)];
    }

    double control_of(const std::vector<double>& y, int i, double noise) const {
        const std::size_t b = base_of(i);
        const double h_meas = safety_h(y[b + s_d] + noise, y[b + s_v], params);
        if (cfg.mode == ControllerMode::adaptive)
            return adaptive_control(y[b + s_v1hat], y[b + s_v], h_meas, y[b + s_eps], params);
        return baseline_control(y[b + s_v1hat], y[b + s_v], h_meas, params);
    }

    void derivative(double t, const std::vector<double>& y, std::vector<double>& dy) const {
        const auto lead = profile.at(t);
        dy[0] = lead.u1;
        for (int i = 0; i < cfg.n_followers; ++i) {
            const std::size_t b = base_of(i);
            const double pred_v = (i == 0) ? y[0] : y[base_of(i - 1) + s_v];
            const double u = control_of(y, i, gap_noise[static_cast<std::size_t>(i)]);

            dy[b + s_d] = pred_v - y[b + s_v];
            dy[b + s_v] = u;

            const double d_meas = y[b + s_d] + gap_noise[static_cast<std::size_t>(i)];
            const EstimatorState est{y[b + s_dhat], y[b + s_v1hat], y[b + s_u1hat]};
            const EstimatorState est_dot = estimator_derivative(est, d_meas, y[b + s_v], gains);
            dy[b + s_dhat] = est_dot.d_hat;
            dy[b + s_v1hat] = est_dot.v1_hat;
            dy[b + s_u1hat] = est_dot.u1_hat;

            if (cfg.mode == ControllerMode::adaptive) {
                const double d_tilde = y[b + s_dhat] - d_meas;
                const AdaptiveState ad{y[b + s_eps], y[b + s_vm], y[b + s_dc]};
                dy[b + s_eps] = epsilon_derivative(ad, d_tilde, params, gains).epsilon_dot;
                dy[b + s_vm] = vm_derivative(d_tilde, gains, params.E_u);
                dy[b + s_dc] = dc_derivative(ad.epsilon, ad.d_c, gains.g1);
            } else {
                // Constant-margin mode: epsilon and d_c are pinned.
                dy[b + s_eps] = 0.0;
                dy[b + s_vm] = vm_derivative(y[b + s_dhat] - d_meas, gains, params.E_u);
                dy[b + s_dc] = 0.0;
            }
        }
    }

    std::vector<double> initial_state() const {
        std::vector<double> y(1 + slots_per_follower * static_cast<std::size_t>(cfg.n_followers));
        y[0] = cfg.lead_v0;
        const double lead_u1 = profile.at(0.0).u1;
        for (int i = 0; i < cfg.n_followers; ++i) {
            const FollowerInit& fi = init_of(i);
            const std::size_t b = base_of(i);
            const double pred_v = (i == 0) ? cfg.lead_v0 : y[base_of(i - 1) + s_v];
            y[b + s_d] = fi.d0;
            y[b + s_v] = fi.v0;
            y[b + s_dhat] = fi.d_hat0.value_or(fi.d0);
            y[b + s_v1hat] = fi.v1_hat0.value_or(pred_v);
            // Predecessor truth acceleration: profile for the first link,
            // the predecessor's just-initialized control for the rest.
            const double pred_u = (i == 0) ? lead_u1 : control_of(y, i - 1, 0.0);
            y[b + s_u1hat] = fi.u1_hat0.value_or(pred_u);
            if (cfg.mode == ControllerMode::adaptive) {
                y[b + s_eps] = fi.eps0.value_or(0.0);
                y[b + s_vm] = fi.vm0.value_or(0.0);
                y[b + s_dc] = fi.dc0.value_or(0.0);
            } else {
                y[b + s_eps] = fi.eps0.value_or(params.E_v);
                y[b + s_vm] = fi.vm0.value_or(0.0);
                y[b + s_dc] = fi.dc0.value_or(dc_const);
            }
        }
        return y;
    }

    // Vehicle-to-vehicle update: re-seed every observer from truth, restart
    // the adaptation from zero. Processed front to back so each follower
    // sees its predecessor's post-update control as the true acceleration.
    void apply_comm_reset(std::vector<double>& y, double t) const {
        for (int i = 0; i < cfg.n_followers; ++i) {
            const std::size_t b = base_of(i);
            const double pred_v = (i == 0) ? y[0] : y[base_of(i - 1) + s_v];
            const double pred_u = (i == 0) ? profile.at(t).u1 : control_of(y, i - 1, 0.0);
            const PairState truth{y[b + s_d], pred_v, y[b + s_v], pred_u};
            const EstimatorState est = communication_reset(truth);
            y[b + s_dhat] = est.d_hat;
            y[b + s_v1hat] = est.v1_hat;
            y[b + s_u1hat] = est.u1_hat;
            if (cfg.mode == ControllerMode::adaptive) {
                y[b + s_eps] = 0.0;
                y[b + s_vm] = 0.0;
            }
        }
    }

    // Adaptation clamp, applied between steps: once the envelopes meet,
    // epsilon snaps to its upper bound and stays there.
    void apply_clamp(std::vector<double>& y) const {
        if (cfg.mode != ControllerMode::adaptive) return;
        for (int i = 0; i < cfg.n_followers; ++i) {
            const std::size_t b = base_of(i);
            const AdaptiveState ad{y[b + s_eps], y[b + s_vm], y[b + s_dc]};
            const double d_tilde = y[b + s_dhat] - y[b + s_d];
            if (epsilon_derivative(ad, d_tilde, params, gains).clamp)
                y[b + s_eps] = params.E_v;
        }
    }

    TraceRecord record(double t, const std::vector<double>& y) const {
        TraceRecord r;
        r.t = t;
        const auto lead = profile.at(t);
        r.lead_v1 = y[0];
        r.lead_u1 = lead.u1;
        r.lead_uj = lead.u_j;
        r.followers.resize(static_cast<std::size_t>(cfg.n_followers));
        double pred_u = lead.u1;
        for (int i = 0; i < cfg.n_followers; ++i) {
            const std::size_t b = base_of(i);
            FollowerRecord& f = r.followers[static_cast<std::size_t>(i)];
            f.d = y[b + s_d];
            f.v = y[b + s_v];
            f.u = control_of(y, i, gap_noise[static_cast<std::size_t>(i)]);
            f.d_hat = y[b + s_dhat];
            f.v1_hat = y[b + s_v1hat];
            f.u1_hat = y[b + s_u1hat];
            const double pred_v = (i == 0) ? y[0] : y[base_of(i - 1) + s_v];
            f.d_tilde = f.d_hat - f.d;
            f.v1_tilde = f.v1_hat - pred_v;
            f.u1_tilde = f.u1_hat - pred_u;
            f.h = safety_h(f.d, f.v, params);
            f.h_hat = h_hat(f.d_hat, f.v, params);
            f.epsilon = y[b + s_eps];
            f.v_m = y[b + s_vm];
            f.d_c = y[b + s_dc];
            const Vec3 e{f.d_tilde, f.v1_tilde, f.u1_tilde};
            const double dev = f.h_hat - f.d_c;
            f.V1 = 0.5 * dev * dev + quad_form(P, e);
            const Vec3 xi{e[0] - e_star.d_tilde, e[1] - e_star.v1_tilde, e[2] - e_star.u1_tilde};
            f.V2 = 0.5 * dev * dev + quad_form(P, xi);
            pred_u = f.u;
        }
        return r;
    }
};

} // namespace detail

// Run the closed loop: lead program, per-follower observer, controller and
// (in adaptive mode) adaptation laws, fixed-step integration. Events
// (vehicle-to-vehicle updates, the adaptation clamp) land on step
// boundaries; records are taken after events so a record at an update time
// shows the post-update state. Identical inputs give bit-identical traces.
inline Trace run_scenario(const SimConfig& cfg, const LeadProfile& profile,
                          const EstimatorGains& gains, const ControllerParams& params,
                          std::vector<std::string>* warnings = nullptr) {
    validate_config(cfg, profile);
    feasibility_warnings(params, gains, warnings);

    detail::Engine eng(cfg, profile, gains, params);
    std::vector<double> y = eng.initial_state();

    const long long steps = std::llround(cfg.horizon / cfg.dt);
    Trace trace;
    trace.reserve(static_cast<std::size_t>(steps / cfg.record_stride) + 2);

    std::mt19937_64 rng(cfg.noise_seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_stddev);

    auto deriv = [&eng](double t, const std::vector<double>& s, std::vector<double>& ds) {
        eng.derivative(t, s, ds);
    };

    long long next_comm = 1;
    for (long long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;

        if (cfg.comm_period && t >= static_cast<double>(next_comm) * *cfg.comm_period - 1e-9) {
            eng.apply_comm_reset(y, t);
            ++next_comm;
        }
        if (k % cfg.record_stride == 0 || k == steps)
            trace.push_back(eng.record(t, y));
        if (k == steps) break;

        if (cfg.noise_stddev > 0.0)
            for (double& n : eng.gap_noise) n = noise(rng);

        y = (cfg.integrator == Integrator::rk4) ? rk4_step(deriv, y, t, cfg.dt)
                                                : euler_step(deriv, y, t, cfg.dt);
        detail::check_finite(y, t + cfg.dt, "state");
        eng.apply_clamp(y);
    }
    return trace;
}

// Platoon entry point; a chain of length one reduces exactly to
// run_scenario.
inline Trace run_platoon(const SimConfig& cfg, const LeadProfile& profile,
                         const EstimatorGains& gains, const ControllerParams& params,
                         std::vector<std::string>* warnings = nullptr) {
    return run_scenario(cfg, profile, gains, params, warnings);
}

} // namespace accsim
