#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "controller.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "matops.hpp"
#include "sim.hpp"

namespace accsim {

// Certificate value around the estimated constraint: deviation from the
// distance margin plus the weighted error energy.
inline double lyapunov_v1(double h_hat_val, double d_c, const ErrorState& e, const Matrix3& P) {
    if (!is_positive_definite(P))
        throw std::invalid_argument("lyapunov_v1: P must be positive definite");
    const double dev = h_hat_val - d_c;
    return 0.5 * dev * dev + quad_form(P, Vec3{e.d_tilde, e.v1_tilde, e.u1_tilde});
}

// Same certificate with the error shifted by the stationary error a constant
// reference jerk induces; reduces to lyapunov_v1 when u_j_ref is zero.
inline double lyapunov_v2(double h_hat_val, double d_c, const ErrorState& e, double u_j_ref,
                          const EstimatorGains& g, const Matrix3& P) {
    const ErrorState es = equilibrium_error(g, u_j_ref);
    const ErrorState xi{e.d_tilde - es.d_tilde, e.v1_tilde - es.v1_tilde,
                        e.u1_tilde - es.u1_tilde};
    return lyapunov_v1(h_hat_val, d_c, xi, P);
}

// Headway the loop settles at under a constant predecessor jerk:
// h* = -E_v/g1 - u_j/g3.
inline double equilibrium_headway(double E_v, double g1, double u_j, double g3) {
    if (!(g1 < 0.0)) throw std::invalid_argument("equilibrium_headway needs g1 < 0");
    if (g3 == 0.0) throw std::invalid_argument("equilibrium_headway needs g3 != 0");
    return -E_v / g1 - u_j / g3;
}

struct SafetyMargin {
    double min_h = 0.0;
    double t_at_min = 0.0;
};

// Worst constraint value across all followers and samples. Reports the raw
// minimum: a violation shows up as a negative number, never masked.
inline SafetyMargin safety_margin(const Trace& trace) {
    if (trace.empty()) throw analysis_error("safety margin of an empty trace");
    SafetyMargin m{std::numeric_limits<double>::infinity(), trace.front().t};
    for (const TraceRecord& r : trace)
        for (const FollowerRecord& f : r.followers)
            if (f.h < m.min_h) {
                m.min_h = f.h;
                m.t_at_min = r.t;
            }
    return m;
}

struct SteadyChannel {
    double mean = 0.0;
    double max_dev = 0.0;
};

struct FollowerSteady {
    SteadyChannel d_tilde, v1_tilde, u1_tilde, h, epsilon, d_c;
};

struct SteadyState {
    double window_start = 0.0;
    std::vector<FollowerSteady> followers;
};

// Mean and worst deviation over the trailing fraction of the horizon.
inline SteadyState steady_state(const Trace& trace, double tail_fraction) {
    if (!(tail_fraction > 0.0) || !(tail_fraction <= 0.5))
        throw std::invalid_argument("tail fraction must be in (0, 0.5]");
    if (trace.size() < 2) throw analysis_error("steady state of a near-empty trace");

    const double t0 = trace.front().t, t1 = trace.back().t;
    const double start = t1 - tail_fraction * (t1 - t0);

    SteadyState out;
    out.window_start = start;
    const std::size_t nf = trace.front().followers.size();
    out.followers.resize(nf);

    for (std::size_t i = 0; i < nf; ++i) {
        auto channel = [&](auto pick) {
            double sum = 0.0;
            int n = 0;
            for (const TraceRecord& r : trace)
                if (r.t >= start - 1e-12) {
                    sum += pick(r.followers[i]);
                    ++n;
                }
            SteadyChannel c;
            c.mean = sum / n;
            for (const TraceRecord& r : trace)
                if (r.t >= start - 1e-12)
                    c.max_dev = std::max(c.max_dev, std::abs(pick(r.followers[i]) - c.mean));
            return c;
        };
        FollowerSteady& fs = out.followers[i];
        fs.d_tilde = channel([](const FollowerRecord& f) { return f.d_tilde; });
        fs.v1_tilde = channel([](const FollowerRecord& f) { return f.v1_tilde; });
        fs.u1_tilde = channel([](const FollowerRecord& f) { return f.u1_tilde; });
        fs.h = channel([](const FollowerRecord& f) { return f.h; });
        fs.epsilon = channel([](const FollowerRecord& f) { return f.epsilon; });
        fs.d_c = channel([](const FollowerRecord& f) { return f.d_c; });
    }
    return out;
}

// Per-link amplification of the velocity oscillation: half peak-to-peak of
// each vehicle's velocity over a whole number of excitation periods at the
// settled end of the trace, ratioed link by link. Values below one mean the
// disturbance shrinks down the chain.
inline std::vector<double> string_stability_gain(const Trace& trace, double omega,
                                                 double settle_time = 0.0,
                                                 int min_periods = 5) {
    if (!(omega > 0.0)) throw std::invalid_argument("excitation frequency must be positive");
    if (trace.size() < 4) throw analysis_error("trace too short for a gain measurement");

    const double period = 2.0 * std::numbers::pi / omega;
    const double t_end = trace.back().t;
    const int n_periods = static_cast<int>(std::floor((t_end - settle_time) / period));
    if (n_periods < min_periods)
        throw analysis_error("trace covers fewer settled excitation periods than required");
    const double start = t_end - n_periods * period;

    const std::size_t nf = trace.front().followers.size();
    std::vector<double> amp(nf + 1);
    auto amplitude = [&](auto pick) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const TraceRecord& r : trace)
            if (r.t >= start - 1e-12) {
                lo = std::min(lo, pick(r));
                hi = std::max(hi, pick(r));
            }
        return (hi - lo) / 2.0;
    };
    amp[0] = amplitude([](const TraceRecord& r) { return r.lead_v1; });
    for (std::size_t i = 0; i < nf; ++i)
        amp[i + 1] = amplitude([i](const TraceRecord& r) { return r.followers[i].v; });

    std::vector<double> gains(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        if (amp[i] <= 0.0) throw analysis_error("no excitation reaches the measured link");
        gains[i] = amp[i + 1] / amp[i];
    }
    return gains;
}

// Count of samples where an estimation error exceeds its assumed one-sided
// bound. The bounds are one-sided by design: large negative errors are
// conservative, only positive excess is unsafe.
inline int bound_violation_count(const Trace& trace, double E_v, double E_u,
                                 double tol = 1e-6) {
    int n = 0;
    for (const TraceRecord& r : trace)
        for (const FollowerRecord& f : r.followers)
            if (f.v1_tilde > E_v + tol || f.u1_tilde > E_u + tol) ++n;
    return n;
}

struct Monotonicity {
    double max_jump = 0.0; // largest increase between consecutive records
    bool monotone = false; // max_jump below 1e-6
};

// Checks the recorded certificate column for decrease after settle_time.
// use_shifted selects the jerk-compensated column V2 (equal to V1 when the
// run's reference jerk is zero).
inline Monotonicity lyapunov_monotonicity(const Trace& trace, double settle_time,
                                          bool use_shifted) {
    if (trace.size() < 2) throw analysis_error("monotonicity of a near-empty trace");
    Monotonicity m;
    const std::size_t nf = trace.front().followers.size();
    for (std::size_t i = 0; i < nf; ++i) {
        bool have_prev = false;
        double prev = 0.0;
        for (const TraceRecord& r : trace) {
            if (r.t < settle_time - 1e-12) continue;
            const double v = use_shifted ? r.followers[i].V2 : r.followers[i].V1;
            if (have_prev) m.max_jump = std::max(m.max_jump, v - prev);
            prev = v;
            have_prev = true;
        }
    }
    m.monotone = m.max_jump < 1e-6;
    return m;
}

// Minimum of dh/dt + alpha_slope * h over samples where the velocity error
// respects its assumed bound; the forward invariance certificate demands
// this stay nonnegative. dh/dt by central differences on the records.
inline double certificate_min(const Trace& trace, const ControllerParams& p) {
    double worst = std::numeric_limits<double>::infinity();
    if (trace.size() < 3) return worst;
    const std::size_t nf = trace.front().followers.size();
    for (std::size_t i = 0; i < nf; ++i) {
        for (std::size_t k = 1; k + 1 < trace.size(); ++k) {
            const FollowerRecord& f = trace[k].followers[i];
            if (f.v1_tilde > p.E_v + 1e-12) continue;
            const double dt = trace[k + 1].t - trace[k - 1].t;
            const double dh = (trace[k + 1].followers[i].h - trace[k - 1].followers[i].h) / dt;
            worst = std::min(worst, dh + p.alpha_slope * f.h);
        }
    }
    return worst;
}

// Minimum slack of the adaptation invariant: epsilon must stay between the
// tracked velocity error and its assumed bound.
inline double adaptation_invariant_min(const Trace& trace, double E_v) {
    double worst = std::numeric_limits<double>::infinity();
    for (const TraceRecord& r : trace)
        for (const FollowerRecord& f : r.followers)
            worst = std::min(worst, std::min(E_v - f.epsilon, f.epsilon - f.v1_tilde));
    return worst;
}

struct AnalysisOptions {
    double settle_time = 0.0;
    double tail_fraction = 0.2;
    bool check_lyapunov = true;
    bool lyapunov_shifted = false; // check V2 instead of V1
    std::optional<double> excitation_omega;
    int min_periods = 5;
};

struct StabilityReport {
    SafetyMargin safety;
    SteadyState steady;
    double mean_h = 0.0;
    int bound_violations = 0;
    bool lyapunov_checked = false;
    Monotonicity lyapunov;
    std::vector<double> string_gains;
    double certificate_margin = 0.0;
    double adaptation_margin = 0.0;
};

inline StabilityReport analyze(const Trace& trace, const EstimatorGains& gains,
                               const ControllerParams& params, const AnalysisOptions& opts) {
    (void)gains;
    if (trace.empty()) throw analysis_error("cannot analyze an empty trace");

    StabilityReport rep;
    rep.safety = safety_margin(trace);
    rep.steady = steady_state(trace, opts.tail_fraction);

    double sum = 0.0;
    long n = 0;
    for (const TraceRecord& r : trace) {
        if (r.t < opts.settle_time - 1e-12) continue;
        for (const FollowerRecord& f : r.followers) {
            sum += f.h;
            ++n;
        }
    }
    rep.mean_h = n ? sum / static_cast<double>(n) : 0.0;

    rep.bound_violations = bound_violation_count(trace, params.E_v, params.E_u);
    if (opts.check_lyapunov) {
        rep.lyapunov_checked = true;
        rep.lyapunov = lyapunov_monotonicity(trace, opts.settle_time, opts.lyapunov_shifted);
    }
    if (opts.excitation_omega)
        rep.string_gains = string_stability_gain(trace, *opts.excitation_omega,
                                                 opts.settle_time, opts.min_periods);
    rep.certificate_margin = certificate_min(trace, params);
    rep.adaptation_margin = adaptation_invariant_min(trace, params.E_v);
    return rep;
}

} // namespace accsim
