#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "errors.hpp"
#include "estimator.hpp"

namespace accsim {

// Controller and spacing-policy parameters. kappa is tied to 1/T so the
// control law cancels the time-headway dynamics exactly; it is derived, not
// stored. alpha_slope and beta_slope are the (linear) class-K function
// slopes used by the safety filter and the adaptation law.
struct ControllerParams {
    double d_r;          // standstill distance, m
    double T;            // time headway, s
    double E_v;          // assumed bound on the velocity estimation error, m/s
    double E_u;          // assumed bound on the acceleration estimation error, m/s^2
    double U_min;        // worst-case predecessor jerk (most negative), m/s^3
    double alpha_slope;  // safety filter gain
    double beta_slope;   // adaptation gain

    ControllerParams(double d_r_, double T_, double E_v_, double E_u_, double U_min_,
                     double alpha_slope_, double beta_slope_)
        : d_r(d_r_), T(T_), E_v(E_v_), E_u(E_u_), U_min(U_min_),
          alpha_slope(alpha_slope_), beta_slope(beta_slope_) {
        if (!(d_r > 0.0)) throw config_error("standstill distance must be positive");
        if (!(T > 0.0)) throw config_error("time headway must be positive");
        if (!(E_v > 0.0)) throw config_error("velocity error bound must be positive");
        if (!(E_u > 0.0)) throw config_error("acceleration error bound must be positive");
        if (!(U_min <= 0.0)) throw config_error("worst-case jerk bound must be nonpositive");
        if (!(alpha_slope > 0.0)) throw config_error("safety filter slope must be positive");
        if (!(beta_slope > 0.0)) throw config_error("adaptation slope must be positive");
    }

    double kappa() const noexcept { return 1.0 / T; }
};

// Adaptation state carried per follower: the learned error bound epsilon,
// its companion lower variable v_m, and the time-varying distance margin.
struct AdaptiveState {
    double epsilon = 0.0;
    double v_m = 0.0;
    double d_c = 0.0;
};

// Constraint function of the spacing policy: h = d - d_r - T v. The set
// h >= 0 is what the controller keeps forward invariant.
inline double safety_h(double d, double v, const ControllerParams& p) {
    return d - p.d_r - p.T * v;
}

// Same constraint evaluated on the estimated gap.
inline double h_hat(double d_hat, double v, const ControllerParams& p) {
    return d_hat - p.d_r - p.T * v;
}

// Control with a fixed, worst-case margin for the velocity estimation
// error: u = kappa (v1_hat - E_v - v + alpha_slope * h). h is evaluated on
// the sensed gap; only the predecessor velocity comes from the observer.
inline double baseline_control(double v1_hat, double v, double h, const ControllerParams& p) {
    return p.kappa() * (v1_hat - p.E_v - v + p.alpha_slope * h);
}

// Control with the adapted margin epsilon in place of E_v. Identical
// expression so that epsilon == E_v reproduces baseline_control bit for bit.
inline double adaptive_control(double v1_hat, double v, double h, double epsilon,
                               const ControllerParams& p) {
    return p.kappa() * (v1_hat - epsilon - v + p.alpha_slope * h);
}

// Distance margin that compensates a velocity error bound E under the
// linear safety filter: d_c = -E / g1 with g1 < 0.
inline double conservative_distance_const(double E, double g1) {
    if (!(g1 < 0.0))
        throw std::invalid_argument("conservative distance constant needs g1 < 0");
    return -E / g1;
}

// Smallest error bounds consistent with a worst-case constant jerk U_min:
// the stationary estimation error it induces. Bounds chosen below these
// leave the controller unable to cover steady conditions.
struct ErrorBounds {
    double E_v_min = 0.0;
    double E_u_min = 0.0;
};

inline ErrorBounds min_error_bounds(double U_min, const EstimatorGains& g) {
    if (!(U_min <= 0.0))
        throw std::invalid_argument("min_error_bounds expects a nonpositive jerk bound");
    return {-g.g1 * U_min / g.g3, -g.g2 * U_min / g.g3};
}

// Companion variable dynamics: v_m' = g2 (d_hat - d) - E_u. Tracks a lower
// envelope of the velocity estimation error.
inline double vm_derivative(double d_tilde, const EstimatorGains& g, double E_u) {
    return g.g2 * d_tilde - E_u;
}

// Adaptation law for epsilon. s is the current worst-case growth rate of
// the velocity error; a and b_m are the gaps to the upper bound E_v and to
// v_m. Branches, checked in order with tol = 1e-9:
//   1. s below the relaxation rate: hold (epsilon' = 0).
//   2. s equal to it: track exactly (epsilon' = a * beta).
//   3. a sufficiently above b_m: blend so epsilon stays between its
//      envelopes.
//   4. otherwise the envelopes have met: clamp epsilon to E_v between
//      steps. The returned derivative is 0; the integrator applies the
//      clamp as a state event, not through the derivative.
struct EpsilonLaw {
    double epsilon_dot = 0.0;
    bool clamp = false;
};

inline EpsilonLaw epsilon_derivative(const AdaptiveState& ad, double d_tilde,
                                     const ControllerParams& p, const EstimatorGains& g) {
    constexpr double tol = 1e-9;
    const double a = p.E_v - ad.epsilon;
    const double s = p.E_u + g.g2 * d_tilde;
    const double b_m = ad.epsilon - ad.v_m;
    const double ab = a * p.beta_slope;

    if (s < ab - tol) return {0.0, false};
    if (std::abs(s - ab) <= tol) return {ab, false};
    if (a >= b_m + tol) return {(a * s - p.beta_slope * a * b_m) / (a - b_m), false};
    return {0.0, true};
}

// Time-varying distance margin: d_c' = epsilon + g1 d_c. Settles at
// -epsilon / g1, i.e. at conservative_distance_const(epsilon, g1).
inline double dc_derivative(double epsilon, double d_c, double g1) {
    return epsilon + g1 * d_c;
}

} // namespace accsim
