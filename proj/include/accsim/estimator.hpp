#pragma once

#include <string>

#include "errors.hpp"
#include "matops.hpp"
#include "plant.hpp"

namespace accsim {

// Observer gain triple. Construction enforces the stability conditions
// (g1 < 0, g3 < 0, g1*g2 > -g3), so a constructed value always yields a
// Hurwitz error matrix and in particular g3 != 0. Treat instances as
// immutable values.
struct EstimatorGains {
    double g1;
    double g2;
    double g3;

    EstimatorGains(double g1_, double g2_, double g3_) : g1(g1_), g2(g2_), g3(g3_) {
        if (!(g1 < 0.0) || !(g2 < 0.0) || !(g3 < 0.0))
            throw config_error("estimator gains must all be negative (necessary for a stable error matrix)");
        if (!is_hurwitz(g1, g2, g3))
            throw config_error("estimator gains fail the stability condition g1*g2 > -g3");
    }
};

// Observer state: estimated gap, predecessor velocity, predecessor
// acceleration.
struct EstimatorState {
    double d_hat = 0.0;
    double v1_hat = 0.0;
    double u1_hat = 0.0;
};

// Estimation errors, estimate minus truth.
struct ErrorState {
    double d_tilde = 0.0;
    double v1_tilde = 0.0;
    double u1_tilde = 0.0;
};

// Observer dynamics driven by the measured gap d and own velocity v:
//   d_hat'  = v1_hat - v + g1 (d_hat - d)
//   v1_hat' = g2 (d_hat - d) + u1_hat
//   u1_hat' = g3 (d_hat - d)
inline EstimatorState estimator_derivative(const EstimatorState& s, double d, double v,
                                           const EstimatorGains& g) {
    const double d_tilde = s.d_hat - d;
    return {s.v1_hat - v + g.g1 * d_tilde,
            g.g2 * d_tilde + s.u1_hat,
            g.g3 * d_tilde};
}

inline ErrorState error_state(const EstimatorState& est, const PairState& truth) {
    return {est.d_hat - truth.d, est.v1_hat - truth.v1, est.u1_hat - truth.u1};
}

// The estimation error evolves autonomously as e' = A e + B u_j with
// A = [[g1,1,0],[g2,0,1],[g3,0,0]] and B = [0,0,-1]: only the predecessor's
// jerk perturbs it, the follower's own control cancels out.
inline std::pair<Matrix3, Vec3> error_matrix(double g1, double g2, double g3) {
    Matrix3 a;
    a(0, 0) = g1; a(0, 1) = 1.0; a(0, 2) = 0.0;
    a(1, 0) = g2; a(1, 1) = 0.0; a(1, 2) = 1.0;
    a(2, 0) = g3; a(2, 1) = 0.0; a(2, 2) = 0.0;
    return {a, Vec3{0.0, 0.0, -1.0}};
}

inline std::pair<Matrix3, Vec3> error_matrix(const EstimatorGains& g) {
    return error_matrix(g.g1, g.g2, g.g3);
}

inline ErrorState error_derivative(const ErrorState& e, double u_j, const EstimatorGains& g) {
    return {g.g1 * e.d_tilde + e.v1_tilde,
            g.g2 * e.d_tilde + e.u1_tilde,
            g.g3 * e.d_tilde - u_j};
}

// Stationary error under a constant predecessor jerk:
//   e* = (u_j / g3) * [1, -g1, -g2].
inline ErrorState equilibrium_error(double g1, double g2, double g3, double u_j) {
    if (g3 == 0.0)
        throw config_error("equilibrium error undefined for g3 = 0");
    const double k = u_j / g3;
    return {k, -g1 * k, -g2 * k};
}

inline ErrorState equilibrium_error(const EstimatorGains& g, double u_j) {
    return equilibrium_error(g.g1, g.g2, g.g3, u_j);
}

// Re-seed the observer from ground truth (a vehicle-to-vehicle update).
inline EstimatorState communication_reset(const PairState& truth) {
    return {truth.d, truth.v1, truth.u1};
}

} // namespace accsim
