#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "errors.hpp"

namespace accsim {

namespace detail {

inline void check_finite(const std::vector<double>& y, double t, const char* what) {
    for (double x : y)
        if (!std::isfinite(x)) throw numeric_error(std::string(what) + " is not finite", t);
}

} // namespace detail

// One classic fourth-order Runge-Kutta step. f has signature
// f(t, y, dydt) and must fill dydt completely. Throws numeric_error with
// the offending stage time when a derivative goes non-finite.
template <typename Deriv>
std::vector<double> rk4_step(Deriv&& f, const std::vector<double>& y, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

    f(t, y, k1);
    detail::check_finite(k1, t, "derivative");
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    f(t + 0.5 * dt, tmp, k2);
    detail::check_finite(k2, t + 0.5 * dt, "derivative");
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    f(t + 0.5 * dt, tmp, k3);
    detail::check_finite(k3, t + 0.5 * dt, "derivative");
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
    f(t + dt, tmp, k4);
    detail::check_finite(k4, t + dt, "derivative");

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// Explicit Euler fallback, same contract.
template <typename Deriv>
std::vector<double> euler_step(Deriv&& f, const std::vector<double>& y, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
    const std::size_t n = y.size();
    std::vector<double> k(n);
    f(t, y, k);
    detail::check_finite(k, t, "derivative");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + dt * k[i];
    return out;
}

} // namespace accsim
