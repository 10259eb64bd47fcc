#pragma once

#include <stdexcept>
#include <string>

namespace accsim {

// Base class so callers can catch anything thrown by this library in one place.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Eigenvalue input that cannot be the root set of a real cubic.
class spectrum_error : public error {
public:
    using error::error;
};

// Lyapunov equation has no unique positive definite solution.
class lyapunov_error : public error {
public:
    using error::error;
};

// Invalid or inconsistent configuration (gains, parameters, scenario files).
class config_error : public error {
public:
    using error::error;
};

// Analysis asked of a trace that cannot support it (empty, too short, ...).
class analysis_error : public error {
public:
    using error::error;
};

// Non-finite value produced while integrating; carries the simulation time.
class numeric_error : public error {
public:
    numeric_error(const std::string& what, double t)
        : error(what + " at t=" + std::to_string(t)), time_(t) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

} // namespace accsim
