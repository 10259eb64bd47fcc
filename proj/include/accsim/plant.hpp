#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "errors.hpp"

namespace accsim {

// Longitudinal truth model for one predecessor/follower pair:
//   d' = v1 - v, v1' = u1, v' = u, u1' = u_j.
// d is the bumper gap, v1/u1 the predecessor velocity/acceleration, v the
// follower velocity. The follower commands u; the predecessor's jerk u_j is
// exogenous.
struct PairState {
    double d = 0.0;
    double v1 = 0.0;
    double v = 0.0;
    double u1 = 0.0;
};

inline PairState pair_derivative(const PairState& s, double u, double u_j) {
    return {s.v1 - s.v, s.u1, u, u_j};
}

// Chain of followers behind one lead vehicle. gap[i] is measured between
// follower i and the vehicle ahead of it (the lead for i = 0).
struct PlatoonState {
    double lead_v = 0.0;
    std::vector<double> gap;
    std::vector<double> v;
};

inline PlatoonState platoon_derivative(const PlatoonState& s, double lead_u1,
                                       const std::vector<double>& controls) {
    if (s.gap.size() != s.v.size() || controls.size() != s.v.size())
        throw std::invalid_argument("platoon_derivative: control count must match follower count");
    PlatoonState dot;
    dot.lead_v = lead_u1;
    dot.gap.resize(s.v.size());
    dot.v = controls;
    for (std::size_t i = 0; i < s.v.size(); ++i) {
        const double ahead = (i == 0) ? s.lead_v : s.v[i - 1];
        dot.gap[i] = ahead - s.v[i];
    }
    return dot;
}

// One piece of the lead vehicle's acceleration program.
struct LeadSegment {
    enum class Kind { constant_jerk, constant_accel, sinusoidal_velocity, tabulated_accel };

    Kind kind = Kind::constant_accel;
    double duration = 0.0;

    double u_j = 0.0;       // constant_jerk
    double u1 = 0.0;        // constant_accel
    double mean = 0.0;      // sinusoidal_velocity: velocity the scenario should start at
    double amplitude = 0.0; // sinusoidal_velocity
    double omega = 0.0;     // sinusoidal_velocity, rad/s
    std::vector<double> times;  // tabulated_accel, starts at 0, ends at duration
    std::vector<double> values; // tabulated_accel, one acceleration per sample time
};

// Piecewise lead input program. Yields (u1, u_j) closed form at any time in
// its span, so integrators never have to hunt for segment switches: the
// simulation evaluates it where it needs it and the discontinuities land on
// step boundaries by scenario construction.
//
// Acceleration is continuous across constant-jerk joints (the running value
// is carried in), and may jump at joints into the other kinds; that models a
// lead vehicle switching program, and u_j stays the in-segment derivative.
class LeadProfile {
public:
    struct Inputs {
        double u1 = 0.0;
        double u_j = 0.0;
    };

    explicit LeadProfile(std::vector<LeadSegment> segments, double initial_accel = 0.0) {
        if (segments.empty())
            throw config_error("lead profile needs at least one segment");
        double t = 0.0;
        double accel = initial_accel;
        segments_.reserve(segments.size());
        for (auto& seg : segments) {
            if (!(seg.duration > 0.0))
                throw config_error("lead profile segment duration must be positive");
            if (seg.kind == LeadSegment::Kind::tabulated_accel)
                validate_table(seg);
            Prepared p;
            p.t_start = t;
            p.u1_start = accel;
            accel = exit_accel(seg, accel);
            t += seg.duration;
            p.seg = std::move(seg);
            segments_.push_back(std::move(p));
        }
        total_ = t;
    }

    double duration() const noexcept { return total_; }

    // Left-closed, right-open segments; exactly t == duration() maps to the
    // end of the last segment.
    Inputs at(double t) const {
        if (t < -1e-12)
            throw std::out_of_range("lead profile evaluated at negative time");
        if (t > total_ + 1e-9)
            throw std::out_of_range("lead profile does not cover requested time");
        t = std::clamp(t, 0.0, total_);

        std::size_t i = segments_.size() - 1;
        while (i > 0 && t < segments_[i].t_start) --i;
        const Prepared& p = segments_[i];
        return eval(p.seg, p.u1_start, std::min(t - p.t_start, p.seg.duration));
    }

private:
    struct Prepared {
        LeadSegment seg;
        double t_start = 0.0;
        double u1_start = 0.0;
    };

    static void validate_table(const LeadSegment& seg) {
        if (seg.times.size() < 2 || seg.times.size() != seg.values.size())
            throw config_error("tabulated segment needs matching times/values with at least two samples");
        if (std::abs(seg.times.front()) > 1e-9 ||
            std::abs(seg.times.back() - seg.duration) > 1e-9)
            throw config_error("tabulated segment samples must span 0..duration");
        for (std::size_t i = 1; i < seg.times.size(); ++i)
            if (!(seg.times[i] > seg.times[i - 1]))
                throw config_error("tabulated segment times must be strictly increasing");
    }

    static double exit_accel(const LeadSegment& seg, double entry) {
        switch (seg.kind) {
        case LeadSegment::Kind::constant_jerk:
            return entry + seg.u_j * seg.duration;
        case LeadSegment::Kind::constant_accel:
            return seg.u1;
        case LeadSegment::Kind::sinusoidal_velocity:
            return seg.amplitude * seg.omega * std::cos(seg.omega * seg.duration);
        case LeadSegment::Kind::tabulated_accel:
            return seg.values.back();
        }
        return entry;
    }

    static Inputs eval(const LeadSegment& seg, double u1_start, double tau) {
        switch (seg.kind) {
        case LeadSegment::Kind::constant_jerk:
            return {u1_start + seg.u_j * tau, seg.u_j};
        case LeadSegment::Kind::constant_accel:
            return {seg.u1, 0.0};
        case LeadSegment::Kind::sinusoidal_velocity: {
            const double aw = seg.amplitude * seg.omega;
            return {aw * std::cos(seg.omega * tau), -aw * seg.omega * std::sin(seg.omega * tau)};
        }
        case LeadSegment::Kind::tabulated_accel: {
            auto hi = std::upper_bound(seg.times.begin(), seg.times.end(), tau);
            std::size_t j = std::min<std::size_t>(
                seg.times.size() - 1,
                std::max<std::size_t>(1, static_cast<std::size_t>(hi - seg.times.begin())));
            const double t0 = seg.times[j - 1], t1 = seg.times[j];
            const double y0 = seg.values[j - 1], y1 = seg.values[j];
            const double slope = (y1 - y0) / (t1 - t0);
            return {y0 + slope * (tau - t0), slope};
        }
        }
        return {0.0, 0.0};
    }

    std::vector<Prepared> segments_;
    double total_ = 0.0;
};

inline LeadProfile::Inputs lead_inputs(const LeadProfile& profile, double t) {
    return profile.at(t);
}

} // namespace accsim
