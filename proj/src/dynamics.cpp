#include "intersim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace intersim {

void VehicleParams::validate() const {
    if (!(length > 0 && width > 0 && a_long_max > 0 && a_lat_max > 0 && v_max > 0 && kappa_max > 0)) {
        throw std::invalid_argument("vehicle parameters must all be positive");
    }
}

AgentState step(const AgentState& s, const ControlInput& u, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("time step must be positive");
    }
    const double v_next = std::max(0.0, s.v + u.accel * dt);
    const double arc = 0.5 * (s.v + v_next) * dt;
    const double k = u.curvature;

    AgentState next;
    next.v = v_next;
    next.theta = normalize_angle(s.theta + s.v * k * dt);

    const double turn = k * arc;
    if (std::abs(turn) < 1e-9) {
        // Second-order expansion of the arc for near-straight motion.
        next.x = s.x + arc * (std::cos(s.theta) - 0.5 * turn * std::sin(s.theta));
        next.y = s.y + arc * (std::sin(s.theta) + 0.5 * turn * std::cos(s.theta));
    } else {
        next.x = s.x + (std::sin(s.theta + turn) - std::sin(s.theta)) / k;
        next.y = s.y - (std::cos(s.theta + turn) - std::cos(s.theta)) / k;
    }
    return next;
}

Trajectory rollout(const AgentState& start, const std::vector<ControlInput>& inputs, double dt) {
    Trajectory t;
    t.states.reserve(inputs.size() + 1);
    t.states.push_back(start);
    t.inputs = inputs;
    for (const auto& u : inputs) {
        t.states.push_back(step(t.states.back(), u, dt));
    }
    return t;
}

double consistency_error(const Trajectory& traj, double dt) {
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.inputs.size() && i + 1 < traj.states.size(); ++i) {
        const AgentState e = step(traj.states[i], traj.inputs[i], dt);
        const AgentState& a = traj.states[i + 1];
        worst = std::max({worst, std::abs(e.x - a.x), std::abs(e.y - a.y), std::abs(e.v - a.v),
                          std::abs(normalize_angle(e.theta - a.theta))});
    }
    return worst;
}

FeasibilityReport feasible(const Trajectory& traj, const VehicleParams& params) {
    constexpr double slack = 1e-9;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double v = traj.states[i].v;
        if (v > params.v_max + slack) {
            return {false, i, LimitKind::speed, v, params.v_max};
        }
        if (i >= traj.inputs.size()) {
            continue;
        }
        const ControlInput& u = traj.inputs[i];
        if (std::abs(u.accel) > params.a_long_max + slack) {
            return {false, i, LimitKind::accel, std::abs(u.accel), params.a_long_max};
        }
        if (std::abs(u.curvature) > params.kappa_max + slack) {
            return {false, i, LimitKind::curvature, std::abs(u.curvature), params.kappa_max};
        }
        const double lat = v * v * std::abs(u.curvature);
        if (lat > params.a_lat_max + slack) {
            return {false, i, LimitKind::lateral_accel, lat, params.a_lat_max};
        }
    }
    return {};
}

std::string to_string(LimitKind kind) {
    switch (kind) {
        case LimitKind::none: return "none";
        case LimitKind::accel: return "accel";
        case LimitKind::lateral_accel: return "lateral_accel";
        case LimitKind::speed: return "speed";
        case LimitKind::curvature: return "curvature";
    }
    return "unknown";
}

}  // namespace intersim
