#pragma once

#include <optional>
#include <string>
#include <vector>

#include "intersim/state.hpp"

namespace intersim {

/// Longitudinal acceleration and the path curvature tracked during one step.
struct ControlInput {
    double accel = 0.0;
    double curvature = 0.0;

    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct VehicleParams {
    double length = 4.5;
    double width = 2.0;
    double a_long_max = 8.0;
    double a_lat_max = 8.0;
    double v_max = 50.0;
    double kappa_max = 0.2;

    Shape shape() const { return {length, width}; }
    void validate() const;

    friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

struct Trajectory {
    std::vector<AgentState> states;
    std::vector<ControlInput> inputs;  // one fewer than states

    bool empty() const { return states.empty(); }
};

/// Kinematic point-curvature transition: speed clamps at zero, heading integrates
/// v * kappa, position follows the arc of curvature kappa at the mean speed.
AgentState step(const AgentState& state, const ControlInput& u, double dt);

/// Applies inputs from `start`; the result satisfies the trajectory invariant by construction.
Trajectory rollout(const AgentState& start, const std::vector<ControlInput>& inputs, double dt);

/// Largest deviation between each state and step() applied to its predecessor.
double consistency_error(const Trajectory& traj, double dt);

enum class LimitKind { none, accel, lateral_accel, speed, curvature };

struct FeasibilityReport {
    bool feasible = true;
    std::size_t index = 0;  // first violating step
    LimitKind violated = LimitKind::none;
    double value = 0.0;
    double bound = 0.0;

    explicit operator bool() const { return feasible; }
};

FeasibilityReport feasible(const Trajectory& traj, const VehicleParams& params);

std::string to_string(LimitKind kind);

}  // namespace intersim
