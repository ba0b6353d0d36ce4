#pragma once

#include <cmath>
#include <numbers>

namespace intersim {

/// Normalizes an angle to (-pi, pi].
inline double normalize_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi) {
        a += 2.0 * std::numbers::pi;
    }
    return a;
}

/// Kinematic state of a vehicle: position, speed and heading.
struct AgentState {
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    double theta = 0.0;

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

/// Rectangular footprint of a vehicle or obstacle, in meters.
struct Shape {
    double length = 4.5;
    double width = 2.0;

    friend bool operator==(const Shape&, const Shape&) = default;
};

}  // namespace intersim
