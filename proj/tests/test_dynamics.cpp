#include <doctest.h>

#include <cmath>

#include "intersim/dynamics.hpp"

using namespace intersim;

TEST_CASE("straight step integrates the mean speed") {
    const AgentState s = step({0, 0, 10, 0}, {2.0, 0.0}, 0.1);
    CHECK(s.v == doctest::Approx(10.2));
    CHECK(s.x == doctest::Approx(1.01));
    CHECK(s.y == doctest::Approx(0.0));
    CHECK(s.theta == doctest::Approx(0.0));
}

TEST_CASE("arc step lands on the circle of curvature kappa") {
    // Constant speed: heading turns by v*kappa*dt, the position moves along the chord
    // of a circle of radius 1/kappa subtending that angle.
    const double kappa = 0.1;
    const double v = 10.0;
    const double dt = 0.1;
    const AgentState s = step({0, 0, v, 0}, {0.0, kappa}, dt);
    const double phi = v * kappa * dt;
    CHECK(s.theta == doctest::Approx(phi));
    CHECK(s.x == doctest::Approx(std::sin(phi) / kappa));
    CHECK(s.y == doctest::Approx((1.0 - std::cos(phi)) / kappa));
    CHECK(std::hypot(s.x, s.y - 1.0 / kappa) == doctest::Approx(1.0 / kappa));
}

TEST_CASE("speed never goes negative") {
    const AgentState s = step({0, 0, 1.0, 0}, {-20.0, 0.0}, 0.1);
    CHECK(s.v == 0.0);
    CHECK(s.x == doctest::Approx(0.05));
    const AgentState parked = step({3, 4, 0.0, 1.0}, {-5.0, 0.2}, 0.1);
    CHECK(parked.x == 3.0);
    CHECK(parked.y == 4.0);
    CHECK(parked.theta == doctest::Approx(1.0));
}

TEST_CASE("rollout is step-consistent") {
    std::vector<ControlInput> inputs;
    for (int k = 0; k < 50; ++k) {
        inputs.push_back({std::sin(0.3 * k), 0.05 * std::cos(0.2 * k)});
    }
    const Trajectory t = rollout({1, 2, 8, 0.3}, inputs, 0.1);
    CHECK(t.states.size() == 51);
    CHECK(t.inputs.size() == 50);
    CHECK(consistency_error(t, 0.1) < 1e-12);
    Trajectory broken = t;
    broken.states[20].x += 0.5;
    CHECK(consistency_error(broken, 0.1) == doctest::Approx(0.5));
}

TEST_CASE("feasibility names the first violated limit") {
    const VehicleParams p;
    SUBCASE("ok") {
        const Trajectory t = rollout({0, 0, 10, 0}, {{1.0, 0.01}, {-1.0, 0.0}}, 0.1);
        CHECK(feasible(t, p));
    }
    SUBCASE("acceleration") {
        const Trajectory t = rollout({0, 0, 10, 0}, {{1.0, 0.0}, {9.0, 0.0}}, 0.1);
        const auto r = feasible(t, p);
        CHECK_FALSE(r);
        CHECK(r.violated == LimitKind::accel);
        CHECK(r.index == 1);
    }
    SUBCASE("lateral acceleration") {
        // v^2 kappa = 400 * 0.1 = 40 > 8 while kappa stays under its own limit.
        const Trajectory t = rollout({0, 0, 20, 0}, {{0.0, 0.1}}, 0.1);
        const auto r = feasible(t, p);
        CHECK_FALSE(r);
        CHECK(r.violated == LimitKind::lateral_accel);
    }
    SUBCASE("curvature") {
        const Trajectory t = rollout({0, 0, 1, 0}, {{0.0, 0.5}}, 0.1);
        CHECK(feasible(t, p).violated == LimitKind::curvature);
    }
    SUBCASE("speed") {
        const Trajectory t = rollout({0, 0, 49.9, 0}, {{5.0, 0.0}}, 0.1);
        CHECK(feasible(t, p).violated == LimitKind::speed);
    }
}

TEST_CASE("vehicle parameters validate") {
    VehicleParams p;
    CHECK_NOTHROW(p.validate());
    p.a_lat_max = 0.0;
    CHECK_THROWS(p.validate());
}
