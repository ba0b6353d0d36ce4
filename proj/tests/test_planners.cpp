#include <doctest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <numbers>

#include "support.hpp"

#include "intersim/planners.hpp"

using namespace intersim;
using testing::source_path;

namespace {

GoalRegion box_goal(double x0, double y0, double x1, double y1) {
    GoalRegion g;
    g.area = Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
    g.t_max = 60.0;
    return g;
}

/// Every successor path from `start`, shortest (by centerline length) reaching the goal.
std::vector<ObjectId> shortest_by_enumeration(const StreetNetwork& net, ObjectId start, const GoalRegion& goal) {
    std::vector<ObjectId> best;
    double best_len = std::numeric_limits<double>::infinity();
    std::vector<ObjectId> path{start};
    std::function<void(double)> dfs = [&](double len) {
        const Lanelet& last = net.at(path.back());
        const double total = len + last.centerline.length();
        if (polygons_overlap(last.polygon, goal.area) && total < best_len) {
            best_len = total;
            best = path;
        }
        for (ObjectId nx : last.successors) {
            if (std::find(path.begin(), path.end(), nx) != path.end()) {
                continue;
            }
            path.push_back(nx);
            dfs(total);
            path.pop_back();
        }
    };
    dfs(0.0);
    return best;
}

LocalView empty_view(const Scenario& sc, AgentState ego) {
    LocalView v;
    v.ego_id = 1;
    v.ego = ego;
    v.network = &sc.network;
    return v;
}

PredictedPath standing(ObjectId id, AgentState s, std::size_t n = 31) {
    PredictedPath p;
    p.vehicle_id = id;
    p.states.assign(n, s);
    p.pos_stddev.assign(n, 0.0);
    return p;
}

}  // namespace

// ---------------------------------------------------------------- routing

TEST_CASE("routes match exhaustive path enumeration on the junction") {
    const Scenario t = load_scenario(source_path("scenarios/t_intersection.json"));
    const AgentState north{1.75, -60.0, 8.0, std::numbers::pi / 2};
    SUBCASE("left turn when only the turn reaches the goal") {
        const GoalRegion g = box_goal(-80, 0, -60, 3.5);
        const Route r = route_to_goal(t.network, north, g);
        CHECK(r.lanelets == shortest_by_enumeration(t.network, 7, g));
        CHECK(r.lanelets == std::vector<ObjectId>{7, 10, 6});
    }
    SUBCASE("right turn") {
        const GoalRegion g = box_goal(60, -3.5, 80, 0);
        const Route r = route_to_goal(t.network, north, g);
        CHECK(r.lanelets == shortest_by_enumeration(t.network, 7, g));
        CHECK(r.lanelets == std::vector<ObjectId>{7, 11, 3});
    }
    SUBCASE("eastbound straight rather than around") {
        const GoalRegion g = box_goal(60, -3.5, 80, 0);
        const Route r = route_to_goal(t.network, {-60, -1.75, 10, 0}, g);
        CHECK(r.lanelets == shortest_by_enumeration(t.network, 1, g));
    }
    SUBCASE("unreachable goal") {
        CHECK_THROWS_AS(route_to_goal(t.network, north, box_goal(-3.0, -110, -0.5, -100)), RoutingError);
    }
}

TEST_CASE("route frame has monotone arc length across lanelets") {
    const Scenario t = load_scenario(source_path("scenarios/t_intersection.json"));
    const Route r = route_to_goal(t.network, {1.75, -60.0, 8.0, std::numbers::pi / 2}, box_goal(-80, 0, -60, 3.5));
    const auto& cum = r.frame.reference().cumulative_arclength();
    CHECK(std::is_sorted(cum.begin(), cum.end()));
    CHECK(std::adjacent_find(cum.begin(), cum.end()) == cum.end());
    CHECK(r.frame.project({1.75, -60.0}).d == doctest::Approx(0.0).epsilon(1e-9));
}

// ---------------------------------------------------------------- replay

TEST_CASE("replay returns the recording regardless of neighbors") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    const auto& rec = sc.dynamic_obstacle(200)->trajectory;
    LocalView v = empty_view(sc, rec[49]);
    v.step = 49;
    const PlanResult alone = plan_replay(v, rec, 49);
    v.neighbors.push_back({100, {90.0, 0.0, 0.0, 0.0}, {}, nullptr});
    const PlanResult crowded = plan_replay(v, rec, 49);
    CHECK(alone.next_state == rec[50]);
    CHECK(crowded.next_state == alone.next_state);
    CHECK(crowded.next_input == alone.next_input);
    const PlanResult past = plan_replay(v, rec, rec.size() - 1);
    CHECK(past.next_state.x == rec.back().x);
    CHECK(past.next_state.v == 0.0);
    CHECK_THROWS_AS(plan_replay(v, {}, 0), PlanningError);
}

// ---------------------------------------------------------------- IDM

TEST_CASE("IDM free-road fixpoint and standstill gap") {
    const IdmParams p;
    CHECK(idm_acceleration(15.0, 15.0, std::nullopt, p) == doctest::Approx(0.0));
    CHECK(idm_acceleration(5.0, 15.0, std::nullopt, p) > 0.0);
    CHECK(idm_acceleration(5.0, 15.0, std::nullopt, p) <= p.a_max);
    CHECK(idm_acceleration(20.0, 15.0, std::nullopt, p) < 0.0);
    CHECK(idm_acceleration(0.01, 15.0, LeadVehicle{2, p.min_gap, 0.0}, p) < 0.0);
    // Equilibrium gap at equal speeds: s* = s0 + v T, so a follower exactly there slows only by the free term.
    const double v = 10.0;
    const double a = idm_acceleration(v, 30.0, LeadVehicle{2, p.min_gap + v * p.time_headway, v}, p);
    CHECK(a == doctest::Approx(p.a_max * (-std::pow(v / 30.0, 4))));
}

TEST_CASE("IDM picks the nearest vehicle ahead on its path") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    const CurvilinearFrame path(Polyline({{0, 0}, {420, 0}}));
    LocalView v = empty_view(sc, {100, 0, 10, 0});
    const PredictedPath p1 = standing(11, {140, 0.2, 0, 0});
    const PredictedPath p2 = standing(12, {125, -0.3, 0, 0});
    const PredictedPath p3 = standing(13, {80, 0, 0, 0});     // behind
    const PredictedPath p4 = standing(14, {110, -3.5, 0, 0});  // other lane
    v.neighbors = {{11, p1.states[0], {}, &p1}, {12, p2.states[0], {}, &p2}, {13, p3.states[0], {}, &p3},
                   {14, p4.states[0], {}, &p4}};
    const auto lead = find_lead(v, path, VehicleParams{});
    REQUIRE(lead.has_value());
    CHECK(lead->id == 12);
    CHECK(lead->gap == doctest::Approx(125 - 2.25 - 102.25));
    CHECK(lead->speed == doctest::Approx(0.0));
}

TEST_CASE("IDM stays on the recorded path within bounds") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    const CurvilinearFrame path(Polyline({{0, 0}, {420, 0}}));
    const VehicleParams params;
    LocalView v = empty_view(sc, {50, 0.05, 14, 0.0});
    const PredictedPath stop = standing(9, {70, 0, 0, 0});
    v.neighbors = {{9, stop.states[0], {}, &stop}};
    for (int k = 0; k < 60; ++k) {
        const PlanResult r = plan_idm(v, path, SpeedProfile::constant(15.0), {}, params);
        CHECK(std::abs(r.next_input.accel) <= params.a_long_max + 1e-12);
        CHECK(r.next_state == step(v.ego, r.next_input, v.dt));
        CHECK(std::abs(path.project({r.next_state.x, r.next_state.y}).d) <= 0.1);
        v.ego = r.next_state;
    }
    CHECK(v.ego.x + 2.25 < 70 - 2.25);  // stopped behind the obstacle
}

TEST_CASE("speed profile interpolates the recording") {
    const SpeedProfile p{{0, 10, 20}, {5, 15, 15}};
    CHECK(p.at(-1) == 5);
    CHECK(p.at(5) == doctest::Approx(10));
    CHECK(p.at(30) == 15);
    CHECK(SpeedProfile::constant(7).at(100) == 7);
}

// ---------------------------------------------------------------- Frenet

TEST_CASE("empty road: the winner holds the lane at the reference speed") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    const AgentState ego{150, -3.5, 12, 0};
    const Route route = route_to_goal(sc.network, ego, box_goal(300, -5.25, 350, -1.75));
    FrenetMemory mem;
    const PlanResult r = plan_frenet(empty_view(sc, ego), route.frame, {}, {}, 12.0, mem);
    CHECK(r.status == PlanStatus::ok);
    for (const auto& s : r.intended.states) {
        CHECK(s.y == doctest::Approx(-3.5).epsilon(1e-9));
        CHECK(s.v == doctest::Approx(12.0).epsilon(1e-9));
    }
    const AgentState again = step(ego, r.next_input, 0.1);
    CHECK(std::abs(again.x - r.next_state.x) < 1e-6);
    CHECK(std::abs(again.y - r.next_state.y) < 1e-6);
}

TEST_CASE("a wall of predicted occupancies forces the braking fallback") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    const AgentState ego{150, -3.5, 12, 0};
    const Route route = route_to_goal(sc.network, ego, box_goal(300, -5.25, 350, -1.75));
    LocalView v = empty_view(sc, ego);
    std::vector<PredictedPath> walls;
    for (int i = 0; i < 5; ++i) {
        walls.push_back(standing(20 + i, {160, -6.0 + 2.0 * i, 0, std::numbers::pi / 2}));
    }
    for (const auto& w : walls) {
        v.neighbors.push_back({w.vehicle_id, w.states[0], {4.5, 2.0}, &w});
    }
    FrenetMemory mem{0.3, 0.1};
    const PlanResult r = plan_frenet(v, route.frame, {}, {}, 12.0, mem);
    CHECK(r.status == PlanStatus::infeasible);
    CHECK(mem.accel == 0.0);
    CHECK(r.next_input.accel == doctest::Approx(-0.6 * VehicleParams{}.a_long_max));
    CHECK(feasible(r.intended, {}));
}

TEST_CASE("dropping the risk weight never raises deviation and speed cost") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    const AgentState ego{150, -3.5, 12, 0};
    const Route route = route_to_goal(sc.network, ego, box_goal(300, -5.25, 350, -1.75));
    LocalView v = empty_view(sc, ego);
    PredictedPath near = standing(30, {175, -0.2, 11, 0});
    for (std::size_t k = 0; k < near.states.size(); ++k) {
        near.states[k].x += 11.0 * 0.1 * static_cast<double>(k);
        near.pos_stddev[k] = 0.05 * static_cast<double>(k);
    }
    v.neighbors.push_back({30, near.states[0], {}, &near});

    auto winner_cost = [&](double w_risk) {
        FrenetPlannerConfig cfg;
        cfg.w_risk = w_risk;
        FrenetMemory mem;
        const auto cands = sample_frenet_candidates(v, route.frame, cfg, {}, 12.0, mem);
        const PlanResult r = plan_frenet(v, route.frame, cfg, {}, 12.0, mem);
        REQUIRE(r.status == PlanStatus::ok);
        for (const auto& c : cands) {
            if (c.trajectory.states == r.intended.states) {
                return cfg.w_lateral * c.lateral_offset * c.lateral_offset +
                       cfg.w_speed * (c.end_speed - 12.0) * (c.end_speed - 12.0);
            }
        }
        FAIL("winner not among the sampled candidates");
        return 0.0;
    };
    CHECK(winner_cost(0.0) <= winner_cost(2.0));
    CHECK(winner_cost(0.0) <= winner_cost(50.0));
}

TEST_CASE("prediction collision check uses inflated boxes at matching offsets") {
    Trajectory traj;
    for (int k = 0; k <= 3; ++k) {
        traj.states.push_back({10.0 * k, 0, 10, 0});
    }
    PredictedPath p;
    p.vehicle_id = 5;
    for (int k = 0; k <= 3; ++k) {
        p.states.push_back({10.0 * k, 4.0, 10, 0});  // 2 m gap between the sides
        p.pos_stddev.push_back(k == 2 ? 4.1 : 0.0);
    }
    const Neighbor n{5, p.states[0], {4.5, 2.0}, &p};
    // Width 2 + 4.1 reaches 3.05 m below its center, past the ego edge at y = 1.
    CHECK(collides_with_predictions(traj, {4.5, 2.0}, std::span(&n, 1)));
    p.pos_stddev[2] = 3.9;
    CHECK_FALSE(collides_with_predictions(traj, {4.5, 2.0}, std::span(&n, 1)));
    // Offset 0 is ignored: the current overlap is the engine's business.
    p.pos_stddev[2] = 0.0;
    p.states[0].y = 0.0;
    CHECK_FALSE(collides_with_predictions(traj, {4.5, 2.0}, std::span(&n, 1)));
}

TEST_CASE("frenet errors and configuration") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    FrenetMemory mem;
    CHECK_THROWS_AS(plan_frenet(empty_view(sc, {10, 0, 5, 0}), CurvilinearFrame{}, {}, {}, 10.0, mem),
                    PlanningError);
    FrenetPlannerConfig bad;
    bad.end_times.clear();
    CHECK_THROWS(bad.validate());
    CHECK(planner_kind_from_string("idm") == PlannerKind::idm);
    CHECK_THROWS(planner_kind_from_string("magic"));
}

TEST_CASE("local view keeps neighbors inside the radius") {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    const std::vector<Observation> obs{{1, {0, 0, 0, 0}, {}}, {2, {30, 0, 0, 0}, {}}, {3, {0, 50, 0, 0}, {}}};
    const Predictions preds = predict_all(obs, sc.network, {}, 0.1);
    const LocalView v = make_local_view(1, obs, preds, sc.network, 40.0, 0.1, 3);
    REQUIRE(v.neighbors.size() == 1);
    CHECK(v.neighbors[0].id == 2);
    CHECK(v.neighbors[0].prediction == &preds.at(2));
    CHECK(v.step == 3);
}
