#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "intersim/dynamics.hpp"
#include "intersim/prediction.hpp"
#include "intersim/scenario.hpp"

namespace intersim {

class PlanningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Neighbor {
    ObjectId id = 0;
    AgentState state;
    Shape shape;
    const PredictedPath* prediction = nullptr;  // owned by the step's Predictions
};

/// What one agent observes at a step: vehicles within the visibility radius and their
/// predictions. Everything referenced here is immutable for the duration of the step.
struct LocalView {
    ObjectId ego_id = 0;
    AgentState ego;
    std::vector<Neighbor> neighbors;
    const StreetNetwork* network = nullptr;
    double visibility_radius = 100.0;
    double dt = 0.1;
    std::size_t step = 0;
};

/// Radius-filtered view; the ego is excluded from the neighbors, order follows `observations`.
LocalView make_local_view(ObjectId ego_id, std::span<const Observation> observations,
                          const Predictions& predictions, const StreetNetwork& network, double radius,
                          double dt, std::size_t step);

enum class PlanStatus { ok, infeasible };

struct PlanResult {
    AgentState next_state;
    ControlInput next_input;
    Trajectory intended;
    PlanStatus status = PlanStatus::ok;
};

// ---------------------------------------------------------------- routing

struct Route {
    std::vector<ObjectId> lanelets;
    CurvilinearFrame frame;
};

/// Shortest successor path by centerline length from the start lanelet to any lanelet
/// overlapping the goal area. Throws RoutingError when unreachable.
Route route_to_goal(const StreetNetwork& network, const AgentState& start, const GoalRegion& goal);

/// Frame through the recorded positions, extended at both ends.
CurvilinearFrame recorded_path_frame(std::span<const AgentState> recorded);

// ---------------------------------------------------------------- replay

PlanResult plan_replay(const LocalView& view, std::span<const AgentState> recorded, std::size_t t_index);

// ---------------------------------------------------------------- IDM

struct IdmParams {
    double a_max = 1.5;       // a_idm
    double b_comfort = 2.0;   // b
    double time_headway = 1.5;
    double min_gap = 2.0;     // s0
    double min_desired_speed = 1.0;
};

/// Desired speed along the path as a function of arc length.
struct SpeedProfile {
    std::vector<double> s;
    std::vector<double> v;

    double at(double arc) const;
    static SpeedProfile constant(double v);
    static SpeedProfile from_recording(const CurvilinearFrame& path, std::span<const AgentState> recorded);
};

struct LeadVehicle {
    ObjectId id = 0;
    double gap = 0.0;    // bumper to bumper along the path
    double speed = 0.0;  // along the path tangent
};

std::optional<LeadVehicle> find_lead(const LocalView& view, const CurvilinearFrame& path,
                                     const VehicleParams& params);

double idm_acceleration(double v, double v0, std::optional<LeadVehicle> lead, const IdmParams& p);

/// Curvature that moves `state` onto `target` along an arc of the given length.
double aim_curvature(const AgentState& state, Point2 target, double arc_length);

PlanResult plan_idm(const LocalView& view, const CurvilinearFrame& path, const SpeedProfile& desired,
                    const IdmParams& idm, const VehicleParams& params);

// ---------------------------------------------------------------- Frenet sampling

struct FrenetPlannerConfig {
    std::vector<double> end_times{2.0, 3.0};
    std::vector<double> lateral_offsets{-3.0, -1.5, 0.0, 1.5, 3.0};
    std::vector<double> speed_fractions{0.6, 0.8, 1.0, 1.2};
    double w_jerk = 0.1;
    double w_lateral = 1.0;
    double w_speed = 1.0;
    double w_risk = 2.0;
    double risk_radius = 6.0;
    /// Sample spacing of the street-network containment filter.
    double road_check_spacing = 0.5;

    void validate() const;
};

/// Dynamic state carried between planning steps of one agent.
struct FrenetMemory {
    double accel = 0.0;
    double lateral_accel = 0.0;
};

struct FrenetCandidate {
    double end_time = 0.0;
    double lateral_offset = 0.0;
    double end_speed = 0.0;
    double jerk_cost = 0.0;
    double risk = 0.0;
    double cost = 0.0;
    Trajectory trajectory;
    bool valid = true;  // false when it could not be mapped onto the route
};

/// All sampled candidates with costs, in sampling order (no filtering applied).
std::vector<FrenetCandidate> sample_frenet_candidates(const LocalView& view, const CurvilinearFrame& route,
                                                      const FrenetPlannerConfig& cfg, const VehicleParams& params,
                                                      double v_ref, const FrenetMemory& memory);

/// True when any state (offset >= 1) overlaps a neighbor's inflated predicted occupancy.
bool collides_with_predictions(const Trajectory& traj, const Shape& ego_shape, std::span<const Neighbor> neighbors);

PlanResult plan_frenet(const LocalView& view, const CurvilinearFrame& route, const FrenetPlannerConfig& cfg,
                       const VehicleParams& params, double v_ref, FrenetMemory& memory);

/// Maximal comfortable braking (0.6 a_long_max) while following the route.
PlanResult braking_fallback(const LocalView& view, const CurvilinearFrame& route, const VehicleParams& params);

// ---------------------------------------------------------------- per-agent planners

enum class PlannerKind { replay, idm, frenet };

PlannerKind planner_kind_from_string(const std::string& name);
std::string to_string(PlannerKind kind);

/// A planner bound to one agent; owns that agent's planning memory.
class Planner {
public:
    virtual ~Planner() = default;
    virtual PlanResult plan(const LocalView& view) = 0;
    virtual PlannerKind kind() const = 0;
};

class ReplayPlanner : public Planner {
public:
    explicit ReplayPlanner(std::vector<AgentState> recorded) : recorded_(std::move(recorded)) {}
    PlanResult plan(const LocalView& view) override { return plan_replay(view, recorded_, view.step); }
    PlannerKind kind() const override { return PlannerKind::replay; }

private:
    std::vector<AgentState> recorded_;
};

class IdmPlanner : public Planner {
public:
    IdmPlanner(CurvilinearFrame path, SpeedProfile desired, IdmParams idm, VehicleParams params)
        : path_(std::move(path)), desired_(std::move(desired)), idm_(idm), params_(params) {}
    PlanResult plan(const LocalView& view) override { return plan_idm(view, path_, desired_, idm_, params_); }
    PlannerKind kind() const override { return PlannerKind::idm; }
    const CurvilinearFrame& path() const { return path_; }

private:
    CurvilinearFrame path_;
    SpeedProfile desired_;
    IdmParams idm_;
    VehicleParams params_;
};

class FrenetPlanner : public Planner {
public:
    FrenetPlanner(Route route, FrenetPlannerConfig cfg, VehicleParams params, double v_ref)
        : route_(std::move(route)), cfg_(std::move(cfg)), params_(params), v_ref_(v_ref) {}
    PlanResult plan(const LocalView& view) override {
        return plan_frenet(view, route_.frame, cfg_, params_, v_ref_, memory_);
    }
    PlannerKind kind() const override { return PlannerKind::frenet; }
    const Route& route() const { return route_; }

private:
    Route route_;
    FrenetPlannerConfig cfg_;
    VehicleParams params_;
    double v_ref_;
    FrenetMemory memory_;
};

}  // namespace intersim
