#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "intersim/dynamics.hpp"
#include "intersim/geometry.hpp"

namespace intersim {

using ObjectId = std::int64_t;

/// Scenario content violates an invariant. The message names the offending item.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario file could not be parsed; the message carries line/column or a JSON path.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Adjacency {
    ObjectId id = 0;
    bool same_direction = true;

    friend bool operator==(const Adjacency&, const Adjacency&) = default;
};

struct Lanelet {
    ObjectId id = 0;
    Polyline left_bound;
    Polyline right_bound;
    Polyline centerline;
    std::vector<ObjectId> successors;
    std::optional<Adjacency> adjacent_left;
    std::optional<Adjacency> adjacent_right;
    Polygon polygon;

    /// Builds centerline and polygon from the bounds; throws ScenarioError on bad bounds.
    static Lanelet from_bounds(ObjectId id, Polyline left, Polyline right, std::vector<ObjectId> successors,
                               std::optional<Adjacency> adjacent_left = std::nullopt,
                               std::optional<Adjacency> adjacent_right = std::nullopt);
};

struct ConflictArea {
    ObjectId first = 0;   // smaller lanelet id
    ObjectId second = 0;  // larger lanelet id
    Polygon area;         // convex
};

class StreetNetwork {
public:
    StreetNetwork() = default;
    /// Validates references and precomputes conflict areas.
    explicit StreetNetwork(std::vector<Lanelet> lanelets);

    const std::vector<Lanelet>& lanelets() const { return lanelets_; }
    const Lanelet& at(ObjectId id) const;
    const Lanelet* find(ObjectId id) const;
    const std::vector<ObjectId>& predecessors(ObjectId id) const;
    const std::vector<Polygon>& polygons() const { return polygons_; }
    const std::vector<ConflictArea>& conflict_areas() const { return conflict_areas_; }
    bool empty() const { return lanelets_.empty(); }

    bool contains(Point2 p) const;
    /// Lanelets whose polygon contains p, ascending id.
    std::vector<ObjectId> lanelets_at(Point2 p) const;
    /// Lanelet containing p whose direction best matches `heading`; otherwise the lanelet
    /// with the nearest centerline within `max_distance`.
    std::optional<ObjectId> localize(Point2 p, double heading, double max_distance = 5.0) const;
    /// Direction of a lanelet centerline at the point closest to p.
    double direction_at(ObjectId id, Point2 p) const;
    bool are_adjacent(ObjectId a, ObjectId b) const;
    bool is_successor(ObjectId from, ObjectId to) const;

private:
    std::vector<Lanelet> lanelets_;  // ascending id
    std::map<ObjectId, std::size_t> index_;
    std::map<ObjectId, std::vector<ObjectId>> predecessors_;
    std::vector<Polygon> polygons_;
    std::vector<ConflictArea> conflict_areas_;
};

/// Overlaps of crossing or merging lanelets, sampled on a grid of `resolution` meters.
/// Adjacent, consecutive and diverging (same predecessor) pairs are skipped.
std::vector<ConflictArea> conflict_areas(const StreetNetwork& network, double resolution = 0.25);

struct StaticObstacle {
    ObjectId id = 0;
    Shape shape;
    AgentState pose;  // v = 0
};

struct DynamicObstacle {
    ObjectId id = 0;
    Shape shape;
    std::vector<AgentState> trajectory;
    std::optional<VehicleParams> params;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    friend bool operator==(const Interval&, const Interval&) = default;
};

struct GoalRegion {
    Polygon area;
    std::optional<Interval> velocity;
    std::optional<Interval> orientation;
    double t_max = 0.0;
};

enum class GoalOutcome { reached_in_time, reached_late, not_reached };

GoalOutcome goal_satisfied(const GoalRegion& goal, const AgentState& state, double t);

struct PlanningProblem {
    ObjectId id = 0;
    AgentState initial;
    GoalRegion goal;
    VehicleParams params;
    /// Present for agents substituted from recorded vehicles.
    std::optional<std::vector<AgentState>> recorded;
};

struct Scenario {
    StreetNetwork network;
    std::vector<StaticObstacle> static_obstacles;
    std::vector<DynamicObstacle> dynamic_obstacles;
    std::vector<PlanningProblem> planning_problems;
    double dt = 0.1;

    /// Throws ScenarioError naming the violated invariant.
    void validate() const;
    const PlanningProblem* problem(ObjectId id) const;
    const DynamicObstacle* dynamic_obstacle(ObjectId id) const;
};

/// Goal-derivation constants used when a recorded vehicle becomes an agent.
struct SubstitutionRule {
    double longitudinal_inflation = 2.0;  // per side, meters
    double lateral_inflation = 0.5;       // per side, meters
    double deadline_factor = 1.5;
};

Scenario substitute_agents(const Scenario& scenario, const std::set<ObjectId>& obstacle_ids,
                           const SubstitutionRule& rule = {});

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Parses text, turning parse errors into ParseError with line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::filesystem::path& path);

std::string to_string(GoalOutcome outcome);

}  // namespace intersim
