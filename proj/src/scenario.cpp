#include "intersim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace intersim {

namespace {

std::string id_str(ObjectId id) { return std::to_string(id); }

double polyline_distance(const Polyline& line, Point2 p, std::size_t* segment = nullptr) {
    const auto& pts = line.points();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double d = point_segment_distance(p, pts[i], pts[i + 1]);
        if (d < best) {
            best = d;
            if (segment != nullptr) {
                *segment = i;
            }
        }
    }
    return best;
}

}  // namespace

// ---------------------------------------------------------------- Lanelet / network

Lanelet Lanelet::from_bounds(ObjectId id, Polyline left, Polyline right, std::vector<ObjectId> successors,
                             std::optional<Adjacency> adjacent_left, std::optional<Adjacency> adjacent_right) {
    if (left.size() != right.size()) {
        throw ScenarioError("lanelet " + id_str(id) + ": left and right bounds have different point counts");
    }
    Lanelet l;
    l.id = id;
    std::vector<Point2> mid;
    mid.reserve(left.size());
    for (std::size_t i = 0; i < left.size(); ++i) {
        mid.push_back(0.5 * (left.points()[i] + right.points()[i]));
    }
    std::vector<Point2> ring(left.points());
    ring.insert(ring.end(), right.points().rbegin(), right.points().rend());
    try {
        l.centerline = Polyline(std::move(mid));
        l.polygon = Polygon(std::move(ring));
    } catch (const GeometryError& e) {
        throw ScenarioError("lanelet " + id_str(id) + ": polygon formed by bounds is invalid (" + e.what() + ")");
    }
    l.left_bound = std::move(left);
    l.right_bound = std::move(right);
    l.successors = std::move(successors);
    l.adjacent_left = adjacent_left;
    l.adjacent_right = adjacent_right;
    return l;
}

StreetNetwork::StreetNetwork(std::vector<Lanelet> lanelets) : lanelets_(std::move(lanelets)) {
    std::sort(lanelets_.begin(), lanelets_.end(), [](const Lanelet& a, const Lanelet& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < lanelets_.size(); ++i) {
        if (!index_.emplace(lanelets_[i].id, i).second) {
            throw ScenarioError("duplicate lanelet id " + id_str(lanelets_[i].id));
        }
    }
    for (const auto& l : lanelets_) {
        predecessors_[l.id];
        for (ObjectId s : l.successors) {
            if (!index_.contains(s)) {
                throw ScenarioError("lanelet " + id_str(l.id) + " references unknown successor " + id_str(s));
            }
            predecessors_[s].push_back(l.id);
        }
        for (const auto& adj : {l.adjacent_left, l.adjacent_right}) {
            if (adj && !index_.contains(adj->id)) {
                throw ScenarioError("lanelet " + id_str(l.id) + " references unknown adjacent lanelet " +
                                    id_str(adj->id));
            }
        }
        polygons_.push_back(l.polygon);
    }
    for (auto& [id, preds] : predecessors_) {
        std::sort(preds.begin(), preds.end());
    }
    conflict_areas_ = intersim::conflict_areas(*this);
}

const Lanelet* StreetNetwork::find(ObjectId id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &lanelets_[it->second];
}

const Lanelet& StreetNetwork::at(ObjectId id) const {
    const Lanelet* l = find(id);
    if (l == nullptr) {
        throw ScenarioError("unknown lanelet id " + id_str(id));
    }
    return *l;
}

const std::vector<ObjectId>& StreetNetwork::predecessors(ObjectId id) const {
    static const std::vector<ObjectId> none;
    auto it = predecessors_.find(id);
    return it == predecessors_.end() ? none : it->second;
}

bool StreetNetwork::contains(Point2 p) const {
    return std::any_of(polygons_.begin(), polygons_.end(), [&](const Polygon& poly) { return poly.contains(p); });
}

std::vector<ObjectId> StreetNetwork::lanelets_at(Point2 p) const {
    std::vector<ObjectId> out;
    for (const auto& l : lanelets_) {
        if (l.polygon.contains(p)) {
            out.push_back(l.id);
        }
    }
    return out;
}

double StreetNetwork::direction_at(ObjectId id, Point2 p) const {
    const auto& line = at(id).centerline;
    std::size_t seg = 0;
    polyline_distance(line, p, &seg);
    const Point2 d = line.points()[seg + 1] - line.points()[seg];
    return std::atan2(d.y, d.x);
}

std::optional<ObjectId> StreetNetwork::localize(Point2 p, double heading, double max_distance) const {
    std::optional<ObjectId> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& l : lanelets_) {
        if (!l.polygon.contains(p)) {
            continue;
        }
        const double score = std::cos(normalize_angle(heading - direction_at(l.id, p)));
        if (score > best_score + 1e-9) {
            best_score = score;
            best = l.id;
        }
    }
    if (best) {
        return best;
    }
    double best_dist = max_distance;
    for (const auto& l : lanelets_) {
        const double d = polyline_distance(l.centerline, p);
        if (d < best_dist - 1e-9) {
            best_dist = d;
            best = l.id;
        }
    }
    return best;
}

bool StreetNetwork::are_adjacent(ObjectId a, ObjectId b) const {
    const Lanelet& la = at(a);
    const Lanelet& lb = at(b);
    auto refers = [](const Lanelet& l, ObjectId other) {
        return (l.adjacent_left && l.adjacent_left->id == other) ||
               (l.adjacent_right && l.adjacent_right->id == other);
    };
    return refers(la, b) || refers(lb, a);
}

bool StreetNetwork::is_successor(ObjectId from, ObjectId to) const {
    const auto& succ = at(from).successors;
    return std::find(succ.begin(), succ.end(), to) != succ.end();
}

std::vector<ConflictArea> conflict_areas(const StreetNetwork& network, double resolution) {
    std::vector<ConflictArea> out;
    const auto& ls = network.lanelets();
    for (std::size_t i = 0; i < ls.size(); ++i) {
        for (std::size_t j = i + 1; j < ls.size(); ++j) {
            const Lanelet& a = ls[i];
            const Lanelet& b = ls[j];
            if (network.are_adjacent(a.id, b.id) || network.is_successor(a.id, b.id) ||
                network.is_successor(b.id, a.id)) {
                continue;
            }
            const auto& pa = network.predecessors(a.id);
            const auto& pb = network.predecessors(b.id);
            const bool diverging = std::any_of(pa.begin(), pa.end(), [&](ObjectId p) {
                return std::find(pb.begin(), pb.end(), p) != pb.end();
            });
            if (diverging) {
                continue;
            }
            const Point2 lo{std::max(a.polygon.min_corner().x, b.polygon.min_corner().x),
                            std::max(a.polygon.min_corner().y, b.polygon.min_corner().y)};
            const Point2 hi{std::min(a.polygon.max_corner().x, b.polygon.max_corner().x),
                            std::min(a.polygon.max_corner().y, b.polygon.max_corner().y)};
            if (lo.x >= hi.x || lo.y >= hi.y) {
                continue;
            }
            const double h = resolution;
            const double half = 0.5 * h;
            std::vector<Point2> cell_corners;
            std::size_t hits = 0;
            for (double y = lo.y + half; y < hi.y; y += h) {
                for (double x = lo.x + half; x < hi.x; x += h) {
                    const Point2 q{x, y};
                    if (a.polygon.contains(q) && b.polygon.contains(q)) {
                        ++hits;
                        cell_corners.push_back({x - half, y - half});
                        cell_corners.push_back({x + half, y - half});
                        cell_corners.push_back({x + half, y + half});
                        cell_corners.push_back({x - half, y + half});
                    }
                }
            }
            if (hits < 2) {
                continue;
            }
            auto hull = convex_hull(std::move(cell_corners));
            if (hull.size() < 3) {
                continue;
            }
            out.push_back({a.id, b.id, Polygon(std::move(hull))});
        }
    }
    return out;
}

// ---------------------------------------------------------------- goals

GoalOutcome goal_satisfied(const GoalRegion& goal, const AgentState& state, double t) {
    if (!goal.area.contains({state.x, state.y})) {
        return GoalOutcome::not_reached;
    }
    if (goal.velocity && (state.v < goal.velocity->lo || state.v > goal.velocity->hi)) {
        return GoalOutcome::not_reached;
    }
    if (goal.orientation) {
        const double two_pi = 2.0 * std::numbers::pi;
        const double width = goal.orientation->hi - goal.orientation->lo;
        double delta = std::fmod(state.theta - goal.orientation->lo, two_pi);
        if (delta < 0.0) {
            delta += two_pi;
        }
        if (delta > width + 1e-12) {
            return GoalOutcome::not_reached;
        }
    }
    return t <= goal.t_max ? GoalOutcome::reached_in_time : GoalOutcome::reached_late;
}

std::string to_string(GoalOutcome outcome) {
    switch (outcome) {
        case GoalOutcome::reached_in_time: return "reached_in_time";
        case GoalOutcome::reached_late: return "reached_late";
        case GoalOutcome::not_reached: return "not_reached";
    }
    return "unknown";
}

// ---------------------------------------------------------------- scenario

const PlanningProblem* Scenario::problem(ObjectId id) const {
    for (const auto& p : planning_problems) {
        if (p.id == id) {
            return &p;
        }
    }
    return nullptr;
}

const DynamicObstacle* Scenario::dynamic_obstacle(ObjectId id) const {
    for (const auto& o : dynamic_obstacles) {
        if (o.id == id) {
            return &o;
        }
    }
    return nullptr;
}

void Scenario::validate() const {
    if (!(dt > 0.0)) {
        throw ScenarioError("dt must be positive");
    }
    std::set<ObjectId> ids;
    auto claim = [&](ObjectId id, const char* what) {
        if (!ids.insert(id).second) {
            throw ScenarioError(std::string("duplicate object id ") + id_str(id) + " (" + what + ")");
        }
    };
    for (const auto& o : static_obstacles) {
        claim(o.id, "static obstacle");
        if (!(o.shape.length > 0 && o.shape.width > 0)) {
            throw ScenarioError("static obstacle " + id_str(o.id) + ": shape must be positive");
        }
    }
    for (const auto& o : dynamic_obstacles) {
        claim(o.id, "dynamic obstacle");
        if (!(o.shape.length > 0 && o.shape.width > 0)) {
            throw ScenarioError("dynamic obstacle " + id_str(o.id) + ": shape must be positive");
        }
        if (o.trajectory.empty()) {
            throw ScenarioError("dynamic obstacle " + id_str(o.id) + ": trajectory is empty");
        }
        for (const auto& s : o.trajectory) {
            if (s.v < 0.0) {
                throw ScenarioError("dynamic obstacle " + id_str(o.id) + ": negative speed in trajectory");
            }
        }
    }
    for (const auto& p : planning_problems) {
        claim(p.id, "planning problem");
        try {
            p.params.validate();
        } catch (const std::invalid_argument&) {
            throw ScenarioError("planning problem " + id_str(p.id) + ": vehicle parameters must be positive");
        }
        if (!(p.goal.t_max > 0.0)) {
            throw ScenarioError("planning problem " + id_str(p.id) + ": goal t_max must be positive");
        }
        for (const auto& iv : {p.goal.velocity, p.goal.orientation}) {
            if (iv && iv->lo > iv->hi) {
                throw ScenarioError("planning problem " + id_str(p.id) + ": goal interval is empty");
            }
        }
        if (p.initial.v < 0.0) {
            throw ScenarioError("planning problem " + id_str(p.id) + ": negative initial speed");
        }
        if (!network.contains({p.initial.x, p.initial.y})) {
            throw ScenarioError("planning problem " + id_str(p.id) + ": initial state outside the street network");
        }
    }
}

Scenario substitute_agents(const Scenario& scenario, const std::set<ObjectId>& obstacle_ids,
                           const SubstitutionRule& rule) {
    Scenario out = scenario;
    for (ObjectId id : obstacle_ids) {
        auto it = std::find_if(out.dynamic_obstacles.begin(), out.dynamic_obstacles.end(),
                               [&](const DynamicObstacle& o) { return o.id == id; });
        if (it == out.dynamic_obstacles.end()) {
            throw ScenarioError("cannot substitute unknown dynamic obstacle " + id_str(id));
        }
        if (it->trajectory.size() < 2) {
            throw ScenarioError("dynamic obstacle " + id_str(id) + " is too short to derive a goal");
        }
        PlanningProblem p;
        p.id = id;
        p.initial = it->trajectory.front();
        if (it->params) {
            p.params = *it->params;
        }
        p.params.length = it->shape.length;
        p.params.width = it->shape.width;

        const AgentState& last = it->trajectory.back();
        const OrientedBox goal_box{{last.x, last.y},
                                   last.theta,
                                   it->shape.length + 2.0 * rule.longitudinal_inflation,
                                   it->shape.width + 2.0 * rule.lateral_inflation};
        const auto c = goal_box.corners();
        p.goal.area = Polygon({c.begin(), c.end()});
        const double duration = static_cast<double>(it->trajectory.size() - 1) * scenario.dt;
        p.goal.t_max = duration * rule.deadline_factor;
        p.recorded = it->trajectory;
        out.planning_problems.push_back(std::move(p));
        out.dynamic_obstacles.erase(it);
    }
    std::sort(out.planning_problems.begin(), out.planning_problems.end(),
              [](const PlanningProblem& a, const PlanningProblem& b) { return a.id < b.id; });
    return out;
}

}  // namespace intersim
