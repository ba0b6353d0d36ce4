#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <queue>

#include "intersim/planners.hpp"

namespace intersim {

Route route_to_goal(const StreetNetwork& network, const AgentState& start, const GoalRegion& goal) {
    const auto first = network.localize({start.x, start.y}, start.theta, 5.0);
    if (!first) {
        throw RoutingError("start position is not on the street network");
    }
    auto reaches_goal = [&](ObjectId id) { return polygons_overlap(network.at(id).polygon, goal.area); };

    using Entry = std::pair<double, ObjectId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::map<ObjectId, double> cost;
    std::map<ObjectId, ObjectId> parent;
    cost[*first] = 0.0;
    open.push({0.0, *first});
    std::optional<ObjectId> target;
    while (!open.empty()) {
        const auto [c, id] = open.top();
        open.pop();
        if (c > cost[id]) {
            continue;
        }
        if (reaches_goal(id)) {
            target = id;
            break;
        }
        for (ObjectId s : network.at(id).successors) {
            const double nc = c + network.at(s).centerline.length();
            auto it = cost.find(s);
            if (it == cost.end() || nc < it->second - 1e-9) {
                cost[s] = nc;
                parent[s] = id;
                open.push({nc, s});
            }
        }
    }
    if (!target) {
        throw RoutingError("goal is unreachable from lanelet " + std::to_string(*first));
    }

    Route route;
    for (ObjectId id = *target;; id = parent.at(id)) {
        route.lanelets.push_back(id);
        if (id == *first) {
            break;
        }
    }
    std::reverse(route.lanelets.begin(), route.lanelets.end());

    // Runway past the goal so sampled trajectories stay on the reference.
    std::vector<ObjectId> path = route.lanelets;
    double runway = 0.0;
    while (runway < 80.0 && path.size() < route.lanelets.size() + 4) {
        const auto& succ = network.at(path.back()).successors;
        if (succ.empty()) {
            break;
        }
        const ObjectId next = *std::min_element(succ.begin(), succ.end());
        path.push_back(next);
        runway += network.at(next).centerline.length();
    }
    std::vector<Polyline> parts;
    for (ObjectId id : path) {
        parts.push_back(network.at(id).centerline);
    }
    route.frame = CurvilinearFrame(extend(concatenate(parts), 30.0, 120.0));
    return route;
}

CurvilinearFrame recorded_path_frame(std::span<const AgentState> recorded) {
    if (recorded.empty()) {
        throw PlanningError("recorded trajectory is empty");
    }
    std::vector<Point2> pts;
    for (const auto& s : recorded) {
        const Point2 p{s.x, s.y};
        if (pts.empty() || distance(pts.back(), p) > 0.05) {
            pts.push_back(p);
        }
    }
    if (pts.size() < 2) {
        const auto& s = recorded.front();
        pts.push_back(pts.front() + heading_vector(s.theta));
    }
    return CurvilinearFrame(extend(Polyline(std::move(pts)), 20.0, 120.0));
}

}  // namespace intersim
