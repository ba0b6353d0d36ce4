#include <algorithm>
#include <cmath>
#include <numeric>

#include "intersim/planners.hpp"

namespace intersim {

namespace {

/// s(t) = s0 + v0 t + a0/2 t^2 + c3 t^3 + c4 t^4 reaching speed v1 with zero acceleration at T.
struct Quartic {
    double c0, c1, c2, c3, c4;

    Quartic(double s0, double v0, double a0, double v1, double T) : c0(s0), c1(v0), c2(0.5 * a0) {
        // 3T^2 c3 + 4T^3 c4 = v1 - v0 - a0 T ;  6T c3 + 12T^2 c4 = -a0
        const double r1 = v1 - v0 - a0 * T;
        const double r2 = -a0;
        const double det = 3 * T * T * 12 * T * T - 4 * T * T * T * 6 * T;  // 12 T^4
        c3 = (r1 * 12 * T * T - 4 * T * T * T * r2) / det;
        c4 = (3 * T * T * r2 - 6 * T * r1) / det;
    }
    double pos(double t) const { return c0 + t * (c1 + t * (c2 + t * (c3 + t * c4))); }
    double vel(double t) const { return c1 + t * (2 * c2 + t * (3 * c3 + t * 4 * c4)); }
    double acc(double t) const { return 2 * c2 + t * (6 * c3 + t * 12 * c4); }
    double jerk(double t) const { return 6 * c3 + 24 * c4 * t; }
};

/// d(t) quintic from (d0, d1, d2) to (dT, 0, 0) at T.
struct Quintic {
    double c0, c1, c2, c3, c4, c5;

    Quintic(double d0, double v0, double a0, double dT, double T) : c0(d0), c1(v0), c2(0.5 * a0) {
        const double T2 = T * T;
        const double T3 = T2 * T;
        const double T4 = T3 * T;
        const double T5 = T4 * T;
        const double h0 = dT - (c0 + c1 * T + c2 * T2);
        const double h1 = -(c1 + 2 * c2 * T);
        const double h2 = -(2 * c2);
        c3 = (20 * h0 - 8 * h1 * T + h2 * T2) / (2 * T3);
        c4 = (-30 * h0 + 14 * h1 * T - 2 * h2 * T2) / (2 * T4);
        c5 = (12 * h0 - 6 * h1 * T + h2 * T2) / (2 * T5);
    }
    double pos(double t) const { return c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5)))); }
    double vel(double t) const { return c1 + t * (2 * c2 + t * (3 * c3 + t * (4 * c4 + t * 5 * c5))); }
    double acc(double t) const { return 2 * c2 + t * (6 * c3 + t * (12 * c4 + t * 20 * c5)); }
    double jerk(double t) const { return 6 * c3 + t * (24 * c4 + t * 60 * c5); }
};

OrientedBox inflated(const AgentState& st, const Shape& shape, double sigma) {
    return {{st.x, st.y}, st.theta, shape.length + sigma, shape.width + sigma};
}

bool leaves_network(const Trajectory& traj, const Shape& shape, const StreetNetwork& network, double spacing) {
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        if (!box_inside_region(occupancy(traj.states[k], shape), network.polygons(), spacing)) {
            return true;
        }
    }
    return false;
}

struct InitialFrenet {
    FrenetPoint fp;
    double s_dot = 0.0;
    double d_dot = 0.0;
};

InitialFrenet initial_frenet(const AgentState& ego, const CurvilinearFrame& route) {
    InitialFrenet out;
    out.fp = route.project({ego.x, ego.y});
    const double rel = normalize_angle(ego.theta - route.heading_at(out.fp.s));
    const double kappa = route.curvature_at(out.fp.s);
    out.s_dot = ego.v * std::cos(rel) / std::max(0.1, 1.0 - kappa * out.fp.d);
    out.d_dot = ego.v * std::sin(rel);
    return out;
}

}  // namespace

void FrenetPlannerConfig::validate() const {
    if (end_times.empty() || lateral_offsets.empty() || speed_fractions.empty()) {
        throw std::invalid_argument("frenet sample sets must be non-empty");
    }
    if (w_jerk < 0 || w_lateral < 0 || w_speed < 0 || w_risk < 0) {
        throw std::invalid_argument("frenet cost weights must be non-negative");
    }
    if (!(risk_radius > 0) || !(road_check_spacing > 0)) {
        throw std::invalid_argument("risk radius and road check spacing must be positive");
    }
    for (double t : end_times) {
        if (!(t > 0)) {
            throw std::invalid_argument("frenet end times must be positive");
        }
    }
}

bool collides_with_predictions(const Trajectory& traj, const Shape& ego_shape, std::span<const Neighbor> neighbors) {
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const OrientedBox ego = occupancy(traj.states[k], ego_shape);
        for (const auto& n : neighbors) {
            if (n.prediction == nullptr || k >= n.prediction->states.size()) {
                continue;
            }
            if (boxes_intersect(ego, inflated(n.prediction->states[k], n.shape, n.prediction->pos_stddev[k]))) {
                return true;
            }
        }
    }
    return false;
}

std::vector<FrenetCandidate> sample_frenet_candidates(const LocalView& view, const CurvilinearFrame& route,
                                                      const FrenetPlannerConfig& cfg, const VehicleParams& params,
                                                      double v_ref, const FrenetMemory& memory) {
    const AgentState& ego = view.ego;
    const double dt = view.dt;
    const auto [fp, s_dot, d_dot] = initial_frenet(ego, route);

    std::vector<FrenetCandidate> out;
    out.reserve(cfg.end_times.size() * cfg.lateral_offsets.size() * cfg.speed_fractions.size());
    for (double T : cfg.end_times) {
        const auto steps = static_cast<std::size_t>(std::llround(T / dt));
        for (double d_end : cfg.lateral_offsets) {
            const Quintic lat(fp.d, d_dot, memory.lateral_accel, d_end, T);
            for (double frac : cfg.speed_fractions) {
                FrenetCandidate c;
                c.end_time = T;
                c.lateral_offset = d_end;
                c.end_speed = frac * v_ref;
                const Quartic lon(fp.s, s_dot, memory.accel, c.end_speed, T);

                AgentState cur = ego;
                c.trajectory.states.reserve(steps + 1);
                c.trajectory.inputs.reserve(steps);
                c.trajectory.states.push_back(cur);
                for (std::size_t k = 1; k <= steps && c.valid; ++k) {
                    const double t = static_cast<double>(k) * dt;
                    const double s = lon.pos(t);
                    const double ds = lon.vel(t);
                    const double d = lat.pos(t);
                    if (ds < -1e-9 || s > route.length()) {
                        c.valid = false;
                        break;
                    }
                    Point2 target;
                    try {
                        target = route.to_cartesian(s, d);
                    } catch (const std::exception&) {
                        c.valid = false;
                        break;
                    }
                    const double k_ref = route.curvature_at(s);
                    const double speed = std::hypot(std::max(0.0, ds) * (1.0 - k_ref * d), lat.vel(t));
                    ControlInput u;
                    u.accel = (speed - cur.v) / dt;
                    const double arc = 0.5 * (cur.v + std::max(0.0, cur.v + u.accel * dt)) * dt;
                    // At crawl speed the one-step aim asks for unbounded curvature.
                    u.curvature = std::clamp(aim_curvature(cur, target, arc), -params.kappa_max, params.kappa_max);
                    cur = step(cur, u, dt);
                    c.trajectory.inputs.push_back(u);
                    c.trajectory.states.push_back(cur);
                }
                if (!c.valid) {
                    out.push_back(std::move(c));
                    continue;
                }

                for (std::size_t k = 0; k < steps; ++k) {
                    const double t = static_cast<double>(k) * dt;
                    c.jerk_cost += (lon.jerk(t) * lon.jerk(t) + lat.jerk(t) * lat.jerk(t)) * dt;
                }
                const double r2 = cfg.risk_radius * cfg.risk_radius;
                for (std::size_t k = 1; k < c.trajectory.states.size(); ++k) {
                    const AgentState& st = c.trajectory.states[k];
                    for (const auto& n : view.neighbors) {
                        if (n.prediction == nullptr || k >= n.prediction->states.size()) {
                            continue;
                        }
                        const AgentState& o = n.prediction->states[k];
                        const double dx = st.x - o.x;
                        const double dy = st.y - o.y;
                        c.risk += std::exp(-(dx * dx + dy * dy) / r2);
                    }
                }
                const double dv = c.end_speed - v_ref;
                c.cost = cfg.w_jerk * c.jerk_cost + cfg.w_lateral * d_end * d_end + cfg.w_speed * dv * dv +
                         cfg.w_risk * c.risk;
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

PlanResult braking_fallback(const LocalView& view, const CurvilinearFrame& route, const VehicleParams& params) {
    const double dt = view.dt;
    const double decel = 0.6 * params.a_long_max;
    PlanResult r;
    r.status = PlanStatus::infeasible;
    AgentState cur = view.ego;
    const double d_keep = route.project({cur.x, cur.y}).d;
    r.intended.states.push_back(cur);
    const auto horizon = static_cast<std::size_t>(std::llround(3.0 / dt));
    for (std::size_t k = 0; k < horizon; ++k) {
        ControlInput u;
        u.accel = std::max(-decel, -cur.v / dt);
        // Pure pursuit on a lookahead point; aiming one step ahead overshoots.
        const double lookahead = std::max(4.0, cur.v);
        const FrenetPoint fp = route.project({cur.x, cur.y});
        const double s = std::clamp(fp.s + lookahead, 0.0, route.length());
        Point2 target;
        try {
            target = route.to_cartesian(s, d_keep);
        } catch (const std::exception&) {
            target = route.to_cartesian(s, 0.0);
        }
        const Point2 chord = target - Point2{cur.x, cur.y};
        const double dist = norm(chord);
        const double alpha = normalize_angle(std::atan2(chord.y, chord.x) - cur.theta);
        u.curvature = dist > 1e-6 ? std::clamp(2.0 * std::sin(alpha) / dist, -params.kappa_max, params.kappa_max)
                                  : 0.0;
        cur = step(cur, u, dt);
        r.intended.inputs.push_back(u);
        r.intended.states.push_back(cur);
        if (cur.v <= 0.0) {
            break;
        }
    }
    r.next_input = r.intended.inputs.front();
    r.next_state = r.intended.states[1];
    return r;
}

PlanResult plan_frenet(const LocalView& view, const CurvilinearFrame& route, const FrenetPlannerConfig& cfg,
                       const VehicleParams& params, double v_ref, FrenetMemory& memory) {
    if (route.empty()) {
        throw PlanningError("frenet planner needs a non-empty route");
    }
    if (view.network == nullptr) {
        throw PlanningError("local view has no street network");
    }
    if (!route.project({view.ego.x, view.ego.y}).in_domain) {
        throw PlanningError("ego cannot be projected onto its route");
    }

    auto candidates = sample_frenet_candidates(view, route, cfg, params, v_ref, memory);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].cost < candidates[b].cost; });

    const Shape shape = params.shape();
    for (std::size_t idx : order) {
        FrenetCandidate& c = candidates[idx];
        if (!c.valid || !feasible(c.trajectory, params)) {
            continue;
        }
        if (collides_with_predictions(c.trajectory, shape, view.neighbors)) {
            continue;
        }
        if (leaves_network(c.trajectory, shape, *view.network, cfg.road_check_spacing)) {
            continue;
        }
        PlanResult r;
        r.next_state = c.trajectory.states[1];
        r.next_input = c.trajectory.inputs[0];
        r.intended = std::move(c.trajectory);
        const auto init = initial_frenet(view.ego, route);
        const Quartic lon(init.fp.s, init.s_dot, memory.accel, c.end_speed, c.end_time);
        const Quintic lat(init.fp.d, init.d_dot, memory.lateral_accel, c.lateral_offset, c.end_time);
        memory.accel = lon.acc(view.dt);
        memory.lateral_accel = lat.acc(view.dt);
        return r;
    }
    memory = {};
    return braking_fallback(view, route, params);
}

}  // namespace intersim
