#include <algorithm>
#include <cmath>

#include "intersim/planners.hpp"

namespace intersim {

LocalView make_local_view(ObjectId ego_id, std::span<const Observation> observations,
                          const Predictions& predictions, const StreetNetwork& network, double radius,
                          double dt, std::size_t step) {
    LocalView view;
    view.ego_id = ego_id;
    view.network = &network;
    view.visibility_radius = radius;
    view.dt = dt;
    view.step = step;
    auto ego = std::find_if(observations.begin(), observations.end(),
                            [&](const Observation& o) { return o.id == ego_id; });
    if (ego == observations.end()) {
        throw PlanningError("ego " + std::to_string(ego_id) + " is not among the observations");
    }
    view.ego = ego->state;
    for (const auto& o : observations) {
        if (o.id == ego_id) {
            continue;
        }
        if (std::hypot(o.state.x - view.ego.x, o.state.y - view.ego.y) > radius) {
            continue;
        }
        Neighbor n{o.id, o.state, o.shape, nullptr};
        if (auto it = predictions.find(o.id); it != predictions.end()) {
            n.prediction = &it->second;
        }
        view.neighbors.push_back(n);
    }
    return view;
}

double aim_curvature(const AgentState& state, Point2 target, double arc_length) {
    if (arc_length < 1e-6) {
        return 0.0;
    }
    const Point2 chord = target - Point2{state.x, state.y};
    if (norm(chord) < 1e-9) {
        return 0.0;
    }
    const double phi = std::atan2(chord.y, chord.x);
    return 2.0 * normalize_angle(phi - state.theta) / arc_length;
}

// ---------------------------------------------------------------- replay

PlanResult plan_replay(const LocalView& view, std::span<const AgentState> recorded, std::size_t t_index) {
    if (recorded.empty()) {
        throw PlanningError("replay needs a recorded trajectory");
    }
    const double dt = view.dt;
    PlanResult r;
    const AgentState& cur = view.ego;
    if (t_index + 1 < recorded.size()) {
        r.next_state = recorded[t_index + 1];
    } else {
        r.next_state = recorded.back();
        r.next_state.v = 0.0;
    }
    r.next_input.accel = (r.next_state.v - cur.v) / dt;
    r.next_input.curvature =
        cur.v > 1e-6 ? normalize_angle(r.next_state.theta - cur.theta) / (cur.v * dt) : 0.0;

    r.intended.states.push_back(cur);
    r.intended.states.push_back(r.next_state);
    r.intended.inputs.push_back(r.next_input);
    for (std::size_t k = t_index + 2; k < recorded.size() && r.intended.states.size() < 31; ++k) {
        const AgentState& prev = r.intended.states.back();
        const AgentState& nxt = recorded[k];
        r.intended.inputs.push_back({(nxt.v - prev.v) / dt, prev.v > 1e-6
                                                                ? normalize_angle(nxt.theta - prev.theta) / (prev.v * dt)
                                                                : 0.0});
        r.intended.states.push_back(nxt);
    }
    return r;
}

// ---------------------------------------------------------------- IDM

SpeedProfile SpeedProfile::constant(double v) { return {{0.0}, {v}}; }

SpeedProfile SpeedProfile::from_recording(const CurvilinearFrame& path, std::span<const AgentState> recorded) {
    SpeedProfile p;
    for (const auto& st : recorded) {
        const double s = path.project({st.x, st.y}).s;
        if (!p.s.empty() && s <= p.s.back() + 1e-6) {
            continue;
        }
        p.s.push_back(s);
        p.v.push_back(st.v);
    }
    if (p.s.empty()) {
        p = constant(recorded.empty() ? 0.0 : recorded.front().v);
    }
    return p;
}

double SpeedProfile::at(double arc) const {
    if (s.size() == 1 || arc <= s.front()) {
        return v.front();
    }
    if (arc >= s.back()) {
        return v.back();
    }
    const auto it = std::upper_bound(s.begin(), s.end(), arc);
    const std::size_t i = static_cast<std::size_t>(it - s.begin());
    const double t = (arc - s[i - 1]) / (s[i] - s[i - 1]);
    return v[i - 1] + t * (v[i] - v[i - 1]);
}

std::optional<LeadVehicle> find_lead(const LocalView& view, const CurvilinearFrame& path,
                                     const VehicleParams& params) {
    const FrenetPoint ego = path.project({view.ego.x, view.ego.y});
    const double ego_front = ego.s + 0.5 * params.length;
    std::optional<LeadVehicle> best;

    for (const auto& n : view.neighbors) {
        auto extents = [&](const AgentState& st, double s) {
            const double rel = normalize_angle(st.theta - path.heading_at(s));
            const double c = std::abs(std::cos(rel));
            const double sn = std::abs(std::sin(rel));
            const double lon = 0.5 * (c * n.shape.length + sn * n.shape.width);
            const double lat = 0.5 * (sn * n.shape.length + c * n.shape.width);
            return std::pair{lon, lat};
        };
        auto overlapping = [&](const AgentState& st, FrenetPoint& fp, double& lon) {
            fp = path.project({st.x, st.y});
            if (!fp.in_domain) {
                return false;
            }
            const auto [lo, la] = extents(st, fp.s);
            lon = lo;
            return std::abs(fp.d - ego.d) <= 0.5 * params.width + la;
        };

        FrenetPoint fp0;
        double lon0 = 0.0;
        if (overlapping(n.state, fp0, lon0) && fp0.s <= ego.s) {
            continue;  // on the path behind the ego
        }
        std::span<const AgentState> future;
        if (n.prediction != nullptr) {
            future = n.prediction->states;
        } else {
            future = std::span<const AgentState>(&n.state, 1);
        }
        std::optional<LeadVehicle> cand;
        for (const auto& st : future) {
            FrenetPoint fp;
            double lon = 0.0;
            if (!overlapping(st, fp, lon)) {
                continue;
            }
            const double rear = fp.s - lon;
            if (fp.s <= ego.s) {
                continue;
            }
            const double gap = rear - ego_front;
            if (!cand || gap < cand->gap) {
                const double along = st.v * std::cos(normalize_angle(st.theta - path.heading_at(fp.s)));
                cand = LeadVehicle{n.id, gap, along};
            }
        }
        if (cand && (!best || cand->gap < best->gap || (cand->gap == best->gap && cand->id < best->id))) {
            best = cand;
        }
    }
    return best;
}

double idm_acceleration(double v, double v0, std::optional<LeadVehicle> lead, const IdmParams& p) {
    const double free_term = 1.0 - std::pow(v / v0, 4.0);
    if (!lead) {
        return p.a_max * free_term;
    }
    const double dv = v - lead->speed;
    const double s_star =
        p.min_gap + std::max(0.0, v * p.time_headway + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comfort)));
    const double gap = std::max(lead->gap, 0.1);
    return p.a_max * (free_term - (s_star / gap) * (s_star / gap));
}

PlanResult plan_idm(const LocalView& view, const CurvilinearFrame& path, const SpeedProfile& desired,
                    const IdmParams& idm, const VehicleParams& params) {
    const AgentState& ego = view.ego;
    const FrenetPoint fp = path.project({ego.x, ego.y});
    if (!fp.in_domain || std::abs(fp.d) > 2.0) {
        throw PlanningError("ego is off its fixed path");
    }
    const double dt = view.dt;
    const double v0 = std::max(desired.at(fp.s), idm.min_desired_speed);
    const auto lead = find_lead(view, path, params);

    double a = idm_acceleration(ego.v, v0, lead, idm);
    a = std::clamp(a, -params.a_long_max, params.a_long_max);
    a = std::min(a, (params.v_max - ego.v) / dt);
    a = std::max(a, -ego.v / dt);

    PlanResult r;
    r.next_input.accel = a;
    const double v_next = std::max(0.0, ego.v + a * dt);
    const double arc = 0.5 * (ego.v + v_next) * dt;
    const double target_s = std::min(fp.s + arc, path.length());
    r.next_input.curvature =
        std::clamp(aim_curvature(ego, path.to_cartesian(target_s, 0.0), arc), -params.kappa_max, params.kappa_max);
    r.next_state = step(ego, r.next_input, dt);

    r.intended.states.push_back(ego);
    r.intended.inputs.push_back(r.next_input);
    r.intended.states.push_back(r.next_state);
    return r;
}

// ---------------------------------------------------------------- kinds

PlannerKind planner_kind_from_string(const std::string& name) {
    if (name == "replay") {
        return PlannerKind::replay;
    }
    if (name == "idm") {
        return PlannerKind::idm;
    }
    if (name == "frenet") {
        return PlannerKind::frenet;
    }
    throw std::invalid_argument("unknown planner '" + name + "' (expected replay, idm or frenet)");
}

std::string to_string(PlannerKind kind) {
    switch (kind) {
        case PlannerKind::replay: return "replay";
        case PlannerKind::idm: return "idm";
        case PlannerKind::frenet: return "frenet";
    }
    return "unknown";
}

}  // namespace intersim
