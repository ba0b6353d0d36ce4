#include "intersim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace intersim {

namespace {

struct Extent {
    double lon;
    double lat;
};

/// Half extents of a box measured along and across a direction at relative angle `rel`.
Extent extents(const Shape& shape, double rel) {
    const double c = std::abs(std::cos(rel));
    const double s = std::abs(std::sin(rel));
    return {0.5 * (c * shape.length + s * shape.width), 0.5 * (s * shape.length + c * shape.width)};
}

struct Interval1 {
    double lo;
    double hi;
};

Interval1 project_box(const std::array<Point2, 4>& corners, Point2 axis) {
    Interval1 r{dot(corners[0], axis), dot(corners[0], axis)};
    for (const auto& c : corners) {
        const double p = dot(c, axis);
        r.lo = std::min(r.lo, p);
        r.hi = std::max(r.hi, p);
    }
    return r;
}

/// Smallest translation of `ego` along `dir` (either sign) after which the boxes are separated.
double separating_translation(const OrientedBox& ego, const OrientedBox& other, Point2 dir) {
    const auto ca = ego.corners();
    const auto cb = other.corners();
    const std::array<Point2, 4> axes{heading_vector(ego.heading), heading_vector(ego.heading + std::numbers::pi / 2),
                                     heading_vector(other.heading), heading_vector(other.heading + std::numbers::pi / 2)};
    double forward = kInf;
    double backward = kInf;
    for (const Point2& u : axes) {
        const double nu = dot(dir, u);
        if (std::abs(nu) < 1e-9) {
            continue;
        }
        const Interval1 a = project_box(ca, u);
        const Interval1 b = project_box(cb, u);
        const double push_up = std::max(0.0, b.hi - a.lo);    // move ego beyond b along +u
        const double push_down = std::max(0.0, a.hi - b.lo);  // move ego below b along -u
        if (nu > 0) {
            forward = std::min(forward, push_up / nu);
            backward = std::min(backward, push_down / nu);
        } else {
            forward = std::min(forward, push_down / -nu);
            backward = std::min(backward, push_up / -nu);
        }
    }
    return std::min(forward, backward);
}

AgentState advance(const AgentState& s, double accel, double yaw_rate, double h) {
    AgentState n = s;
    n.v = std::max(0.0, s.v + accel * h);
    const double mean_v = 0.5 * (s.v + n.v);
    n.theta = s.theta + yaw_rate * h;
    const double mid = s.theta + 0.5 * yaw_rate * h;
    n.x = s.x + mean_v * std::cos(mid) * h;
    n.y = s.y + mean_v * std::sin(mid) * h;
    return n;
}

bool finite_or_absent_max(double& acc, double v) {
    if (std::isnan(v)) {
        return false;
    }
    acc = std::max(acc, v);
    return true;
}

}  // namespace

void MetricConfig::validate() const {
    if (!(ttc_threshold > 0)) {
        throw std::invalid_argument("ttc threshold must be positive");
    }
    if (!(gating_distance > 0)) {
        throw std::invalid_argument("gating distance must be positive");
    }
    if (!(path_horizon > 0) || !(crossing_horizon > 0) || !(crossing_step > 0)) {
        throw std::invalid_argument("metric horizons and steps must be positive");
    }
}

std::string to_string(Relation r) {
    switch (r) {
        case Relation::lead_follow: return "lead_follow";
        case Relation::crossing: return "crossing";
        case Relation::oncoming_relevant: return "oncoming_relevant";
        case Relation::ignored: return "ignored";
    }
    return "unknown";
}

std::vector<double> central_difference(std::span<const double> values, double dt, bool angular) {
    const std::size_t n = values.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) {
        return out;
    }
    auto diff = [&](std::size_t hi, std::size_t lo) {
        const double d = values[hi] - values[lo];
        return angular ? normalize_angle(d) : d;
    };
    out[0] = diff(1, 0) / dt;
    out[n - 1] = diff(n - 1, n - 2) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i] = diff(i + 1, i - 1) / (2.0 * dt);
    }
    return out;
}

Track make_track(ObjectId id, const Shape& shape, const VehicleParams& params, std::vector<AgentState> states,
                 double dt) {
    Track t;
    t.id = id;
    t.shape = shape;
    t.params = params;
    t.states = std::move(states);
    std::vector<double> v;
    std::vector<double> th;
    for (const auto& s : t.states) {
        v.push_back(s.v);
        th.push_back(s.theta);
    }
    t.accel = central_difference(v, dt);
    t.yaw_rate = central_difference(th, dt, true);
    return t;
}

// ---------------------------------------------------------------- frames

FrameSelector::FrameSelector(const StreetNetwork& network, MetricConfig cfg, double dt)
    : network_(&network), cfg_(cfg), dt_(dt) {
    cfg_.validate();
}

std::vector<ObjectId> FrameSelector::start_lanelets(const AgentState& state) const {
    const Point2 p{state.x, state.y};
    const auto here = network_->lanelets_at(p);
    std::vector<ObjectId> same;
    for (ObjectId id : here) {
        if (std::cos(network_->direction_at(id, p) - state.theta) > 0.0) {
            same.push_back(id);
        }
    }
    if (!same.empty()) {
        return same;
    }
    // On an oncoming lane: measure along the neighboring lanes that run our way.
    std::set<ObjectId> own;
    for (ObjectId id : here) {
        const Lanelet& l = network_->at(id);
        for (const auto& adj : {l.adjacent_left, l.adjacent_right}) {
            if (adj && !adj->same_direction && std::cos(network_->direction_at(adj->id, p) - state.theta) > 0.0) {
                own.insert(adj->id);
            }
        }
    }
    if (!own.empty()) {
        return {own.begin(), own.end()};
    }
    if (const auto id = network_->localize(p, state.theta, 5.0)) {
        if (std::cos(network_->direction_at(*id, p) - state.theta) > 0.0) {
            return {*id};
        }
    }
    return {};
}

std::vector<std::vector<ObjectId>> FrameSelector::candidate_paths(const AgentState& state) {
    std::vector<std::vector<ObjectId>> out;
    constexpr std::size_t kMaxPaths = 32;
    std::vector<std::pair<std::vector<ObjectId>, double>> stack;
    const auto starts = start_lanelets(state);
    for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
        stack.push_back({{*it}, network_->at(*it).centerline.length()});
    }
    while (!stack.empty() && out.size() < kMaxPaths) {
        auto [path, len] = std::move(stack.back());
        stack.pop_back();
        const auto& succ = network_->at(path.back()).successors;
        if (len >= cfg_.path_horizon || succ.empty() || path.size() >= 64) {
            out.push_back(std::move(path));
            continue;
        }
        for (auto it = succ.rbegin(); it != succ.rend(); ++it) {
            if (std::find(path.begin(), path.end(), *it) != path.end()) {
                continue;  // loop in the graph
            }
            auto next = path;
            next.push_back(*it);
            stack.push_back({std::move(next), len + network_->at(*it).centerline.length()});
        }
    }
    return out;
}

const CurvilinearFrame& FrameSelector::frame(const std::vector<ObjectId>& path) {
    auto it = frames_.find(path);
    if (it != frames_.end()) {
        return *it->second;
    }
    std::vector<Polyline> parts;
    for (ObjectId id : path) {
        parts.push_back(network_->at(id).centerline);
    }
    auto f = std::make_unique<CurvilinearFrame>(extend(concatenate(parts), 20.0, 20.0));
    return *frames_.emplace(path, std::move(f)).first->second;
}

bool FrameSelector::on_oncoming_lane(const AgentState& state) const {
    const Point2 p{state.x, state.y};
    const auto here = network_->lanelets_at(p);
    if (here.empty()) {
        return false;
    }
    return std::all_of(here.begin(), here.end(), [&](ObjectId id) {
        return std::cos(network_->direction_at(id, p) - state.theta) < 0.0;
    });
}

bool FrameSelector::lanelets_cross(const std::vector<ObjectId>& mine, const std::vector<ObjectId>& theirs) const {
    std::set<ObjectId> reach(theirs.begin(), theirs.end());
    for (ObjectId id : theirs) {
        for (ObjectId s : network_->at(id).successors) {
            reach.insert(s);
        }
    }
    const std::set<ObjectId> own(mine.begin(), mine.end());
    for (const auto& ca : network_->conflict_areas()) {
        if ((own.contains(ca.first) && reach.contains(ca.second)) ||
            (own.contains(ca.second) && reach.contains(ca.first))) {
            return true;
        }
    }
    return false;
}

PairContext FrameSelector::select(const Track& agent, const Track& other, std::size_t step) {
    PairContext ctx;
    ctx.agent = agent.id;
    ctx.other = other.id;
    if (!agent.has(step) || !other.has(step)) {
        return ctx;
    }
    const AgentState& a = agent.states[step];
    const AgentState& o = other.states[step];
    ctx.v_ego = a.v;
    if (std::hypot(o.x - a.x, o.y - a.y) > cfg_.gating_distance) {
        return ctx;
    }
    ctx.overlapping = boxes_intersect(occupancy(a, agent.shape), occupancy(o, other.shape));

    const bool oncoming = std::cos(o.theta - a.theta) < -0.7;
    const auto paths = candidate_paths(a);
    std::vector<ObjectId> mine;
    for (const auto& p : paths) {
        mine.insert(mine.end(), p.begin(), p.end());
    }
    std::vector<ObjectId> theirs = network_->lanelets_at({o.x, o.y});
    if (theirs.empty()) {
        if (auto id = network_->localize({o.x, o.y}, o.theta, 5.0)) {
            theirs.push_back(*id);
        }
    }
    const bool crosses = lanelets_cross(mine, theirs);
    const bool oncoming_relevant = oncoming && (on_oncoming_lane(a) || crosses);
    if (oncoming && !oncoming_relevant) {
        if (ctx.overlapping) {
            ctx.relation = Relation::crossing;
            ctx.ttc = 0.0;
        }
        return ctx;
    }

    // Lane measurement in every candidate frame; keep the most critical.
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const CurvilinearFrame& f = frame(paths[i]);
        const FrenetPoint pa = f.project({a.x, a.y});
        const FrenetPoint po = f.project({o.x, o.y});
        if (!pa.in_domain || !po.in_domain || po.s <= pa.s) {
            continue;
        }
        const double rel_a = normalize_angle(a.theta - f.heading_at(pa.s));
        const double rel_o = normalize_angle(o.theta - f.heading_at(po.s));
        const double c_o = std::cos(rel_o);
        if (oncoming ? c_o > -0.7 : c_o < 0.7) {
            continue;
        }
        const Extent ea = extents(agent.shape, rel_a);
        const Extent eo = extents(other.shape, rel_o);
        const double lateral_gap = std::abs(po.d - pa.d);
        if (lateral_gap > ea.lat + eo.lat) {
            continue;
        }
        const double gap = std::max(0.0, (po.s - eo.lon) - (pa.s + ea.lon));
        const double ve = a.v * std::cos(rel_a);
        const double vo = o.v * c_o;
        const double t = ctx.overlapping
                             ? 0.0
                             : ttc_closed_form(gap, ve, vo, agent.accel[step] * std::cos(rel_a), other.accel[step] * c_o);
        if (!ctx.in_lane || t < ctx.ttc || (t == ctx.ttc && gap < ctx.hw)) {
            ctx.in_lane = true;
            ctx.frame = static_cast<int>(i);
            ctx.hw = gap;
            ctx.ttc = t;
            ctx.closing_speed = ve - vo;
            ctx.lateral_clearance = ea.lat + eo.lat - lateral_gap;
        }
    }

    if (crosses || ctx.overlapping) {
        const CrossingForecast fc = crossing_ttc(agent, other, step, cfg_.crossing_horizon, cfg_.crossing_step);
        if (!ctx.in_lane || fc.ttc < ctx.ttc) {
            ctx.in_lane = false;
            ctx.frame = -1;
            ctx.hw = kInf;
            ctx.ttc = fc.ttc;
            ctx.closing_speed = a.v;
            ctx.contact_distance = fc.ego_travel;
            ctx.lateral_clearance = fc.lateral_clearance;
            ctx.relation = Relation::crossing;
        }
    }
    if (ctx.in_lane) {
        ctx.relation = Relation::lead_follow;
    }
    if (ctx.relation != Relation::ignored && oncoming) {
        ctx.relation = Relation::oncoming_relevant;
    }
    return ctx;
}

// ---------------------------------------------------------------- scalar measures

double hw(const PairContext& ctx) { return ctx.in_lane ? ctx.hw : kInf; }

double thw(const PairContext& ctx) {
    const double h = hw(ctx);
    if (!std::isfinite(h) || ctx.v_ego <= 0.0) {
        return kInf;
    }
    return h / ctx.v_ego;
}

double ttc_closed_form(double hw, double v_ego, double v_lead, double a_ego, double a_lead) {
    if (hw <= 0.0) {
        return 0.0;
    }
    const double dv = v_lead - v_ego;
    const double da = a_lead - a_ego;
    if (std::abs(da) < 1e-12) {
        return dv < 0.0 ? -hw / dv : kInf;
    }
    const double disc = dv * dv - 2.0 * da * hw;
    if (disc < 0.0) {
        return kInf;
    }
    // Roots of (da/2) t^2 + dv t + hw in the cancellation-free form.
    const double q = -0.5 * (dv + std::copysign(std::sqrt(disc), dv));
    double best = kInf;
    for (double r : {q / (0.5 * da), q != 0.0 ? hw / q : kInf}) {
        if (r > 0.0 && r < best) {
            best = r;
        }
    }
    return best;
}

CrossingForecast crossing_ttc(const Track& agent, const Track& other, std::size_t step, double horizon,
                              double resolution) {
    CrossingForecast fc;
    if (!agent.has(step) || !other.has(step)) {
        return fc;
    }
    AgentState a = agent.states[step];
    AgentState o = other.states[step];
    const double aa = agent.accel[step];
    const double ya = agent.yaw_rate[step];
    const double ao = other.accel[step];
    const double yo = other.yaw_rate[step];
    const auto n = static_cast<std::size_t>(std::llround(horizon / resolution));
    double travel = 0.0;
    bool contact = false;
    for (std::size_t i = 0; i <= n; ++i) {
        const OrientedBox ba = occupancy(a, agent.shape);
        const OrientedBox bo = occupancy(o, other.shape);
        if (boxes_intersect(ba, bo)) {
            if (!contact) {
                contact = true;
                fc.ttc = static_cast<double>(i) * resolution;
                fc.ego_travel = travel;
            }
            fc.lateral_clearance = std::max(
                fc.lateral_clearance, separating_translation(ba, bo, heading_vector(a.theta + std::numbers::pi / 2)));
        } else if (contact) {
            break;
        }
        const AgentState next = advance(a, aa, ya, resolution);
        travel += std::hypot(next.x - a.x, next.y - a.y);
        a = next;
        o = advance(o, ao, yo, resolution);
    }
    return fc;
}

double ttc(const PairContext& ctx) { return ctx.ttc; }

TetTit tet_tit(std::span<const double> ttc_series, double tau, double dt, double total_time) {
    TetTit r;
    if (!(total_time > 0.0)) {
        return r;
    }
    for (double t : ttc_series) {
        if (t <= tau) {
            r.tet += dt;
            r.tit += (tau - t) * dt;
        }
    }
    r.tet /= total_time;
    r.tit /= total_time;
    return r;
}

std::vector<Encounter> ttce_dce_series(const Track& agent, const Track& other, double dt) {
    const std::size_t n = std::min(agent.size(), other.size());
    std::vector<Encounter> out(n);
    double best = kInf;
    std::size_t best_step = 0;
    for (std::size_t k = n; k-- > 0;) {
        const double d = min_distance(occupancy(agent.states[k], agent.shape), occupancy(other.states[k], other.shape));
        // <= keeps the earliest step among equal minima.
        if (d <= best) {
            best = d;
            best_step = k;
        }
        out[k] = {static_cast<double>(best_step - k) * dt, best};
    }
    return out;
}

Encounter ttce_dce(const Track& agent, const Track& other, std::size_t step, double dt) {
    const auto series = ttce_dce_series(agent, other, dt);
    return step < series.size() ? series[step] : Encounter{};
}

EtPet et_pet(const Polygon& area, const Track& agent, const Track& other, double dt) {
    EtPet r;
    for (std::size_t k = 0; k < agent.size(); ++k) {
        const bool inside = box_intersects_polygon(occupancy(agent.states[k], agent.shape), area);
        if (inside && !r.entry) {
            r.entry = k;
        }
        if (inside) {
            r.exit = k;
        } else if (r.entry) {
            break;
        }
    }
    for (std::size_t k = 0; k < other.size(); ++k) {
        if (box_intersects_polygon(occupancy(other.states[k], other.shape), area)) {
            r.other_entry = k;
            break;
        }
    }
    if (!r.entry) {
        return r;
    }
    r.et = static_cast<double>(*r.exit - *r.entry) * dt;
    if (r.other_entry && *r.other_entry >= *r.entry) {
        r.pet = *r.other_entry > *r.exit ? static_cast<double>(*r.other_entry - *r.exit) * dt : 0.0;
    }
    return r;
}

BtnStn btn_stn(const PairContext& ctx, const VehicleParams& params) {
    if (ctx.relation == Relation::ignored || !std::isfinite(ctx.ttc)) {
        return {};
    }
    if (ctx.overlapping || ctx.ttc <= 0.0) {
        return {kAbsent, kAbsent};
    }
    BtnStn r;
    const double closing = std::max(0.0, ctx.closing_speed);
    const double distance = ctx.in_lane ? ctx.hw : ctx.contact_distance;
    if (distance > 0.0 && std::isfinite(distance)) {
        r.btn = closing * closing / (2.0 * distance) / params.a_long_max;
    } else {
        r.btn = kAbsent;
    }
    r.stn = 2.0 * ctx.lateral_clearance / (ctx.ttc * ctx.ttc) / params.a_lat_max;
    return r;
}

PsdMsd psd_msd(double speed, double distance_to_area, const VehicleParams& params) {
    PsdMsd r;
    r.msd = speed * speed / (2.0 * params.a_long_max);
    if (speed > 0.0 && std::isfinite(distance_to_area)) {
        r.psd = distance_to_area / r.msd;
    }
    return r;
}

// ---------------------------------------------------------------- report

std::vector<Track> collect_tracks(const SimulationResult& result, const Scenario& scenario) {
    const std::size_t steps = result.steps.size();
    std::vector<Track> tracks;
    for (const auto& [id, traj] : result.trajectories) {
        const PlanningProblem* p = scenario.problem(id);
        const VehicleParams params = p ? p->params : VehicleParams{};
        tracks.push_back(make_track(id, params.shape(), params, traj.states, result.dt));
    }
    for (const auto& o : scenario.dynamic_obstacles) {
        std::vector<AgentState> states(o.trajectory.begin(),
                                       o.trajectory.begin() + static_cast<std::ptrdiff_t>(std::min(steps, o.trajectory.size())));
        tracks.push_back(make_track(o.id, o.shape, o.params.value_or(VehicleParams{}), std::move(states), result.dt));
    }
    for (const auto& o : scenario.static_obstacles) {
        AgentState pose = o.pose;
        pose.v = 0.0;
        tracks.push_back(make_track(o.id, o.shape, VehicleParams{}, std::vector<AgentState>(steps, pose), result.dt));
    }
    std::sort(tracks.begin(), tracks.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
    return tracks;
}

namespace {

std::set<ObjectId> visited_lanelets(const Track& t, const StreetNetwork& network) {
    std::set<ObjectId> out;
    for (const auto& s : t.states) {
        for (ObjectId id : network.lanelets_at({s.x, s.y})) {
            out.insert(id);
        }
    }
    return out;
}

}  // namespace

MetricReport evaluate(const SimulationResult& result, const Scenario& scenario, const MetricConfig& cfg) {
    cfg.validate();
    MetricReport report;
    report.config = cfg;
    report.dt = result.dt;
    const double dt = result.dt;
    const auto tracks = collect_tracks(result, scenario);
    FrameSelector selector(scenario.network, cfg, dt);
    const auto& areas = scenario.network.conflict_areas();

    std::map<ObjectId, std::set<ObjectId>> visited;
    std::map<ObjectId, std::set<ObjectId>> reachable;
    for (const auto& t : tracks) {
        visited[t.id] = visited_lanelets(t, scenario.network);
        auto& r = reachable[t.id];
        r = visited[t.id];
        for (ObjectId id : visited[t.id]) {
            for (ObjectId s : scenario.network.at(id).successors) {
                r.insert(s);
            }
        }
    }

    for (const auto& agent : tracks) {
        if (!result.trajectories.contains(agent.id)) {
            continue;
        }
        std::vector<AgentSample> samples(agent.size());
        for (std::size_t k = 0; k < agent.size(); ++k) {
            samples[k].step = k;
            samples[k].t = static_cast<double>(k) * dt;
        }

        for (const auto& other : tracks) {
            if (other.id == agent.id) {
                continue;
            }
            PairSeries pair{agent.id, other.id, {}};
            std::vector<Encounter> encounters;
            const std::size_t common = std::min(agent.size(), other.size());
            for (std::size_t k = 0; k < common; ++k) {
                const PairContext ctx = selector.select(agent, other, k);
                if (ctx.relation == Relation::ignored) {
                    continue;
                }
                if (encounters.empty()) {
                    encounters = ttce_dce_series(agent, other, dt);
                }
                PairSample s;
                s.step = k;
                s.relation = ctx.relation;
                s.hw = hw(ctx);
                s.thw = thw(ctx);
                s.ttc = ttc(ctx);
                s.ttce = encounters[k].ttce;
                s.dce = encounters[k].dce;
                const BtnStn b = btn_stn(ctx, agent.params);
                s.btn = b.btn;
                s.stn = b.stn;
                pair.samples.push_back(s);

                AgentSample& a = samples[k];
                a.hw = std::min(a.hw, s.hw);
                a.thw = std::min(a.thw, s.thw);
                a.ttc = std::min(a.ttc, s.ttc);
                if (s.dce < a.dce) {
                    a.dce = s.dce;
                    a.ttce = s.ttce;
                }
                if (std::isnan(s.btn) || std::isnan(a.btn)) {
                    a.btn = kAbsent;
                } else {
                    a.btn = std::max(a.btn, s.btn);
                }
                if (std::isnan(s.stn) || std::isnan(a.stn)) {
                    a.stn = kAbsent;
                } else {
                    a.stn = std::max(a.stn, s.stn);
                }
            }
            if (!pair.samples.empty()) {
                report.pairs.push_back(std::move(pair));
            }
        }

        // Stopping distances towards the next conflict area the agent actually enters.
        std::vector<double> arc(agent.size(), 0.0);
        for (std::size_t k = 1; k < agent.size(); ++k) {
            arc[k] = arc[k - 1] + std::hypot(agent.states[k].x - agent.states[k - 1].x,
                                             agent.states[k].y - agent.states[k - 1].y);
        }
        std::vector<std::size_t> entries;
        for (const auto& ca : areas) {
            bool prev = false;
            for (std::size_t k = 0; k < agent.size(); ++k) {
                const bool inside = box_intersects_polygon(occupancy(agent.states[k], agent.shape), ca.area);
                if (inside && !prev && k > 0) {
                    entries.push_back(k);
                }
                prev = inside;
            }
        }
        std::sort(entries.begin(), entries.end());
        for (std::size_t k = 0; k < agent.size(); ++k) {
            const auto next = std::upper_bound(entries.begin(), entries.end(), k);
            const double dist = next == entries.end() ? kInf : arc[*next] - arc[k];
            const PsdMsd pm = psd_msd(agent.states[k].v, dist, agent.params);
            samples[k].psd = pm.psd;
            samples[k].msd = pm.msd;
        }

        AgentAggregate agg;
        agg.id = agent.id;
        agg.status = result.outcomes.at(agent.id).status;
        agg.duration = static_cast<double>(agent.size()) * dt;
        std::vector<double> ttcs;
        for (const auto& s : samples) {
            ttcs.push_back(s.ttc);
            agg.min_dce = std::min(agg.min_dce, s.dce);
            agg.min_ttc = std::min(agg.min_ttc, s.ttc);
            finite_or_absent_max(agg.max_btn, s.btn);
            finite_or_absent_max(agg.max_stn, s.stn);
        }
        const TetTit tt = tet_tit(ttcs, cfg.ttc_threshold, dt, agg.duration);
        agg.tet = tt.tet;
        agg.tit = tt.tit;
        report.aggregates[agent.id] = agg;
        report.series[agent.id] = std::move(samples);

        // Conflict-area events with every vehicle whose lanes lead into the same area.
        for (const auto& ca : areas) {
            const auto& mine = visited[agent.id];
            for (const auto& other : tracks) {
                if (other.id == agent.id) {
                    continue;
                }
                const auto& theirs = reachable[other.id];
                const bool relevant = (mine.contains(ca.first) && theirs.contains(ca.second)) ||
                                      (mine.contains(ca.second) && theirs.contains(ca.first));
                if (!relevant) {
                    continue;
                }
                const EtPet ep = et_pet(ca.area, agent, other, dt);
                if (!ep.et) {
                    continue;
                }
                report.conflicts.push_back(
                    {agent.id, other.id, ca.first, ca.second, *ep.entry, *ep.exit, *ep.et, ep.pet, ep.other_entry});
            }
        }
    }
    return report;
}

RegimeRow regime_row(const MetricReport& report, const std::string& regime, std::span<const ObjectId> focus) {
    RegimeRow row;
    row.regime = regime;
    for (const auto& [id, agg] : report.aggregates) {
        row.min_dce = std::min(row.min_dce, agg.min_dce);
        row.min_ttc = std::min(row.min_ttc, agg.min_ttc);
        row.max_btn = std::max(row.max_btn, agg.max_btn);
        row.collided = row.collided || agg.status == AgentStatus::collided;
    }
    const ConflictEvent* first = nullptr;
    for (const auto& e : report.conflicts) {
        if (!focus.empty() && std::find(focus.begin(), focus.end(), e.agent) == focus.end()) {
            continue;
        }
        if (first == nullptr || e.entry < first->entry ||
            (e.entry == first->entry && (e.agent < first->agent || (e.agent == first->agent && e.other < first->other)))) {
            first = &e;
        }
    }
    if (first != nullptr) {
        row.et = first->et;
        row.pet = first->pet;
    }
    return row;
}

nlohmann::json metric_value(double v) {
    if (std::isnan(v)) {
        return nullptr;
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

std::string format_metric(double v) {
    if (std::isnan(v)) {
        return "";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

nlohmann::json report_to_json(const MetricReport& report) {
    using nlohmann::json;
    json doc;
    doc["config"] = {{"ttc_threshold", report.config.ttc_threshold},
                     {"gating_distance", report.config.gating_distance},
                     {"path_horizon", report.config.path_horizon},
                     {"crossing_horizon", report.config.crossing_horizon},
                     {"crossing_step", report.config.crossing_step}};
    doc["dt"] = report.dt;
    json aggs = json::array();
    for (const auto& [id, a] : report.aggregates) {
        aggs.push_back({{"agent", id},
                        {"status", to_string(a.status)},
                        {"duration", a.duration},
                        {"tet", metric_value(a.tet)},
                        {"tit", metric_value(a.tit)},
                        {"min_dce", metric_value(a.min_dce)},
                        {"min_ttc", metric_value(a.min_ttc)},
                        {"max_btn", metric_value(a.max_btn)},
                        {"max_stn", metric_value(a.max_stn)}});
    }
    doc["aggregates"] = aggs;
    json events = json::array();
    for (const auto& e : report.conflicts) {
        events.push_back({{"agent", e.agent},
                          {"other", e.other},
                          {"lanelets", {e.first_lanelet, e.second_lanelet}},
                          {"entry_step", e.entry},
                          {"exit_step", e.exit},
                          {"et", metric_value(e.et)},
                          {"pet", metric_value(e.pet)},
                          {"other_entry_step", e.other_entry ? json(*e.other_entry) : json(nullptr)}});
    }
    doc["conflict_events"] = events;
    json pairs = json::array();
    for (const auto& p : report.pairs) {
        json samples = json::array();
        for (const auto& s : p.samples) {
            samples.push_back({{"step", s.step},
                               {"relation", to_string(s.relation)},
                               {"hw", metric_value(s.hw)},
                               {"thw", metric_value(s.thw)},
                               {"ttc", metric_value(s.ttc)},
                               {"ttce", metric_value(s.ttce)},
                               {"dce", metric_value(s.dce)},
                               {"btn", metric_value(s.btn)},
                               {"stn", metric_value(s.stn)}});
        }
        pairs.push_back({{"agent", p.agent}, {"other", p.other}, {"samples", samples}});
    }
    doc["pairs"] = pairs;
    return doc;
}

std::string series_csv(const MetricReport& report) {
    std::ostringstream out;
    out << "agent,step,t,hw,thw,ttc,ttce,dce,btn,stn,psd,msd\n";
    for (const auto& [id, samples] : report.series) {
        for (const auto& s : samples) {
            out << id << ',' << s.step << ',' << format_metric(s.t) << ',' << format_metric(s.hw) << ','
                << format_metric(s.thw) << ',' << format_metric(s.ttc) << ',' << format_metric(s.ttce) << ','
                << format_metric(s.dce) << ',' << format_metric(s.btn) << ',' << format_metric(s.stn) << ','
                << format_metric(s.psd) << ',' << format_metric(s.msd) << '\n';
        }
    }
    return out.str();
}

std::string criticality_csv(std::span<const RegimeRow> rows) {
    std::ostringstream out;
    out << "regime,min_dce,min_ttc,max_btn,et,pet,collided\n";
    for (const auto& r : rows) {
        out << r.regime << ',' << format_metric(r.min_dce) << ',' << format_metric(r.min_ttc) << ','
            << format_metric(r.max_btn) << ',' << (r.et ? format_metric(*r.et) : std::string()) << ','
            << format_metric(r.pet) << ',' << (r.collided ? "true" : "false") << '\n';
    }
    return out.str();
}

}  // namespace intersim
