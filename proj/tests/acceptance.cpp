// Acceptance suite: one line per criterion, non-zero exit when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "support.hpp"

#include "intersim/metrics.hpp"
#include "intersim/planners.hpp"

using namespace intersim;
using namespace testing;

namespace {

enum class Verdict { pass, fail, skipped };

struct Outcome {
    Verdict verdict = Verdict::fail;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

/// Fixture runs shared between criteria.
std::map<std::string, FixtureRun>& runs() {
    static std::map<std::string, FixtureRun> cache;
    return cache;
}

const FixtureRun& fixture(const std::string& name) {
    auto& c = runs();
    auto it = c.find(name);
    if (it == c.end()) {
        it = c.emplace(name, run_fixture("configs/" + name + ".json")).first;
    }
    return it->second;
}

bool reached(AgentStatus s) { return s == AgentStatus::reached_in_time || s == AgentStatus::reached_late; }

// ---------------------------------------------------------------- 1

Outcome merge_regimes() {
    const auto& a = fixture("merge_a");
    const auto& b = fixture("merge_b");
    const auto& c = fixture("merge_c");
    const double seconds = a.seconds + b.seconds + c.seconds;
    auto all = [](const FixtureRun& r, auto pred) {
        for (const auto& [id, o] : r.result.outcomes) {
            if (!pred(o.status)) {
                return false;
            }
        }
        return true;
    };
    const bool a_collides = std::any_of(a.result.outcomes.begin(), a.result.outcomes.end(),
                                        [](const auto& kv) { return kv.second.status == AgentStatus::collided; });
    const bool b_ok = all(b, reached);
    const bool c_ok = all(c, reached);
    Outcome o;
    o.verdict = a_collides && b_ok && c_ok && seconds < 60.0 ? Verdict::pass : Verdict::fail;
    o.detail = std::string("replay collided=") + (a_collides ? "yes" : "no") + ", idm all reached=" +
               (b_ok ? "yes" : "no") + ", frenet all reached=" + (c_ok ? "yes" : "no") + ", " +
               fmt("%.2f s", seconds);
    return o;
}

// ---------------------------------------------------------------- 2

RegimeRow row_for(const FixtureRun& r) {
    const MetricReport rep = evaluate(r.result, r.scenario, r.config.metrics);
    return regime_row(rep, r.config.name, r.config.substitute);
}

Outcome intersection_regimes() {
    const auto& a = fixture("intersection_a");
    const auto& b = fixture("intersection_b");
    const auto& c = fixture("intersection_c");
    const bool a_collides = std::any_of(a.result.outcomes.begin(), a.result.outcomes.end(),
                                        [](const auto& kv) { return kv.second.status == AgentStatus::collided; });
    auto no_collision = [](const FixtureRun& r) {
        return std::none_of(r.result.outcomes.begin(), r.result.outcomes.end(),
                            [](const auto& kv) { return kv.second.status == AgentStatus::collided; });
    };
    const RegimeRow rb = row_for(b);
    const RegimeRow rc = row_for(c);
    const bool et_order = rb.et && rc.et && *rb.et > *rc.et;
    const bool pet_order = std::isinf(rb.pet) && std::isfinite(rc.pet);
    Outcome o;
    o.verdict = a_collides && no_collision(b) && no_collision(c) && (et_order || pet_order) ? Verdict::pass
                                                                                             : Verdict::fail;
    o.detail = std::string("replay collided=") + (a_collides ? "yes" : "no") + ", idm ET=" +
               (rb.et ? format_metric(*rb.et) : "-") + " PET=" + format_metric(rb.pet) + ", frenet ET=" +
               (rc.et ? format_metric(*rc.et) : "-") + " PET=" + format_metric(rc.pet);
    return o;
}

// ---------------------------------------------------------------- 3

double max_offset_from_recording(const FixtureRun& r, ObjectId id) {
    const PlanningProblem* p = r.scenario.problem(id);
    const CurvilinearFrame frame = recorded_path_frame(*p->recorded);
    double worst = 0.0;
    for (const auto& s : r.result.trajectories.at(id).states) {
        worst = std::max(worst, std::abs(frame.project({s.x, s.y}).d));
    }
    return worst;
}

Outcome interaction_signature() {
    const auto& b = fixture("merge_b");
    const auto& c = fixture("merge_c");
    const ObjectId yielding = c.config.substitute.front();
    const double db = max_offset_from_recording(b, yielding);
    const double dc = max_offset_from_recording(c, yielding);
    return {dc > 0.3 && db <= 0.3 ? Verdict::pass : Verdict::fail,
            fmt("max lateral offset idm %.3f m", db) + fmt(", frenet %.3f m", dc)};
}

// ---------------------------------------------------------------- 4

Outcome determinism() {
    std::vector<RunConfig> configs;
    for (const char* n : {"merge_a", "merge_b", "merge_c", "intersection_a", "intersection_b", "intersection_c"}) {
        configs.push_back(load_run_config(source_path(std::string("configs/") + n + ".json")));
    }
    RunConfig hw = load_run_config(source_path("configs/highway.json"));
    for (ObjectId id = 300; id < 316; ++id) {
        hw.substitute.push_back(id);
    }
    hw.simulation.max_steps = 40;
    configs.push_back(hw);

    std::size_t fields = 0;
    std::size_t mismatched = 0;
    for (const auto& cfg : configs) {
        const auto one = run_config(cfg, 1);
        const auto eight = run_config(cfg, 8);
        const std::size_t n = std::max(one.result.steps.size(), eight.result.steps.size());
        for (std::size_t k = 0; k < n; ++k) {
            if (k >= one.result.steps.size() || k >= eight.result.steps.size()) {
                ++mismatched;
                continue;
            }
            const auto ja = step_to_json(one.result.steps[k]).flatten();
            const auto jb = step_to_json(eight.result.steps[k]).flatten();
            for (const auto& [key, val] : ja.items()) {
                ++fields;
                if (!jb.contains(key) || jb.at(key) != val) {
                    ++mismatched;
                }
            }
            if (jb.size() != ja.size()) {
                ++mismatched;
            }
        }
    }
    return {mismatched == 0 ? Verdict::pass : Verdict::fail,
            std::to_string(configs.size()) + " fixtures, " + std::to_string(fields) + " fields, " +
                std::to_string(mismatched) + " mismatches"};
}

// ---------------------------------------------------------------- 5

Outcome parallel_scaling() {
    const unsigned cores = std::thread::hardware_concurrency();
    if (cores < 4) {
        return {Verdict::skipped, "needs at least 4 cores, this machine reports " + std::to_string(cores) +
                                      "; scaling unverified here"};
    }
    const RunConfig cfg = load_run_config(source_path("configs/highway.json"));
    const Scenario sc = load_scenario(cfg.scenario);
    const PlannerFactory factory = [&](const Scenario& s) {
        PlannerBindings b;
        for (const auto& p : s.planning_problems) {
            b[p.id] = make_planner(s, p, cfg.spec_for(p.id));
        }
        return b;
    };
    const std::size_t workers = std::min<std::size_t>(cores, 8);
    const auto rows = benchmark(sc, factory, {16}, {1, workers}, 3, cfg.simulation);
    const double ratio = rows[1].step_mean / rows[0].step_mean;
    return {ratio <= 2.0 / 3.0 ? Verdict::pass : Verdict::fail,
            fmt("16 agents, 1 worker %.4f s/step", rows[0].step_mean) + ", " + std::to_string(workers) +
                fmt(" workers %.4f s/step", rows[1].step_mean) + fmt(", ratio %.3f", ratio)};
}

// ---------------------------------------------------------------- 6

/// Gap of two constant-acceleration vehicles integrated in 1 ms steps until contact.
double integrated_ttc(double hw, double ve, double vl, double ae, double al, double horizon) {
    const double h = 1e-3;
    double xe = 0.0;
    double xl = hw;
    const auto n = static_cast<long>(horizon / h);
    for (long i = 1; i <= n; ++i) {
        xe += ve * h + 0.5 * ae * h * h;
        ve += ae * h;
        xl += vl * h + 0.5 * al * h * h;
        vl += al * h;
        if (xl - xe <= 0.0) {
            return static_cast<double>(i) * h;
        }
    }
    return kInf;
}

Outcome ttc_oracle() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> ugap(0.5, 60.0);
    std::uniform_real_distribution<double> uv(0.0, 30.0);
    std::uniform_real_distribution<double> ua(-3.0, 3.0);
    std::uniform_real_distribution<double> uda(0.2, 3.0);
    std::bernoulli_distribution equal_accel(0.2);
    std::bernoulli_distribution sign(0.5);
    const double horizon = 250.0;
    int bad = 0;
    int finite = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double hw = ugap(rng);
        const double ve = uv(rng);
        const double vl = uv(rng);
        const double ae = ua(rng);
        const double da = equal_accel(rng) ? 0.0 : (sign(rng) ? 1.0 : -1.0) * uda(rng);
        const double al = ae + da;
        double cf = ttc_closed_form(hw, ve, vl, ae, al);
        if (cf > horizon) {
            cf = kInf;  // beyond what the integration can see
        }
        const double it = integrated_ttc(hw, ve, vl, ae, al, horizon);
        if (std::isinf(cf) || std::isinf(it)) {
            bad += std::isinf(cf) != std::isinf(it);
            continue;
        }
        ++finite;
        const double err = std::abs(cf - it);
        worst = std::max(worst, err);
        bad += err > 0.01;
    }
    return {bad == 0 ? Verdict::pass : Verdict::fail,
            "1000 instances, " + std::to_string(finite) + " finite, " + std::to_string(bad) + " disagreements" +
                fmt(", max error %.4f s", worst)};
}

// ---------------------------------------------------------------- 7

Outcome collision_oracle() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> pos(-6.0, 6.0);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> len(1.0, 6.0);
    std::uniform_real_distribution<double> wid(0.5, 3.0);
    int intersect_bad = 0;
    int distance_bad = 0;
    int overlapping = 0;
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const OrientedBox a{{pos(rng), pos(rng)}, ang(rng), len(rng), wid(rng)};
        const OrientedBox b{{pos(rng), pos(rng)}, ang(rng), len(rng), wid(rng)};
        const bool oracle = boxes_overlap_oracle(a, b);
        overlapping += oracle;
        intersect_bad += boxes_intersect(a, b) != oracle;
        const double err = std::abs(min_distance(a, b) - boxes_distance_oracle(a, b));
        worst = std::max(worst, err);
        distance_bad += err > 1e-2;
    }
    return {intersect_bad == 0 && distance_bad == 0 ? Verdict::pass : Verdict::fail,
            "500 pairs (" + std::to_string(overlapping) + " overlapping), " + std::to_string(intersect_bad) +
                " intersection and " + std::to_string(distance_bad) + " distance disagreements" +
                fmt(", max distance error %.5f m", worst)};
}

// ---------------------------------------------------------------- 8

/// Ego heads east at 10 m/s, the other car crosses northbound at 5 m/s ahead of it.
/// With `lead` = 0 the two just touch corners at t = 2 s; a positive lead lets the
/// crossing car clear the ego's front by a margin that grows with it.
Encounter crossing(double lead, double dt) {
    const std::size_t n = static_cast<std::size_t>(std::llround(3.0 / dt)) + 1;
    std::vector<AgentState> ego;
    std::vector<AgentState> other;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        ego.push_back({10.0 * t, 0.0, 10.0, 0.0});
        other.push_back({23.25, -6.75 + lead + 5.0 * t, 5.0, std::numbers::pi / 2});
    }
    const Track te = make_track(1, {4.5, 2.0}, {}, ego, dt);
    const Track to = make_track(2, {4.5, 2.0}, {}, other, dt);
    return ttce_dce(te, to, 0, dt);
}

Outcome metric_invariants() {
    std::ostringstream detail;
    bool ok = true;
    int reports = 0;
    for (const char* n : {"merge_a", "merge_b", "merge_c", "intersection_a", "intersection_b", "intersection_c"}) {
        const auto& r = fixture(n);
        const MetricReport rep = evaluate(r.result, r.scenario, r.config.metrics);
        ++reports;
        for (const auto& [id, agg] : rep.aggregates) {
            ok = ok && agg.tet >= 0.0 && agg.tet <= 1.0 && agg.tit >= 0.0 && agg.tit <= rep.config.ttc_threshold;
        }
        // Agents that hit another vehicle must show a zero closest distance.
        for (const auto& step : r.result.steps) {
            for (const auto& ev : step.collisions) {
                if (ev.other) {
                    ok = ok && rep.aggregates.at(ev.agent).min_dce == 0.0;
                }
            }
        }
    }
    detail << reports << " reports: TET/TIT bounds and zero DCE on contact " << (ok ? "hold" : "violated");

    // Closest encounter converges to the collision course as the miss distance shrinks.
    const double dt = 0.01;
    const Encounter contact = crossing(0.0, dt);
    const double ttc0 = contact.ttce;  // time of first contact on the colliding course
    bool monotone = contact.dce == 0.0 && std::abs(ttc0 - 2.0) < 1e-9;
    double previous = kInf;
    detail << "; contact at " << fmt("%.2f s", ttc0) << ", |TTCE-TTC| at DCE";
    for (double target : {2.0, 1.0, 0.5, 0.1, 0.01}) {
        double lo = 0.0;
        double hi = 10.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (crossing(mid, dt).dce < target ? lo : hi) = mid;
        }
        const Encounter e = crossing(hi, dt);
        const double gap = std::abs(e.ttce - ttc0);
        monotone = monotone && gap <= previous + 1e-12 && std::abs(e.dce - target) < 1e-6;
        previous = gap;
        detail << ' ' << format_metric(target) << ':' << fmt("%.2f", gap);
    }
    ok = ok && monotone;
    return {ok ? Verdict::pass : Verdict::fail, detail.str()};
}

// ---------------------------------------------------------------- 9

Outcome round_trip() {
    std::vector<Point2> straight;
    for (int i = 0; i <= 40; ++i) {
        straight.push_back({5.0 * i, 0.0});
    }
    std::vector<Point2> arc;
    for (int i = 0; i <= 80; ++i) {
        const double a = -0.4 + 2.0 * i / 80.0;
        arc.push_back({25.0 * std::cos(a), 25.0 * std::sin(a)});
    }
    const CurvilinearFrame frames[2] = {CurvilinearFrame(Polyline(straight)), CurvilinearFrame(Polyline(arc))};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ud(-5.0, 5.0);
    int bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const CurvilinearFrame& f = frames[i % 2];
        std::uniform_real_distribution<double> us(0.0, f.length());
        const double s = us(rng);
        const double d = ud(rng);
        const Point2 p = f.to_cartesian(s, d);
        const FrenetPoint fp = f.project(p);
        const Point2 q = f.to_cartesian(fp.s, fp.d);
        const double err = std::max({std::abs(fp.s - s), std::abs(fp.d - d), distance(p, q)});
        worst = std::max(worst, err);
        bad += err > 1e-6 || !fp.in_domain;
    }
    return {bad == 0 ? Verdict::pass : Verdict::fail,
            "10000 points, " + std::to_string(bad) + " failures" + fmt(", max error %.2e m", worst)};
}

// ---------------------------------------------------------------- 10

Outcome frenet_contract() {
    const Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    Predictor predictor(sc.network, {}, 0.1);
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> ux(110.0, 250.0);
    std::uniform_real_distribution<double> unoise(-0.5, 0.5);
    std::uniform_real_distribution<double> uhead(-0.05, 0.05);
    std::uniform_real_distribution<double> uv(3.0, 20.0);
    std::uniform_real_distribution<double> uahead(-30.0, 60.0);
    std::uniform_real_distribution<double> umem(-1.0, 1.0);
    std::uniform_int_distribution<int> ucount(0, 4);
    std::bernoulli_distribution lane(0.5);
    const VehicleParams params;
    const Shape ego_shape = params.shape();

    int winners = 0;
    int fallbacks = 0;
    int violations = 0;
    for (int i = 0; i < 200; ++i) {
        const double lane_y = lane(rng) ? 0.0 : -3.5;
        const AgentState ego{ux(rng), lane_y + unoise(rng), uv(rng), uhead(rng)};
        GoalRegion goal;
        goal.area = Polygon({{380, lane_y - 1.75}, {410, lane_y - 1.75}, {410, lane_y + 1.75}, {380, lane_y + 1.75}});
        goal.t_max = 100.0;
        const Route route = route_to_goal(sc.network, ego, goal);

        std::vector<Observation> obs{{1, ego, ego_shape}};
        const int count = ucount(rng);
        for (int j = 0; j < count; ++j) {
            const AgentState s{ego.x + uahead(rng), (lane(rng) ? 0.0 : -3.5) + unoise(rng), uv(rng), uhead(rng)};
            if (boxes_overlap_oracle(occupancy(s, {4.5, 2.0}), occupancy(ego, ego_shape))) {
                continue;
            }
            obs.push_back({10 + j, s, {4.5, 2.0}});
        }
        const Predictions preds = predictor.predict_all(obs);
        const LocalView view = make_local_view(1, obs, preds, sc.network, 100.0, 0.1, 0);
        FrenetMemory mem{umem(rng), umem(rng)};
        const PlanResult r = plan_frenet(view, route.frame, {}, params, uv(rng), mem);

        const bool is_feasible = static_cast<bool>(feasible(r.intended, params));
        const AgentState again = step(ego, r.next_input, 0.1);
        const bool consistent = std::hypot(again.x - r.next_state.x, again.y - r.next_state.y) < 1e-6;
        if (r.status == PlanStatus::infeasible) {
            ++fallbacks;
            violations += !is_feasible || !consistent;
            continue;
        }
        ++winners;
        bool overlap = false;
        for (const auto& n : view.neighbors) {
            const PredictedPath& p = *n.prediction;
            for (std::size_t k = 1; k < r.intended.states.size() && k < p.states.size(); ++k) {
                const OrientedBox mine = occupancy(r.intended.states[k], ego_shape);
                const OrientedBox theirs{{p.states[k].x, p.states[k].y}, p.states[k].theta,
                                         n.shape.length + p.pos_stddev[k], n.shape.width + p.pos_stddev[k]};
                overlap = overlap || boxes_overlap_oracle(mine, theirs);
            }
        }
        violations += !is_feasible || overlap || !consistent;
    }
    return {violations == 0 && winners > 0 ? Verdict::pass : Verdict::fail,
            "200 views: " + std::to_string(winners) + " planned, " + std::to_string(fallbacks) + " braking, " +
                std::to_string(violations) + " contract violations"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"regime reproduction (merge)", merge_regimes},
        {"regime reproduction (intersection)", intersection_regimes},
        {"interaction signature", interaction_signature},
        {"determinism across worker counts", determinism},
        {"parallel scaling", parallel_scaling},
        {"TTC oracle", ttc_oracle},
        {"collision oracle", collision_oracle},
        {"metric invariants", metric_invariants},
        {"geometry round trip", round_trip},
        {"frenet planner contract", frenet_contract},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {Verdict::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIPPED";
        failures += o.verdict == Verdict::fail;
        std::printf("criterion %zu [%s] %s: %s (%.1f s)\n", i + 1, tag, criteria[i].first.c_str(), o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
