#include "intersim/run_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace intersim {

using nlohmann::json;

// ---------------------------------------------------------------- step logs

json step_to_json(const StepLog& log) {
    json agents = json::array();
    for (const auto& a : log.agents) {
        agents.push_back({{"id", a.id},
                          {"state", {a.state.x, a.state.y, a.state.v, a.state.theta}},
                          {"input", a.input ? json{a.input->accel, a.input->curvature} : json(nullptr)},
                          {"status", to_string(a.status)},
                          {"plan", a.plan_status == PlanStatus::ok ? "ok" : "infeasible"}});
    }
    json collisions = json::array();
    for (const auto& c : log.collisions) {
        collisions.push_back({{"agent", c.agent}, {"other", c.other ? json(*c.other) : json("road")}});
    }
    return {{"step", log.step}, {"t", log.t}, {"agents", agents}, {"collisions", collisions}};
}

json timings_to_json(const StepLog& log) {
    return {{"step", log.step},
            {"collision", log.timings.collision},
            {"prediction", log.timings.prediction},
            {"batch_planning", log.timings.batch_planning},
            {"total", log.timings.total}};
}

json summary_to_json(const SimulationResult& result) {
    json agents = json::object();
    for (const auto& [id, o] : result.outcomes) {
        agents[std::to_string(id)] = {{"status", to_string(o.status)},
                                      {"terminal_step", o.terminal_step ? json(*o.terminal_step) : json(nullptr)}};
    }
    std::size_t collisions = 0;
    for (const auto& s : result.steps) {
        collisions += s.collisions.size();
    }
    return {{"dt", result.dt}, {"steps", result.steps.size()}, {"collision_events", collisions}, {"agents", agents}};
}

StepLog step_from_json(const json& doc) {
    StepLog log;
    log.step = doc.at("step").get<std::size_t>();
    log.t = doc.at("t").get<double>();
    for (const auto& a : doc.at("agents")) {
        AgentRecord r;
        r.id = a.at("id").get<ObjectId>();
        const auto& s = a.at("state");
        r.state = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>(), s.at(3).get<double>()};
        if (!a.at("input").is_null()) {
            r.input = ControlInput{a["input"].at(0).get<double>(), a["input"].at(1).get<double>()};
        }
        r.status = agent_status_from_string(a.at("status").get<std::string>());
        r.plan_status = a.at("plan").get<std::string>() == "ok" ? PlanStatus::ok : PlanStatus::infeasible;
        log.agents.push_back(r);
    }
    for (const auto& c : doc.at("collisions")) {
        CollisionEvent e;
        e.agent = c.at("agent").get<ObjectId>();
        if (c.at("other").is_number_integer()) {
            e.other = c["other"].get<ObjectId>();
        }
        log.collisions.push_back(e);
    }
    return log;
}

SimulationResult load_result(const std::filesystem::path& dir) {
    const auto summary_path = dir / "summary.json";
    const auto steps_path = dir / "steps.jsonl";
    if (!std::filesystem::exists(summary_path) || !std::filesystem::exists(steps_path)) {
        throw LogError("run directory " + dir.string() + " lacks summary.json or steps.jsonl");
    }
    const json summary = read_json_file(summary_path);
    SimulationResult result;
    result.dt = summary.at("dt").get<double>();
    std::ifstream in(steps_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        StepLog log;
        try {
            log = step_from_json(parse_json_text(line, steps_path.string() + ":" + std::to_string(line_no)));
        } catch (const std::exception& e) {
            throw LogError("bad step record at " + steps_path.string() + ":" + std::to_string(line_no) + ": " +
                           e.what());
        }
        if (log.step != result.steps.size()) {
            throw LogError("step records out of order at line " + std::to_string(line_no));
        }
        result.steps.push_back(std::move(log));
    }
    if (result.steps.size() != summary.at("steps").get<std::size_t>()) {
        throw LogError("steps.jsonl holds " + std::to_string(result.steps.size()) + " records, summary expects " +
                       std::to_string(summary.at("steps").get<std::size_t>()));
    }
    for (const auto& [key, o] : summary.at("agents").items()) {
        const ObjectId id = std::stoll(key);
        AgentOutcome out;
        out.status = agent_status_from_string(o.at("status").get<std::string>());
        if (!o.at("terminal_step").is_null()) {
            out.terminal_step = o["terminal_step"].get<std::size_t>();
        }
        result.outcomes[id] = out;
        result.trajectories[id] = {};
    }
    for (const auto& log : result.steps) {
        for (const auto& a : log.agents) {
            auto it = result.trajectories.find(a.id);
            if (it == result.trajectories.end()) {
                throw LogError("step " + std::to_string(log.step) + " mentions unknown agent " + std::to_string(a.id));
            }
            it->second.states.push_back(a.state);
            if (a.input) {
                it->second.inputs.push_back(*a.input);
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------- run configuration

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    throw ConfigError("config error at " + (path.empty() ? std::string("/") : path) + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        config_error(path, "expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            config_error(path + "/" + key, "unknown key");
        }
    }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& path) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_number()) {
        config_error(path + "/" + key, "expected a number");
    }
    return obj[key].get<double>();
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback, const std::string& path) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_number_unsigned()) {
        config_error(path + "/" + key, "expected a non-negative integer");
    }
    return obj[key].get<std::size_t>();
}

std::vector<double> get_numbers(const json& obj, const char* key, std::vector<double> fallback,
                                const std::string& path) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_array()) {
        config_error(path + "/" + key, "expected an array of numbers");
    }
    std::vector<double> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number()) {
            config_error(path + "/" + key, "expected an array of numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

AgentSpec parse_agent(const json& obj, const AgentSpec& base, const std::string& path) {
    check_keys(obj, path, {"planner", "v_ref", "idm", "frenet"});
    AgentSpec spec = base;
    if (obj.contains("planner")) {
        if (!obj["planner"].is_string()) {
            config_error(path + "/planner", "expected replay, idm or frenet");
        }
        try {
            spec.planner = planner_kind_from_string(obj["planner"].get<std::string>());
        } catch (const std::invalid_argument& e) {
            config_error(path + "/planner", e.what());
        }
    }
    if (obj.contains("v_ref") && !obj.at("v_ref").is_null()) {
        spec.v_ref = get_number(obj, "v_ref", 0.0, path);
        if (!(*spec.v_ref > 0.0)) {
            config_error(path + "/v_ref", "must be positive");
        }
    }
    if (obj.contains("idm")) {
        const json& o = obj["idm"];
        const std::string p = path + "/idm";
        check_keys(o, p, {"a_max", "b_comfort", "time_headway", "min_gap", "min_desired_speed"});
        spec.idm.a_max = get_number(o, "a_max", spec.idm.a_max, p);
        spec.idm.b_comfort = get_number(o, "b_comfort", spec.idm.b_comfort, p);
        spec.idm.time_headway = get_number(o, "time_headway", spec.idm.time_headway, p);
        spec.idm.min_gap = get_number(o, "min_gap", spec.idm.min_gap, p);
        spec.idm.min_desired_speed = get_number(o, "min_desired_speed", spec.idm.min_desired_speed, p);
        if (!(spec.idm.a_max > 0) || !(spec.idm.b_comfort > 0) || spec.idm.time_headway < 0 || spec.idm.min_gap < 0) {
            config_error(p, "IDM parameters must be positive");
        }
    }
    if (obj.contains("frenet")) {
        const json& o = obj["frenet"];
        const std::string p = path + "/frenet";
        check_keys(o, p, {"end_times", "lateral_offsets", "speed_fractions", "w_jerk", "w_lateral", "w_speed",
                          "w_risk", "risk_radius", "road_check_spacing"});
        auto& f = spec.frenet;
        f.end_times = get_numbers(o, "end_times", f.end_times, p);
        f.lateral_offsets = get_numbers(o, "lateral_offsets", f.lateral_offsets, p);
        f.speed_fractions = get_numbers(o, "speed_fractions", f.speed_fractions, p);
        f.w_jerk = get_number(o, "w_jerk", f.w_jerk, p);
        f.w_lateral = get_number(o, "w_lateral", f.w_lateral, p);
        f.w_speed = get_number(o, "w_speed", f.w_speed, p);
        f.w_risk = get_number(o, "w_risk", f.w_risk, p);
        f.risk_radius = get_number(o, "risk_radius", f.risk_radius, p);
        f.road_check_spacing = get_number(o, "road_check_spacing", f.road_check_spacing, p);
        try {
            f.validate();
        } catch (const std::invalid_argument& e) {
            config_error(p, e.what());
        }
    }
    return spec;
}

json agent_to_json(const AgentSpec& s) {
    const auto& f = s.frenet;
    return {{"planner", to_string(s.planner)},
            {"v_ref", s.v_ref ? json(*s.v_ref) : json(nullptr)},
            {"idm",
             {{"a_max", s.idm.a_max},
              {"b_comfort", s.idm.b_comfort},
              {"time_headway", s.idm.time_headway},
              {"min_gap", s.idm.min_gap},
              {"min_desired_speed", s.idm.min_desired_speed}}},
            {"frenet",
             {{"end_times", f.end_times},
              {"lateral_offsets", f.lateral_offsets},
              {"speed_fractions", f.speed_fractions},
              {"w_jerk", f.w_jerk},
              {"w_lateral", f.w_lateral},
              {"w_speed", f.w_speed},
              {"w_risk", f.w_risk},
              {"risk_radius", f.risk_radius},
              {"road_check_spacing", f.road_check_spacing}}}};
}

}  // namespace

const AgentSpec& RunConfig::spec_for(ObjectId id) const {
    auto it = agents.find(id);
    return it == agents.end() ? default_agent : it->second;
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, "", {"name", "scenario", "substitute", "agents", "default_agent", "simulation", "predictor",
                         "metrics"});
    RunConfig cfg;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) {
            config_error("/name", "expected a string");
        }
        cfg.name = doc["name"].get<std::string>();
    }
    if (!doc.contains("scenario") || !doc["scenario"].is_string()) {
        config_error("/scenario", "expected the scenario file path");
    }
    cfg.scenario = base_dir / doc["scenario"].get<std::string>();
    if (doc.contains("substitute")) {
        if (!doc["substitute"].is_array()) {
            config_error("/substitute", "expected an array of obstacle ids");
        }
        for (const auto& v : doc["substitute"]) {
            if (!v.is_number_integer()) {
                config_error("/substitute", "expected integer ids");
            }
            cfg.substitute.push_back(v.get<ObjectId>());
        }
    }
    if (doc.contains("default_agent")) {
        cfg.default_agent = parse_agent(doc["default_agent"], cfg.default_agent, "/default_agent");
    }
    if (doc.contains("agents")) {
        if (!doc["agents"].is_object()) {
            config_error("/agents", "expected an object keyed by agent id");
        }
        for (const auto& [key, value] : doc["agents"].items()) {
            ObjectId id = 0;
            try {
                std::size_t used = 0;
                id = std::stoll(key, &used);
                if (used != key.size()) {
                    throw std::invalid_argument(key);
                }
            } catch (const std::exception&) {
                config_error("/agents/" + key, "agent keys must be integer ids");
            }
            cfg.agents[id] = parse_agent(value, cfg.default_agent, "/agents/" + key);
        }
    }
    if (doc.contains("simulation")) {
        const json& s = doc["simulation"];
        check_keys(s, "/simulation", {"dt", "max_steps", "visibility_radius", "worker_count", "batch_count"});
        cfg.simulation.dt = get_number(s, "dt", cfg.simulation.dt, "/simulation");
        cfg.simulation.max_steps = get_count(s, "max_steps", cfg.simulation.max_steps, "/simulation");
        cfg.simulation.visibility_radius =
            get_number(s, "visibility_radius", cfg.simulation.visibility_radius, "/simulation");
        cfg.worker_count_given = s.contains("worker_count");
        cfg.simulation.worker_count = get_count(s, "worker_count", cfg.simulation.worker_count, "/simulation");
        cfg.simulation.batch_count = get_count(s, "batch_count", cfg.simulation.batch_count, "/simulation");
    }
    if (doc.contains("predictor")) {
        const json& p = doc["predictor"];
        check_keys(p, "/predictor", {"horizon", "growth_rate"});
        cfg.simulation.predictor.horizon = get_number(p, "horizon", cfg.simulation.predictor.horizon, "/predictor");
        cfg.simulation.predictor.growth_rate =
            get_number(p, "growth_rate", cfg.simulation.predictor.growth_rate, "/predictor");
    }
    if (doc.contains("metrics")) {
        const json& m = doc["metrics"];
        check_keys(m, "/metrics", {"ttc_threshold", "gating_distance", "path_horizon", "crossing_horizon",
                                   "crossing_step"});
        cfg.metrics.ttc_threshold = get_number(m, "ttc_threshold", cfg.metrics.ttc_threshold, "/metrics");
        cfg.metrics.gating_distance = get_number(m, "gating_distance", cfg.metrics.gating_distance, "/metrics");
        cfg.metrics.path_horizon = get_number(m, "path_horizon", cfg.metrics.path_horizon, "/metrics");
        cfg.metrics.crossing_horizon = get_number(m, "crossing_horizon", cfg.metrics.crossing_horizon, "/metrics");
        cfg.metrics.crossing_step = get_number(m, "crossing_step", cfg.metrics.crossing_step, "/metrics");
    }
    try {
        cfg.simulation.validate();
        cfg.metrics.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = read_json_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

json run_config_to_json(const RunConfig& cfg) {
    json agents = json::object();
    for (const auto& [id, spec] : cfg.agents) {
        agents[std::to_string(id)] = agent_to_json(spec);
    }
    const auto& s = cfg.simulation;
    return {{"name", cfg.name},
            {"scenario", cfg.scenario.lexically_normal().generic_string()},
            {"substitute", cfg.substitute},
            {"agents", agents},
            {"default_agent", agent_to_json(cfg.default_agent)},
            {"simulation",
             {{"dt", s.dt},
              {"max_steps", s.max_steps},
              {"visibility_radius", s.visibility_radius},
              {"worker_count", s.worker_count},
              {"batch_count", s.batch_count}}},
            {"predictor", {{"horizon", s.predictor.horizon}, {"growth_rate", s.predictor.growth_rate}}},
            {"metrics",
             {{"ttc_threshold", cfg.metrics.ttc_threshold},
              {"gating_distance", cfg.metrics.gating_distance},
              {"path_horizon", cfg.metrics.path_horizon},
              {"crossing_horizon", cfg.metrics.crossing_horizon},
              {"crossing_step", cfg.metrics.crossing_step}}}};
}

Scenario prepare_scenario(const RunConfig& cfg) {
    Scenario sc = load_scenario(cfg.scenario);
    if (!cfg.substitute.empty()) {
        sc = substitute_agents(sc, std::set<ObjectId>(cfg.substitute.begin(), cfg.substitute.end()));
    }
    return sc;
}

double default_v_ref(const PlanningProblem& problem) {
    if (problem.recorded && !problem.recorded->empty()) {
        double sum = 0.0;
        for (const auto& s : *problem.recorded) {
            sum += s.v;
        }
        const double mean = sum / static_cast<double>(problem.recorded->size());
        if (mean > 0.0) {
            return mean;
        }
    }
    if (problem.goal.velocity) {
        const double mid = 0.5 * (problem.goal.velocity->lo + problem.goal.velocity->hi);
        if (mid > 0.0) {
            return mid;
        }
    }
    if (problem.initial.v > 0.0) {
        return problem.initial.v;
    }
    return 10.0;
}

std::unique_ptr<Planner> make_planner(const Scenario& scenario, const PlanningProblem& problem,
                                      const AgentSpec& spec) {
    const double v_ref = spec.v_ref.value_or(default_v_ref(problem));
    switch (spec.planner) {
        case PlannerKind::replay:
            if (!problem.recorded) {
                throw ConfigError("agent " + std::to_string(problem.id) +
                                  " uses the replay planner but has no recorded trajectory");
            }
            return std::make_unique<ReplayPlanner>(*problem.recorded);
        case PlannerKind::idm:
            if (problem.recorded) {
                CurvilinearFrame path = recorded_path_frame(*problem.recorded);
                SpeedProfile desired = spec.v_ref ? SpeedProfile::constant(*spec.v_ref)
                                                  : SpeedProfile::from_recording(path, *problem.recorded);
                return std::make_unique<IdmPlanner>(std::move(path), std::move(desired), spec.idm, problem.params);
            } else {
                Route route = route_to_goal(scenario.network, problem.initial, problem.goal);
                return std::make_unique<IdmPlanner>(std::move(route.frame), SpeedProfile::constant(v_ref), spec.idm,
                                                    problem.params);
            }
        case PlannerKind::frenet:
            return std::make_unique<FrenetPlanner>(route_to_goal(scenario.network, problem.initial, problem.goal),
                                                   spec.frenet, problem.params, v_ref);
    }
    throw ConfigError("unknown planner kind");
}

PlannerBindings make_planners(const Scenario& scenario, const RunConfig& cfg) {
    for (const auto& [id, spec] : cfg.agents) {
        if (scenario.problem(id) == nullptr) {
            throw ConfigError("config names agent " + std::to_string(id) + " which is not a planning problem");
        }
    }
    PlannerBindings out;
    for (const auto& p : scenario.planning_problems) {
        out[p.id] = make_planner(scenario, p, cfg.spec_for(p.id));
    }
    return out;
}

}  // namespace intersim
