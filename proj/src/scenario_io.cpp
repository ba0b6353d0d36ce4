#include <fstream>
#include <sstream>

#include "intersim/scenario.hpp"

namespace intersim {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw ParseError("schema error at " + (path.empty() ? std::string("/") : path) + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) {
        schema_error(path, "expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        schema_error(path, "missing key '" + key + "'");
    }
    return *it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) {
        schema_error(path, "expected a number");
    }
    return v.get<double>();
}

ObjectId integer_id(const json& v, const std::string& path) {
    if (!v.is_number_integer()) {
        schema_error(path, "expected an integer id");
    }
    return v.get<ObjectId>();
}

const json& array(const json& v, const std::string& path) {
    if (!v.is_array()) {
        schema_error(path, "expected an array");
    }
    return v;
}

std::vector<Point2> points(const json& v, const std::string& path) {
    std::vector<Point2> out;
    for (std::size_t i = 0; i < array(v, path).size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        const json& e = v[i];
        if (!e.is_array() || e.size() != 2) {
            schema_error(p, "expected [x, y]");
        }
        out.push_back({number(e[0], p + "/0"), number(e[1], p + "/1")});
    }
    return out;
}

AgentState state(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 4) {
        schema_error(path, "expected [x, y, v, theta]");
    }
    return {number(v[0], path + "/0"), number(v[1], path + "/1"), number(v[2], path + "/2"),
            number(v[3], path + "/3")};
}

std::vector<AgentState> states(const json& v, const std::string& path) {
    std::vector<AgentState> out;
    for (std::size_t i = 0; i < array(v, path).size(); ++i) {
        out.push_back(state(v[i], path + "/" + std::to_string(i)));
    }
    return out;
}

Shape shape(const json& v, const std::string& path) {
    return {number(require(v, "length", path), path + "/length"), number(require(v, "width", path), path + "/width")};
}

Interval interval(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) {
        schema_error(path, "expected [lo, hi]");
    }
    return {number(v[0], path + "/0"), number(v[1], path + "/1")};
}

std::optional<Adjacency> adjacency(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    const std::string p = path + "/" + key;
    Adjacency a;
    a.id = integer_id(require(*it, "id", p), p + "/id");
    if (auto s = it->find("same_direction"); s != it->end()) {
        if (!s->is_boolean()) {
            schema_error(p + "/same_direction", "expected a boolean");
        }
        a.same_direction = s->get<bool>();
    }
    return a;
}

VehicleParams vehicle_params(const json& v, const std::string& path, VehicleParams base) {
    if (!v.is_object()) {
        schema_error(path, "expected an object");
    }
    auto field = [&](const char* key, double& target) {
        if (auto it = v.find(key); it != v.end()) {
            target = number(*it, path + "/" + key);
        }
    };
    field("length", base.length);
    field("width", base.width);
    field("a_long_max", base.a_long_max);
    field("a_lat_max", base.a_lat_max);
    field("v_max", base.v_max);
    field("kappa_max", base.kappa_max);
    return base;
}

json to_json(Point2 p) { return json::array({p.x, p.y}); }

json to_json(const std::vector<Point2>& pts) {
    json a = json::array();
    for (const auto& p : pts) {
        a.push_back(to_json(p));
    }
    return a;
}

json to_json(const AgentState& s) { return json::array({s.x, s.y, s.v, s.theta}); }

json to_json(const std::vector<AgentState>& ss) {
    json a = json::array();
    for (const auto& s : ss) {
        a.push_back(to_json(s));
    }
    return a;
}

json to_json(const VehicleParams& p) {
    return {{"length", p.length},     {"width", p.width}, {"a_long_max", p.a_long_max},
            {"a_lat_max", p.a_lat_max}, {"v_max", p.v_max}, {"kappa_max", p.kappa_max}};
}

json to_json(const std::optional<Adjacency>& a) {
    if (!a) {
        return nullptr;
    }
    return {{"id", a->id}, {"same_direction", a->same_direction}};
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
    Scenario sc;
    sc.dt = number(require(doc, "dt", ""), "/dt");

    std::vector<Lanelet> lanelets;
    const json& jl = array(require(doc, "lanelets", ""), "/lanelets");
    for (std::size_t i = 0; i < jl.size(); ++i) {
        const std::string p = "/lanelets/" + std::to_string(i);
        const json& l = jl[i];
        const ObjectId id = integer_id(require(l, "id", p), p + "/id");
        std::vector<ObjectId> succ;
        if (auto it = l.find("successors"); it != l.end()) {
            for (std::size_t k = 0; k < array(*it, p + "/successors").size(); ++k) {
                succ.push_back(integer_id((*it)[k], p + "/successors/" + std::to_string(k)));
            }
        }
        auto left = points(require(l, "left_bound", p), p + "/left_bound");
        auto right = points(require(l, "right_bound", p), p + "/right_bound");
        try {
            lanelets.push_back(Lanelet::from_bounds(id, Polyline(std::move(left)), Polyline(std::move(right)),
                                                    std::move(succ), adjacency(l, "adjacent_left", p),
                                                    adjacency(l, "adjacent_right", p)));
        } catch (const GeometryError& e) {
            throw ScenarioError("lanelet " + std::to_string(id) + ": " + e.what());
        }
    }
    sc.network = StreetNetwork(std::move(lanelets));

    if (auto it = doc.find("static_obstacles"); it != doc.end()) {
        for (std::size_t i = 0; i < array(*it, "/static_obstacles").size(); ++i) {
            const std::string p = "/static_obstacles/" + std::to_string(i);
            const json& o = (*it)[i];
            StaticObstacle so;
            so.id = integer_id(require(o, "id", p), p + "/id");
            so.shape = shape(require(o, "shape", p), p + "/shape");
            const json& pose = require(o, "pose", p);
            if (!pose.is_array() || pose.size() != 3) {
                schema_error(p + "/pose", "expected [x, y, theta]");
            }
            so.pose = {number(pose[0], p + "/pose/0"), number(pose[1], p + "/pose/1"), 0.0,
                       number(pose[2], p + "/pose/2")};
            sc.static_obstacles.push_back(so);
        }
    }

    if (auto it = doc.find("dynamic_obstacles"); it != doc.end()) {
        for (std::size_t i = 0; i < array(*it, "/dynamic_obstacles").size(); ++i) {
            const std::string p = "/dynamic_obstacles/" + std::to_string(i);
            const json& o = (*it)[i];
            DynamicObstacle d;
            d.id = integer_id(require(o, "id", p), p + "/id");
            d.shape = shape(require(o, "shape", p), p + "/shape");
            d.trajectory = states(require(o, "trajectory", p), p + "/trajectory");
            if (auto vp = o.find("vehicle_params"); vp != o.end()) {
                d.params = vehicle_params(*vp, p + "/vehicle_params", VehicleParams{});
            }
            sc.dynamic_obstacles.push_back(std::move(d));
        }
    }

    if (auto it = doc.find("planning_problems"); it != doc.end()) {
        for (std::size_t i = 0; i < array(*it, "/planning_problems").size(); ++i) {
            const std::string p = "/planning_problems/" + std::to_string(i);
            const json& o = (*it)[i];
            PlanningProblem pp;
            pp.id = integer_id(require(o, "id", p), p + "/id");
            pp.initial = state(require(o, "initial_state", p), p + "/initial_state");
            if (auto vp = o.find("vehicle_params"); vp != o.end()) {
                pp.params = vehicle_params(*vp, p + "/vehicle_params", VehicleParams{});
            }
            const std::string gp = p + "/goal";
            const json& g = require(o, "goal", p);
            try {
                pp.goal.area = Polygon(points(require(g, "polygon", gp), gp + "/polygon"));
            } catch (const GeometryError& e) {
                throw ScenarioError("planning problem " + std::to_string(pp.id) + ": goal polygon invalid (" +
                                    e.what() + ")");
            }
            if (auto v = g.find("v_interval"); v != g.end() && !v->is_null()) {
                pp.goal.velocity = interval(*v, gp + "/v_interval");
            }
            if (auto v = g.find("theta_interval"); v != g.end() && !v->is_null()) {
                pp.goal.orientation = interval(*v, gp + "/theta_interval");
            }
            pp.goal.t_max = number(require(g, "t_max", gp), gp + "/t_max");
            if (auto r = o.find("recorded_trajectory"); r != o.end()) {
                pp.recorded = states(*r, p + "/recorded_trajectory");
            }
            sc.planning_problems.push_back(std::move(pp));
        }
    }
    std::sort(sc.planning_problems.begin(), sc.planning_problems.end(),
              [](const PlanningProblem& a, const PlanningProblem& b) { return a.id < b.id; });
    sc.validate();
    return sc;
}

json scenario_to_json(const Scenario& sc) {
    json doc;
    doc["dt"] = sc.dt;
    json lanelets = json::array();
    for (const auto& l : sc.network.lanelets()) {
        lanelets.push_back({{"id", l.id},
                            {"left_bound", to_json(l.left_bound.points())},
                            {"right_bound", to_json(l.right_bound.points())},
                            {"successors", l.successors},
                            {"adjacent_left", to_json(l.adjacent_left)},
                            {"adjacent_right", to_json(l.adjacent_right)}});
    }
    doc["lanelets"] = std::move(lanelets);

    json statics = json::array();
    for (const auto& o : sc.static_obstacles) {
        statics.push_back({{"id", o.id},
                           {"shape", {{"length", o.shape.length}, {"width", o.shape.width}}},
                           {"pose", json::array({o.pose.x, o.pose.y, o.pose.theta})}});
    }
    doc["static_obstacles"] = std::move(statics);

    json dynamics = json::array();
    for (const auto& o : sc.dynamic_obstacles) {
        json d = {{"id", o.id},
                  {"shape", {{"length", o.shape.length}, {"width", o.shape.width}}},
                  {"trajectory", to_json(o.trajectory)}};
        if (o.params) {
            d["vehicle_params"] = to_json(*o.params);
        }
        dynamics.push_back(std::move(d));
    }
    doc["dynamic_obstacles"] = std::move(dynamics);

    json problems = json::array();
    for (const auto& p : sc.planning_problems) {
        json goal = {{"polygon", to_json(p.goal.area.vertices())}, {"t_max", p.goal.t_max}};
        if (p.goal.velocity) {
            goal["v_interval"] = json::array({p.goal.velocity->lo, p.goal.velocity->hi});
        }
        if (p.goal.orientation) {
            goal["theta_interval"] = json::array({p.goal.orientation->lo, p.goal.orientation->hi});
        }
        json j = {{"id", p.id},
                  {"initial_state", to_json(p.initial)},
                  {"goal", std::move(goal)},
                  {"vehicle_params", to_json(p.params)}};
        if (p.recorded) {
            j["recorded_trajectory"] = to_json(*p.recorded);
        }
        problems.push_back(std::move(j));
    }
    doc["planning_problems"] = std::move(problems);
    return doc;
}

json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path.string());
}

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(read_json_file(path)); }

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << scenario_to_json(scenario).dump(1) << '\n';
}

}  // namespace intersim
