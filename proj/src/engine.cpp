#include "intersim/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace intersim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Body {
    ObjectId id;
    OrientedBox box;
};

}  // namespace

void SimulationConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("dt must be positive");
    }
    if (!(visibility_radius > 0.0)) {
        throw std::invalid_argument("visibility radius must be positive");
    }
    if (worker_count < 1 || batch_count < 1) {
        throw std::invalid_argument("worker and batch counts must be at least 1");
    }
    predictor.validate(dt);
}

std::string to_string(AgentStatus status) {
    switch (status) {
        case AgentStatus::running: return "running";
        case AgentStatus::reached_in_time: return "reached_in_time";
        case AgentStatus::reached_late: return "reached_late";
        case AgentStatus::time_limit_exceeded: return "time_limit_exceeded";
        case AgentStatus::goal_missed: return "goal_missed";
        case AgentStatus::infeasible: return "infeasible";
        case AgentStatus::collided: return "collided";
    }
    return "unknown";
}

AgentStatus agent_status_from_string(const std::string& name) {
    for (auto s : {AgentStatus::running, AgentStatus::reached_in_time, AgentStatus::reached_late,
                   AgentStatus::time_limit_exceeded, AgentStatus::goal_missed, AgentStatus::infeasible,
                   AgentStatus::collided}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw std::invalid_argument("unknown agent status '" + name + "'");
}

// ---------------------------------------------------------------- worker pool

WorkerPool::WorkerPool(std::size_t workers) {
    if (workers < 1) {
        throw std::invalid_argument("worker pool needs at least one worker");
    }
    // With a single worker the caller thread does the work itself.
    if (workers > 1) {
        threads_.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) {
            threads_.emplace_back([this] { loop(); });
        }
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

void WorkerPool::drain() {
    for (;;) {
        std::size_t index = 0;
        {
            std::lock_guard lock(mutex_);
            if (next_ >= count_) {
                return;
            }
            index = next_++;
        }
        try {
            (*task_)(index);
        } catch (...) {
            std::lock_guard lock(mutex_);
            errors_[index] = std::current_exception();
        }
        {
            std::lock_guard lock(mutex_);
            if (++finished_ == count_) {
                done_.notify_all();
            }
        }
    }
}

void WorkerPool::loop() {
    std::size_t seen = 0;
    for (;;) {
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) {
                return;
            }
            seen = generation_;
        }
        drain();
    }
}

void WorkerPool::run(std::size_t count, const std::function<void(std::size_t)>& task) {
    if (count == 0) {
        return;
    }
    {
        std::lock_guard lock(mutex_);
        task_ = &task;
        count_ = count;
        next_ = 0;
        finished_ = 0;
        errors_.assign(count, nullptr);
        ++generation_;
    }
    if (threads_.empty()) {
        drain();
    } else {
        wake_.notify_all();
        std::unique_lock lock(mutex_);
        done_.wait(lock, [&] { return finished_ == count_; });
    }
    std::lock_guard lock(mutex_);
    task_ = nullptr;
    for (auto& e : errors_) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<std::vector<ObjectId>> partition_batches(const std::vector<ObjectId>& ids, std::size_t batches) {
    std::vector<ObjectId> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty()) {
        return {};
    }
    batches = std::max<std::size_t>(1, std::min(batches, std::max<std::size_t>(1, sorted.size())));
    std::vector<std::vector<ObjectId>> out(batches);
    const std::size_t base = sorted.size() / batches;
    const std::size_t extra = sorted.size() % batches;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t n = base + (b < extra ? 1 : 0);
        out[b].assign(sorted.begin() + static_cast<std::ptrdiff_t>(pos),
                      sorted.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
    }
    return out;
}

// ---------------------------------------------------------------- simulation loop

SimulationResult run(const Scenario& scenario, PlannerBindings& planners, const SimulationConfig& cfg) {
    cfg.validate();
    if (std::abs(cfg.dt - scenario.dt) > 1e-12) {
        throw ScenarioError("simulation dt " + std::to_string(cfg.dt) + " differs from scenario dt " +
                            std::to_string(scenario.dt));
    }
    struct Agent {
        const PlanningProblem* problem;
        Planner* planner;
        AgentState state;
        AgentStatus status = AgentStatus::running;
    };
    std::map<ObjectId, Agent> agents;
    for (const auto& p : scenario.planning_problems) {
        auto it = planners.find(p.id);
        if (it == planners.end() || !it->second) {
            throw ScenarioError("agent " + std::to_string(p.id) + " has no planner binding");
        }
        agents.emplace(p.id, Agent{&p, it->second.get(), p.initial});
    }

    SimulationResult result;
    result.dt = cfg.dt;
    for (const auto& [id, a] : agents) {
        result.outcomes[id] = {};
        result.trajectories[id] = {};
    }

    Predictor predictor(scenario.network, cfg.predictor, cfg.dt);
    WorkerPool pool(cfg.worker_count);
    const auto& road = scenario.network.polygons();

    for (std::size_t k = 0; k <= cfg.max_steps; ++k) {
        const auto step_start = Clock::now();
        StepLog log;
        log.step = k;
        log.t = static_cast<double>(k) * cfg.dt;

        // (1) aggregate
        std::vector<ObjectId> live;
        std::vector<Body> agent_bodies;
        for (const auto& [id, a] : agents) {
            if (a.status == AgentStatus::running) {
                live.push_back(id);
                agent_bodies.push_back({id, occupancy(a.state, a.problem->params.shape())});
            }
        }
        std::vector<Body> obstacle_bodies;
        std::vector<Observation> observations;
        for (const auto& o : scenario.static_obstacles) {
            obstacle_bodies.push_back({o.id, occupancy(o.pose, o.shape)});
        }
        for (const auto& o : scenario.dynamic_obstacles) {
            if (k < o.trajectory.size()) {
                obstacle_bodies.push_back({o.id, occupancy(o.trajectory[k], o.shape)});
            }
        }

        // (2) collision check on time-t states
        const auto collision_start = Clock::now();
        std::map<ObjectId, bool> collided;
        for (std::size_t i = 0; i < agent_bodies.size(); ++i) {
            const Body& a = agent_bodies[i];
            for (std::size_t j = 0; j < agent_bodies.size(); ++j) {
                if (i != j && boxes_intersect(a.box, agent_bodies[j].box)) {
                    log.collisions.push_back({a.id, agent_bodies[j].id});
                    collided[a.id] = true;
                }
            }
            for (const Body& o : obstacle_bodies) {
                if (boxes_intersect(a.box, o.box)) {
                    log.collisions.push_back({a.id, o.id});
                    collided[a.id] = true;
                }
            }
            if (!box_inside_region(a.box, road, 0.1)) {
                log.collisions.push_back({a.id, std::nullopt});
                collided[a.id] = true;
            }
        }
        log.timings.collision = seconds_since(collision_start);

        // (3) status classification, collided first
        for (ObjectId id : live) {
            Agent& a = agents.at(id);
            if (collided.contains(id)) {
                a.status = AgentStatus::collided;
                continue;
            }
            const GoalOutcome g = goal_satisfied(a.problem->goal, a.state, log.t);
            if (g == GoalOutcome::reached_in_time) {
                a.status = AgentStatus::reached_in_time;
            } else if (g == GoalOutcome::reached_late) {
                a.status = AgentStatus::reached_late;
            } else if (log.t > a.problem->goal.t_max) {
                a.status = AgentStatus::time_limit_exceeded;
            } else if (k == cfg.max_steps) {
                a.status = AgentStatus::goal_missed;
            }
        }

        std::vector<ObjectId> planning;
        for (ObjectId id : live) {
            const Agent& a = agents.at(id);
            if (a.status == AgentStatus::running) {
                planning.push_back(id);
                observations.push_back({id, a.state, a.problem->params.shape()});
            }
        }
        for (const auto& o : scenario.static_obstacles) {
            observations.push_back({o.id, o.pose, o.shape});
        }
        for (const auto& o : scenario.dynamic_obstacles) {
            if (k < o.trajectory.size()) {
                observations.push_back({o.id, o.trajectory[k], o.shape});
            }
        }

        // (4)-(6) predict, build views, plan in batches
        std::map<ObjectId, PlanResult> plans;
        std::map<ObjectId, bool> failed;
        if (!planning.empty()) {
            const auto predict_start = Clock::now();
            const Predictions predictions = predictor.predict_all(observations);
            log.timings.prediction = seconds_since(predict_start);

            std::map<ObjectId, LocalView> views;
            for (ObjectId id : planning) {
                views.emplace(id, make_local_view(id, observations, predictions, scenario.network,
                                                  cfg.visibility_radius, cfg.dt, k));
                plans.emplace(id, PlanResult{});
                failed.emplace(id, false);
            }
            const auto batches = partition_batches(planning, cfg.batch_count);
            log.timings.batch_planning.assign(batches.size(), 0.0);
            pool.run(batches.size(), [&](std::size_t b) {
                const auto batch_start = Clock::now();
                for (ObjectId id : batches[b]) {
                    // Map nodes exist already; each worker writes only its own agents' slots.
                    try {
                        plans.at(id) = agents.at(id).planner->plan(views.at(id));
                    } catch (const std::exception&) {
                        failed.at(id) = true;
                    }
                }
                log.timings.batch_planning[b] = seconds_since(batch_start);
            });
        }

        // (7) log time-t records, then advance everyone simultaneously
        for (ObjectId id : live) {
            Agent& a = agents.at(id);
            AgentRecord rec;
            rec.id = id;
            rec.state = a.state;
            auto& traj = result.trajectories.at(id);
            traj.states.push_back(a.state);
            if (a.status == AgentStatus::running && failed.at(id)) {
                a.status = AgentStatus::infeasible;
            }
            if (a.status == AgentStatus::running) {
                const PlanResult& plan = plans.at(id);
                rec.input = plan.next_input;
                rec.plan_status = plan.status;
                traj.inputs.push_back(plan.next_input);
            } else {
                result.outcomes.at(id) = {a.status, k};
            }
            rec.status = a.status;
            log.agents.push_back(rec);
        }
        for (ObjectId id : planning) {
            Agent& a = agents.at(id);
            if (a.status == AgentStatus::running) {
                a.state = plans.at(id).next_state;
            }
        }
        log.timings.total = seconds_since(step_start);
        result.steps.push_back(std::move(log));

        if (std::none_of(agents.begin(), agents.end(),
                         [](const auto& kv) { return kv.second.status == AgentStatus::running; })) {
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------- benchmark

double quantile(std::vector<double> samples, double q) {
    if (samples.empty()) {
        return 0.0;
    }
    std::sort(samples.begin(), samples.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

std::vector<BenchmarkRow> benchmark(const Scenario& scenario, const PlannerFactory& factory,
                                    const std::vector<std::size_t>& agent_counts,
                                    const std::vector<std::size_t>& worker_counts, std::size_t repetitions,
                                    const SimulationConfig& base) {
    std::vector<ObjectId> vehicles;
    for (const auto& o : scenario.dynamic_obstacles) {
        vehicles.push_back(o.id);
    }
    std::sort(vehicles.begin(), vehicles.end());

    std::vector<BenchmarkRow> rows;
    for (std::size_t n : agent_counts) {
        if (n > vehicles.size()) {
            throw std::invalid_argument("requested " + std::to_string(n) + " agents but the scenario has only " +
                                        std::to_string(vehicles.size()) + " vehicles");
        }
        const std::set<ObjectId> ids(vehicles.begin(), vehicles.begin() + static_cast<std::ptrdiff_t>(n));
        const Scenario substituted = substitute_agents(scenario, ids);
        for (std::size_t w : worker_counts) {
            SimulationConfig cfg = base;
            cfg.worker_count = w;
            cfg.batch_count = w;
            std::vector<double> step_times;
            std::vector<double> batch_times;
            for (std::size_t r = 0; r < repetitions; ++r) {
                PlannerBindings bindings = factory(substituted);
                const SimulationResult res = run(substituted, bindings, cfg);
                for (const auto& s : res.steps) {
                    if (s.timings.batch_planning.empty()) {
                        continue;
                    }
                    step_times.push_back(s.timings.total);
                    batch_times.insert(batch_times.end(), s.timings.batch_planning.begin(),
                                       s.timings.batch_planning.end());
                }
            }
            BenchmarkRow row;
            row.agents = n;
            row.workers = w;
            row.samples = step_times.size();
            auto mean = [](const std::vector<double>& v) {
                double sum = 0.0;
                for (double x : v) {
                    sum += x;
                }
                return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
            };
            row.step_mean = mean(step_times);
            row.step_q1 = quantile(step_times, 0.25);
            row.step_q3 = quantile(step_times, 0.75);
            row.planning_mean = mean(batch_times);
            row.planning_q1 = quantile(batch_times, 0.25);
            row.planning_q3 = quantile(batch_times, 0.75);
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace intersim
