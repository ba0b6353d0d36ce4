#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "intersim/planners.hpp"
#include "intersim/prediction.hpp"
#include "intersim/scenario.hpp"

namespace intersim {

struct SimulationConfig {
    double dt = 0.1;
    std::size_t max_steps = 300;
    double visibility_radius = 100.0;
    std::size_t worker_count = 1;
    std::size_t batch_count = 1;
    PredictorConfig predictor;

    void validate() const;
};

enum class AgentStatus { running, reached_in_time, reached_late, time_limit_exceeded, goal_missed, infeasible, collided };

std::string to_string(AgentStatus status);
AgentStatus agent_status_from_string(const std::string& name);
inline bool is_terminal(AgentStatus s) { return s != AgentStatus::running; }

/// An agent touching another object (`other` set) or leaving the street network.
struct CollisionEvent {
    ObjectId agent = 0;
    std::optional<ObjectId> other;

    bool road_departure() const { return !other.has_value(); }
    friend bool operator==(const CollisionEvent&, const CollisionEvent&) = default;
};

struct AgentRecord {
    ObjectId id = 0;
    AgentState state;
    std::optional<ControlInput> input;  // absent once the agent turned terminal this step
    AgentStatus status = AgentStatus::running;
    PlanStatus plan_status = PlanStatus::ok;

    friend bool operator==(const AgentRecord&, const AgentRecord&) = default;
};

/// Wall-clock durations in seconds. Never part of determinism comparisons.
struct StepTimings {
    double collision = 0.0;
    double prediction = 0.0;
    std::vector<double> batch_planning;
    double total = 0.0;
};

struct StepLog {
    std::size_t step = 0;
    double t = 0.0;
    std::vector<AgentRecord> agents;  // agents live at the start of the step, ascending id
    std::vector<CollisionEvent> collisions;
    StepTimings timings;
};

struct AgentOutcome {
    AgentStatus status = AgentStatus::running;
    std::optional<std::size_t> terminal_step;

    friend bool operator==(const AgentOutcome&, const AgentOutcome&) = default;
};

struct SimulationResult {
    double dt = 0.1;
    std::vector<StepLog> steps;
    std::map<ObjectId, AgentOutcome> outcomes;
    /// Realized states per agent, one per logged step; inputs between consecutive states.
    std::map<ObjectId, Trajectory> trajectories;
};

using PlannerBindings = std::map<ObjectId, std::unique_ptr<Planner>>;

/// Fixed set of threads that execute indexed tasks and block the caller until all finish.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t workers);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    /// Runs task(0..count-1); returns once every task completed. Exceptions escaping a
    /// task are rethrown here (the first one by task index).
    void run(std::size_t count, const std::function<void(std::size_t)>& task);
    std::size_t size() const { return threads_.empty() ? 1 : threads_.size(); }

private:
    void loop();
    void drain();

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* task_ = nullptr;
    std::size_t count_ = 0;
    std::size_t next_ = 0;
    std::size_t finished_ = 0;
    std::size_t generation_ = 0;
    bool stop_ = false;
    std::vector<std::exception_ptr> errors_;
};

/// Splits ids (ascending) into `batches` contiguous groups whose sizes differ by at most one.
std::vector<std::vector<ObjectId>> partition_batches(const std::vector<ObjectId>& ids, std::size_t batches);

/// Lockstep simulation of every planning problem in the scenario. Throws ScenarioError
/// when an agent lacks a planner binding.
SimulationResult run(const Scenario& scenario, PlannerBindings& planners, const SimulationConfig& cfg);

struct BenchmarkRow {
    std::size_t agents = 0;
    std::size_t workers = 0;
    std::size_t samples = 0;
    double step_mean = 0.0;
    double step_q1 = 0.0;
    double step_q3 = 0.0;
    double planning_mean = 0.0;  // per batch
    double planning_q1 = 0.0;
    double planning_q3 = 0.0;
};

/// Builds the planners for a scenario in which the first n vehicles became agents.
using PlannerFactory = std::function<PlannerBindings(const Scenario&)>;

/// For every (agents, workers) pair: substitutes the `agents` lowest-id dynamic obstacles,
/// runs `repetitions` simulations with batch_count = workers and collects step timings.
std::vector<BenchmarkRow> benchmark(const Scenario& scenario, const PlannerFactory& factory,
                                    const std::vector<std::size_t>& agent_counts,
                                    const std::vector<std::size_t>& worker_counts, std::size_t repetitions,
                                    const SimulationConfig& base);

/// Linear-interpolation quantile of unsorted samples; q in [0, 1].
double quantile(std::vector<double> samples, double q);

}  // namespace intersim
