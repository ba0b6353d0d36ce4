#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intersim/engine.hpp"
#include "intersim/metrics.hpp"
#include "intersim/planners.hpp"
#include "intersim/scenario.hpp"

namespace intersim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A run directory is missing files or its logs are truncated.
class LogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- step logs

/// Deterministic part of a step record (no timings).
nlohmann::json step_to_json(const StepLog& log);
nlohmann::json timings_to_json(const StepLog& log);
nlohmann::json summary_to_json(const SimulationResult& result);

StepLog step_from_json(const nlohmann::json& doc);

/// Rebuilds a result from steps.jsonl and summary.json inside `dir`.
SimulationResult load_result(const std::filesystem::path& dir);

// ---------------------------------------------------------------- run configuration

struct AgentSpec {
    PlannerKind planner = PlannerKind::frenet;
    std::optional<double> v_ref;
    IdmParams idm;
    FrenetPlannerConfig frenet;
};

struct RunConfig {
    std::string name = "run";
    std::filesystem::path scenario;  // resolved against the config's directory
    std::vector<ObjectId> substitute;
    std::map<ObjectId, AgentSpec> agents;
    AgentSpec default_agent;
    SimulationConfig simulation;
    bool worker_count_given = false;
    MetricConfig metrics;

    const AgentSpec& spec_for(ObjectId id) const;
};

RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
/// Every field with defaults filled in; the digest is computed over this document.
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Loads the scenario and turns the listed recorded vehicles into agents.
Scenario prepare_scenario(const RunConfig& cfg);

/// Reference speed: the recording's mean speed, else the goal speed interval's midpoint,
/// else the initial speed, else 10 m/s.
double default_v_ref(const PlanningProblem& problem);

std::unique_ptr<Planner> make_planner(const Scenario& scenario, const PlanningProblem& problem,
                                      const AgentSpec& spec);
PlannerBindings make_planners(const Scenario& scenario, const RunConfig& cfg);

}  // namespace intersim
