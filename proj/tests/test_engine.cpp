#include <doctest.h>

#include <atomic>
#include <set>

#include "support.hpp"

using namespace intersim;
using testing::run_fixture;
using testing::source_path;
using testing::step_dump;

namespace {

/// Always stands still and counts its calls.
class Parked : public Planner {
public:
    explicit Parked(std::atomic<int>* calls = nullptr, bool fail = false) : calls_(calls), fail_(fail) {}
    PlanResult plan(const LocalView& view) override {
        if (calls_) {
            ++*calls_;
        }
        if (fail_) {
            throw PlanningError("boom");
        }
        PlanResult r;
        AgentState s = view.ego;
        s.v = 0.0;
        r.next_state = s;
        r.next_input = {-view.ego.v / view.dt, 0.0};
        r.intended.states = {view.ego, s};
        r.intended.inputs = {r.next_input};
        return r;
    }
    PlannerKind kind() const override { return PlannerKind::replay; }

private:
    std::atomic<int>* calls_;
    bool fail_;
};

Scenario parked_pair() {
    Scenario sc = load_scenario(source_path("scenarios/merge.json"));
    sc.dynamic_obstacles.clear();
    sc.planning_problems[0].initial = {150, 0, 0, 0};
    PlanningProblem second = sc.planning_problems[0];
    second.id = 101;
    second.initial = {150, -3.5, 0, 0};
    second.goal.area = Polygon({{140, -5}, {160, -5}, {160, -2}, {140, -2}});  // already inside
    sc.planning_problems.push_back(second);
    return sc;
}

}  // namespace

TEST_CASE("batches are contiguous and balanced") {
    const std::vector<ObjectId> ids{1, 2, 3, 4, 5, 6, 7};
    const auto b = partition_batches(ids, 3);
    REQUIRE(b.size() == 3);
    CHECK(b[0] == std::vector<ObjectId>{1, 2, 3});
    CHECK(b[1] == std::vector<ObjectId>{4, 5});
    CHECK(b[2] == std::vector<ObjectId>{6, 7});
    CHECK(partition_batches(ids, 20).size() == 7);
    CHECK(partition_batches({}, 4).empty());
}

TEST_CASE("worker pool runs every index and rethrows the first failure") {
    WorkerPool pool(4);
    std::vector<int> hits(100, 0);
    pool.run(100, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 100);
    CHECK_THROWS_WITH(pool.run(10,
                               [](std::size_t i) {
                                   if (i == 3 || i == 7) {
                                       throw std::runtime_error("task " + std::to_string(i));
                                   }
                               }),
                      "task 3");
    pool.run(5, [&](std::size_t i) { hits[i] += 1; });  // still usable
    CHECK(hits[4] == 2);
}

TEST_CASE("quantiles interpolate linearly") {
    CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({5}, 0.75) == 5);
}

TEST_CASE("step logs do not depend on the worker count") {
    const auto one = run_fixture("configs/merge_c.json", 1);
    const auto four = run_fixture("configs/merge_c.json", 4);
    CHECK(step_dump(one.result) == step_dump(four.result));
    CHECK(one.result.outcomes == four.result.outcomes);
}

TEST_CASE("terminal agents leave the simulation") {
    const Scenario sc = parked_pair();
    PlannerBindings planners;
    planners[100] = std::make_unique<Parked>();
    planners[101] = std::make_unique<Parked>();
    SimulationConfig cfg;
    cfg.max_steps = 5;
    const SimulationResult r = run(sc, planners, cfg);
    CHECK(r.outcomes.at(101).status == AgentStatus::reached_in_time);
    CHECK(r.outcomes.at(101).terminal_step == std::size_t{0});
    CHECK(r.outcomes.at(100).status == AgentStatus::goal_missed);
    REQUIRE(r.steps.size() == 6);
    CHECK(r.steps[0].agents.size() == 2);
    CHECK(r.steps[0].agents[1].input == std::nullopt);
    for (std::size_t k = 1; k < r.steps.size(); ++k) {
        REQUIRE(r.steps[k].agents.size() == 1);
        CHECK(r.steps[k].agents[0].id == 100);
    }
}

TEST_CASE("a throwing planner makes its agent infeasible") {
    const Scenario sc = parked_pair();
    PlannerBindings planners;
    planners[100] = std::make_unique<Parked>(nullptr, true);
    planners[101] = std::make_unique<Parked>();
    SimulationConfig cfg;
    cfg.max_steps = 3;
    const SimulationResult r = run(sc, planners, cfg);
    CHECK(r.outcomes.at(100).status == AgentStatus::infeasible);
    CHECK(r.outcomes.at(100).terminal_step == std::size_t{0});
}

TEST_CASE("collisions are detected before goals") {
    Scenario sc = parked_pair();
    sc.planning_problems[1].initial = {152, 0.5, 0, 0};  // overlaps agent 100
    PlannerBindings planners;
    planners[100] = std::make_unique<Parked>();
    planners[101] = std::make_unique<Parked>();
    const SimulationResult r = run(sc, planners, SimulationConfig{});
    CHECK(r.outcomes.at(100).status == AgentStatus::collided);
    CHECK(r.outcomes.at(101).status == AgentStatus::collided);
    REQUIRE(r.steps[0].collisions.size() == 2);
    CHECK(r.steps[0].collisions[0].other == ObjectId{101});
}

TEST_CASE("road departure counts as a collision") {
    Scenario sc = parked_pair();
    sc.planning_problems.pop_back();
    sc.planning_problems[0].initial = {150, 6.5, 0, 0};  // half off lane A's left edge
    PlannerBindings planners;
    planners[100] = std::make_unique<Parked>();
    const SimulationResult r = run(sc, planners, SimulationConfig{});
    CHECK(r.outcomes.at(100).status == AgentStatus::collided);
    REQUIRE(r.steps[0].collisions.size() == 1);
    CHECK(r.steps[0].collisions[0].road_departure());
}

TEST_CASE("setup errors") {
    const Scenario sc = parked_pair();
    PlannerBindings planners;
    planners[100] = std::make_unique<Parked>();
    CHECK_THROWS_AS(run(sc, planners, SimulationConfig{}), ScenarioError);
    planners[101] = std::make_unique<Parked>();
    SimulationConfig cfg;
    cfg.dt = 0.2;
    CHECK_THROWS_AS(run(sc, planners, cfg), ScenarioError);
    cfg = {};
    cfg.worker_count = 0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("every agent plans exactly once per live step") {
    const Scenario sc = parked_pair();
    std::atomic<int> calls{0};
    PlannerBindings planners;
    planners[100] = std::make_unique<Parked>(&calls);
    planners[101] = std::make_unique<Parked>(&calls);
    SimulationConfig cfg;
    cfg.max_steps = 4;
    cfg.worker_count = 2;
    cfg.batch_count = 2;
    run(sc, planners, cfg);
    CHECK(calls.load() == 4);  // 101 is done at step 0, 100 plans at steps 0..3
}
