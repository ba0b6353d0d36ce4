#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intersim/engine.hpp"
#include "intersim/scenario.hpp"

namespace intersim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
/// Marker for a value that is undefined at a step (serialized as null).
inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

struct MetricConfig {
    double ttc_threshold = 2.0;      // tau
    double gating_distance = 50.0;   // Cartesian, center to center
    double path_horizon = 200.0;     // length of candidate lanelet paths ahead of the agent
    double crossing_horizon = 10.0;  // extrapolation horizon for crossing TTC
    double crossing_step = 0.02;

    void validate() const;
};

/// Logged motion of one vehicle; states[k] is the state at step k for k < states.size().
struct Track {
    ObjectId id = 0;
    Shape shape;
    VehicleParams params;
    std::vector<AgentState> states;
    std::vector<double> accel;      // central differences of v
    std::vector<double> yaw_rate;   // central differences of theta

    std::size_t size() const { return states.size(); }
    bool has(std::size_t k) const { return k < states.size(); }
};

Track make_track(ObjectId id, const Shape& shape, const VehicleParams& params, std::vector<AgentState> states,
                 double dt);

/// Central finite differences; one-sided at the ends, zero for a single sample.
std::vector<double> central_difference(std::span<const double> values, double dt, bool angular = false);

enum class Relation { lead_follow, crossing, oncoming_relevant, ignored };
std::string to_string(Relation r);

/// Pair state at one step in the frame that proved most critical.
struct PairContext {
    ObjectId agent = 0;
    ObjectId other = 0;
    Relation relation = Relation::ignored;
    bool overlapping = false;      // occupancies intersect at this step
    bool in_lane = false;          // lead-follow style measurement along a frame
    int frame = -1;                // index into the agent's candidate paths, -1 for none
    double hw = kInf;              // lead rear minus ego front along the frame
    double ttc = kInf;
    double closing_speed = 0.0;    // ego speed minus other speed along the frame (lane) or ego speed (crossing)
    double contact_distance = kInf;  // distance the ego covers until contact (crossing)
    double lateral_clearance = 0.0;  // lateral translation needed to clear the other
    double v_ego = 0.0;
};

/// Candidate frames and pair classification for one scenario's street network.
class FrameSelector {
public:
    FrameSelector(const StreetNetwork& network, MetricConfig cfg, double dt);

    /// Lanelet paths ahead of a vehicle pose, each about cfg.path_horizon long, at most 32.
    std::vector<std::vector<ObjectId>> candidate_paths(const AgentState& state);
    const CurvilinearFrame& frame(const std::vector<ObjectId>& path);

    PairContext select(const Track& agent, const Track& other, std::size_t step);

    /// True when the position lies only on lanelets running against the heading.
    bool on_oncoming_lane(const AgentState& state) const;
    /// Conflict area between any of `mine` and any of `theirs` or their successors.
    bool lanelets_cross(const std::vector<ObjectId>& mine, const std::vector<ObjectId>& theirs) const;

    const MetricConfig& config() const { return cfg_; }

private:
    std::vector<ObjectId> start_lanelets(const AgentState& state) const;

    const StreetNetwork* network_;
    MetricConfig cfg_;
    double dt_;
    std::map<std::vector<ObjectId>, std::unique_ptr<CurvilinearFrame>> frames_;
};

/// HW in meters; infinite when the relation has no lane measurement.
double hw(const PairContext& ctx);
/// HW / v_ego, infinite at standstill.
double thw(const PairContext& ctx);

/// Smallest positive t with hw + dv t + da t^2 / 2 = 0, dv = v_lead - v_ego, da = a_lead - a_ego.
double ttc_closed_form(double hw, double v_ego, double v_lead, double a_ego, double a_lead);

struct CrossingForecast {
    double ttc = kInf;
    double ego_travel = kInf;        // distance covered by the agent until contact
    double lateral_clearance = 0.0;  // deepest normal translation needed while overlapping
};

/// Forward extrapolation with constant acceleration and yaw rate until the boxes touch.
CrossingForecast crossing_ttc(const Track& agent, const Track& other, std::size_t step, double horizon,
                              double resolution);

double ttc(const PairContext& ctx);

struct TetTit {
    double tet = 0.0;
    double tit = 0.0;
};

/// Both normalized by total_time; samples are dt apart.
TetTit tet_tit(std::span<const double> ttc_series, double tau, double dt, double total_time);

struct Encounter {
    double ttce = kInf;
    double dce = kInf;
};

/// Closest encounter from each common step onward; entry k belongs to step k.
std::vector<Encounter> ttce_dce_series(const Track& agent, const Track& other, double dt);
Encounter ttce_dce(const Track& agent, const Track& other, std::size_t step, double dt);

struct EtPet {
    std::optional<double> et;  // absent when the agent never enters
    double pet = kInf;
    std::optional<std::size_t> entry;
    std::optional<std::size_t> exit;
    std::optional<std::size_t> other_entry;
};

EtPet et_pet(const Polygon& area, const Track& agent, const Track& other, double dt);

struct BtnStn {
    double btn = 0.0;
    double stn = 0.0;
};

/// Required over maximal acceleration. Zero without a threat, absent at contact.
BtnStn btn_stn(const PairContext& ctx, const VehicleParams& params);

struct PsdMsd {
    double psd = kInf;
    double msd = 0.0;
};

PsdMsd psd_msd(double speed, double distance_to_area, const VehicleParams& params);

// ---------------------------------------------------------------- report

struct PairSample {
    std::size_t step = 0;
    Relation relation = Relation::ignored;
    double hw = kInf;
    double thw = kInf;
    double ttc = kInf;
    double ttce = kInf;
    double dce = kInf;
    double btn = 0.0;
    double stn = 0.0;
};

struct PairSeries {
    ObjectId agent = 0;
    ObjectId other = 0;
    std::vector<PairSample> samples;  // non-ignored steps only
};

struct AgentSample {
    std::size_t step = 0;
    double t = 0.0;
    double hw = kInf;
    double thw = kInf;
    double ttc = kInf;
    double ttce = kInf;
    double dce = kInf;
    double btn = 0.0;
    double stn = 0.0;
    double psd = kInf;
    double msd = 0.0;
};

struct ConflictEvent {
    ObjectId agent = 0;
    ObjectId other = 0;
    ObjectId first_lanelet = 0;
    ObjectId second_lanelet = 0;
    std::size_t entry = 0;
    std::size_t exit = 0;
    double et = 0.0;
    double pet = kInf;
    std::optional<std::size_t> other_entry;
};

struct AgentAggregate {
    ObjectId id = 0;
    AgentStatus status = AgentStatus::running;
    double duration = 0.0;
    double tet = 0.0;
    double tit = 0.0;
    double min_dce = kInf;
    double min_ttc = kInf;
    double max_btn = 0.0;
    double max_stn = 0.0;
};

struct MetricReport {
    MetricConfig config;
    double dt = 0.1;
    std::map<ObjectId, std::vector<AgentSample>> series;
    std::vector<PairSeries> pairs;
    std::vector<ConflictEvent> conflicts;
    std::map<ObjectId, AgentAggregate> aggregates;
};

/// Tracks for every vehicle in the run: agents from the result, obstacles from the scenario
/// (dynamic ones truncated to the logged steps, static ones held for all steps).
std::vector<Track> collect_tracks(const SimulationResult& result, const Scenario& scenario);

MetricReport evaluate(const SimulationResult& result, const Scenario& scenario, const MetricConfig& cfg);

/// Scenario-level row in the shape of a regime comparison table.
struct RegimeRow {
    std::string regime;
    double min_dce = kInf;
    double min_ttc = kInf;
    double max_btn = 0.0;
    std::optional<double> et;
    double pet = kInf;
    bool collided = false;
};

/// ET and PET come from the earliest conflict-area entry (ties: lower agent id). A non-empty
/// `focus` restricts that choice to events encroached by the listed vehicles.
RegimeRow regime_row(const MetricReport& report, const std::string& regime,
                     std::span<const ObjectId> focus = {});

nlohmann::json report_to_json(const MetricReport& report);
std::string series_csv(const MetricReport& report);
std::string criticality_csv(std::span<const RegimeRow> rows);

/// JSON number, "inf" for infinity, null when absent.
nlohmann::json metric_value(double v);
std::string format_metric(double v);

}  // namespace intersim
