#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "intersim/scenario.hpp"

namespace intersim {

struct PredictorConfig {
    double horizon = 3.0;      // seconds
    double growth_rate = 0.5;  // positional stddev growth, m per s of horizon

    /// Horizon must be positive and a whole number of steps.
    void validate(double dt) const;
    std::size_t steps(double dt) const;
};

struct PredictedPath {
    ObjectId vehicle_id = 0;
    std::vector<AgentState> states;  // offsets 0, dt, ..., horizon
    std::vector<double> pos_stddev;
};

struct Observation {
    ObjectId id = 0;
    AgentState state;
    Shape shape;
};

using Predictions = std::map<ObjectId, PredictedPath>;

/// Constant-speed lane-following predictor. Holds a cache of lanelet-chain frames, so an
/// instance must not be shared between threads; its output is immutable.
class Predictor {
public:
    Predictor(const StreetNetwork& network, PredictorConfig cfg, double dt);

    PredictedPath predict(const Observation& obs);
    Predictions predict_all(std::span<const Observation> observations);

    const PredictorConfig& config() const { return cfg_; }

private:
    const CurvilinearFrame& chain_frame(const std::vector<ObjectId>& chain);
    std::vector<ObjectId> follow_chain(ObjectId start, double heading, double needed, Point2 from);

    const StreetNetwork* network_;
    PredictorConfig cfg_;
    double dt_;
    std::map<std::vector<ObjectId>, std::unique_ptr<CurvilinearFrame>> frames_;
};

Predictions predict_all(std::span<const Observation> observations, const StreetNetwork& network,
                        const PredictorConfig& cfg, double dt);

}  // namespace intersim
