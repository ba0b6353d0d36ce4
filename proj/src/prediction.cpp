#include "intersim/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace intersim {

void PredictorConfig::validate(double dt) const {
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("prediction horizon must be positive");
    }
    if (growth_rate < 0.0) {
        throw std::invalid_argument("prediction growth rate must be non-negative");
    }
    const double ratio = horizon / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6) {
        throw std::invalid_argument("prediction horizon must be a multiple of dt");
    }
}

std::size_t PredictorConfig::steps(double dt) const {
    return static_cast<std::size_t>(std::llround(horizon / dt));
}

Predictor::Predictor(const StreetNetwork& network, PredictorConfig cfg, double dt)
    : network_(&network), cfg_(cfg), dt_(dt) {
    cfg_.validate(dt_);
}

std::vector<ObjectId> Predictor::follow_chain(ObjectId start, double heading, double needed, Point2 from) {
    std::vector<ObjectId> chain{start};
    const Lanelet* cur = &network_->at(start);
    const auto& end = cur->centerline.points().back();
    double covered = distance(from, end);
    while (covered < needed && !cur->successors.empty() && chain.size() < 32) {
        ObjectId best = cur->successors.front();
        double best_score = -2.0;
        for (ObjectId s : cur->successors) {
            const auto& pts = network_->at(s).centerline.points();
            const Point2 t = pts[1] - pts[0];
            const double score = std::cos(normalize_angle(heading - std::atan2(t.y, t.x)));
            // Successors are visited in ascending id order, so strict improvement keeps
            // the smallest id on ties.
            if (score > best_score + 1e-9 || (std::abs(score - best_score) <= 1e-9 && s < best)) {
                best_score = score;
                best = s;
            }
        }
        chain.push_back(best);
        cur = &network_->at(best);
        covered += cur->centerline.length();
    }
    return chain;
}

const CurvilinearFrame& Predictor::chain_frame(const std::vector<ObjectId>& chain) {
    auto it = frames_.find(chain);
    if (it != frames_.end()) {
        return *it->second;
    }
    std::vector<Polyline> parts;
    for (ObjectId id : chain) {
        parts.push_back(network_->at(id).centerline);
    }
    auto frame = std::make_unique<CurvilinearFrame>(extend(concatenate(parts), 20.0, 60.0));
    return *frames_.emplace(chain, std::move(frame)).first->second;
}

PredictedPath Predictor::predict(const Observation& obs) {
    const std::size_t n = cfg_.steps(dt_);
    PredictedPath path;
    path.vehicle_id = obs.id;
    path.states.reserve(n + 1);
    path.pos_stddev.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        path.pos_stddev.push_back(cfg_.growth_rate * static_cast<double>(k) * dt_);
    }

    const AgentState& s0 = obs.state;
    const Point2 pos{s0.x, s0.y};
    const auto lanelet = network_->localize(pos, s0.theta, 5.0);
    const CurvilinearFrame* frame = nullptr;
    FrenetPoint fp;
    if (lanelet && s0.v > 0.0) {
        const double needed = s0.v * cfg_.horizon + 10.0;
        frame = &chain_frame(follow_chain(*lanelet, s0.theta, needed, pos));
        fp = frame->project(pos);
        if (!fp.in_domain || fp.s + s0.v * cfg_.horizon > frame->length()) {
            frame = nullptr;
        }
    }

    path.states.push_back(s0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double travel = s0.v * static_cast<double>(k) * dt_;
        AgentState st = s0;
        if (frame != nullptr) {
            const double s = fp.s + travel;
            double d = fp.d;
            const double kappa = frame->curvature_at(s);
            if (std::abs(d * kappa) >= 0.95) {
                d = std::copysign(0.95 / std::abs(kappa), d);
            }
            const Point2 p = frame->to_cartesian(s, d);
            st.x = p.x;
            st.y = p.y;
            st.theta = normalize_angle(frame->heading_at(s));
        } else {
            st.x = s0.x + travel * std::cos(s0.theta);
            st.y = s0.y + travel * std::sin(s0.theta);
        }
        path.states.push_back(st);
    }
    return path;
}

Predictions Predictor::predict_all(std::span<const Observation> observations) {
    Predictions out;
    for (const auto& obs : observations) {
        out.emplace(obs.id, predict(obs));
    }
    return out;
}

Predictions predict_all(std::span<const Observation> observations, const StreetNetwork& network,
                        const PredictorConfig& cfg, double dt) {
    Predictor p(network, cfg, dt);
    return p.predict_all(observations);
}

}  // namespace intersim
