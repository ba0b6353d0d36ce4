#pragma once

// Shared helpers for the unit and acceptance suites. The geometric oracles here are
// written from scratch so they do not lean on the library code they check.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "intersim/engine.hpp"
#include "intersim/geometry.hpp"
#include "intersim/run_io.hpp"
#include "intersim/scenario.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace intersim;

inline fs::path source_path(const std::string& rel) { return fs::path(INTERSIM_SOURCE_DIR) / rel; }

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = fs::temp_directory_path() /
                ("intersim_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

struct FixtureRun {
    RunConfig config;
    Scenario scenario;
    SimulationResult result;
    double seconds = 0.0;
};

/// Simulates a run configuration in-process; `workers` also sets the batch count.
inline FixtureRun run_config(RunConfig cfg, std::optional<std::size_t> workers = std::nullopt) {
    FixtureRun fr;
    fr.config = std::move(cfg);
    if (workers) {
        fr.config.simulation.worker_count = *workers;
        fr.config.simulation.batch_count = *workers;
    }
    fr.scenario = prepare_scenario(fr.config);
    PlannerBindings planners = make_planners(fr.scenario, fr.config);
    const auto t0 = std::chrono::steady_clock::now();
    fr.result = run(fr.scenario, planners, fr.config.simulation);
    fr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return fr;
}

/// Loads a bundled run configuration and simulates it.
inline FixtureRun run_fixture(const std::string& config_rel, std::optional<std::size_t> workers = std::nullopt) {
    return run_config(load_run_config(source_path(config_rel)), workers);
}

inline std::string step_dump(const SimulationResult& r) {
    std::string out;
    for (const auto& s : r.steps) {
        out += step_to_json(s).dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------- box oracles

inline std::array<Point2, 4> box_corners(Point2 c, double heading, double length, double width) {
    const double ch = std::cos(heading);
    const double sh = std::sin(heading);
    const double hl = 0.5 * length;
    const double hw = 0.5 * width;
    std::array<Point2, 4> out;
    const double sx[4] = {hl, -hl, -hl, hl};
    const double sy[4] = {hw, hw, -hw, -hw};
    for (int i = 0; i < 4; ++i) {
        out[i] = {c.x + sx[i] * ch - sy[i] * sh, c.y + sx[i] * sh + sy[i] * ch};
    }
    return out;
}

/// Closed containment in a box given by center, heading and size.
inline bool in_box(Point2 p, Point2 c, double heading, double length, double width, double eps = 1e-12) {
    const double dx = p.x - c.x;
    const double dy = p.y - c.y;
    const double lon = dx * std::cos(heading) + dy * std::sin(heading);
    const double lat = -dx * std::sin(heading) + dy * std::cos(heading);
    return std::abs(lon) <= 0.5 * length + eps && std::abs(lat) <= 0.5 * width + eps;
}

inline double orient(Point2 a, Point2 b, Point2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

inline bool on_segment(Point2 a, Point2 b, Point2 p) {
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

inline bool seg_cross(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) {
        return true;
    }
    return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
           (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
}

/// Two rectangles overlap iff a corner of one lies in the other or two edges cross.
inline bool boxes_overlap_oracle(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = box_corners(a.center, a.heading, a.length, a.width);
    const auto cb = box_corners(b.center, b.heading, b.length, b.width);
    for (const auto& p : ca) {
        if (in_box(p, b.center, b.heading, b.length, b.width)) {
            return true;
        }
    }
    for (const auto& p : cb) {
        if (in_box(p, a.center, a.heading, a.length, a.width)) {
            return true;
        }
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (seg_cross(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])) {
                return true;
            }
        }
    }
    return false;
}

inline double seg_point_dist(Point2 p, Point2 a, Point2 b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

/// Separation of two boxes from boundary samples `spacing` apart; 0 when they overlap.
inline double boxes_distance_oracle(const OrientedBox& a, const OrientedBox& b, double spacing = 0.002) {
    if (boxes_overlap_oracle(a, b)) {
        return 0.0;
    }
    const auto ca = box_corners(a.center, a.heading, a.length, a.width);
    const auto cb = box_corners(b.center, b.heading, b.length, b.width);
    double best = INFINITY;
    auto sweep = [&](const std::array<Point2, 4>& from, const std::array<Point2, 4>& to) {
        for (int i = 0; i < 4; ++i) {
            const Point2 p = from[i];
            const Point2 q = from[(i + 1) % 4];
            const double len = std::hypot(q.x - p.x, q.y - p.y);
            const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
            for (int k = 0; k <= n; ++k) {
                const double t = static_cast<double>(k) / n;
                const Point2 s{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
                for (int j = 0; j < 4; ++j) {
                    best = std::min(best, seg_point_dist(s, to[j], to[(j + 1) % 4]));
                }
            }
        }
    };
    sweep(ca, cb);
    sweep(cb, ca);
    return best;
}

}  // namespace testing
