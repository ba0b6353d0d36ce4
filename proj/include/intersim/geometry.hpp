#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "intersim/state.hpp"

namespace intersim {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double k, Point2 a) { return {k * a.x, k * a.y}; }
    friend Point2 operator*(Point2 a, double k) { return {k * a.x, k * a.y}; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 heading_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a lateral offset would fold the curvilinear frame over itself.
class FoldOverError : public GeometryError {
public:
    using GeometryError::GeometryError;
};

/// Ordered list of at least two distinct points with cumulative chord length.
class Polyline {
public:
    Polyline() = default;
    explicit Polyline(std::vector<Point2> points);

    const std::vector<Point2>& points() const { return points_; }
    const std::vector<double>& cumulative_arclength() const { return cumulative_; }
    double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    /// Point at arc length s, clamped to [0, length()].
    Point2 point_at(double s) const;

    friend bool operator==(const Polyline& a, const Polyline& b) { return a.points_ == b.points_; }

private:
    std::vector<Point2> points_;
    std::vector<double> cumulative_;
};

/// Joins polylines end to start, dropping a joint point that repeats the previous end.
Polyline concatenate(std::span<const Polyline> parts);

/// Extends a polyline straight along its end tangents by `back` and `front` meters.
Polyline extend(const Polyline& line, double back, double front);

struct FrenetPoint {
    double s = 0.0;
    double d = 0.0;
    /// False when the closest reference point is an endpoint; s is then extrapolated
    /// along the end tangent and may leave [0, length].
    bool in_domain = true;
};

/// Arc-length parameterized reference path. Normals are interpolated linearly between
/// vertices, which makes projection and its inverse exact for each other.
class CurvilinearFrame {
public:
    CurvilinearFrame() = default;
    explicit CurvilinearFrame(Polyline reference);

    const Polyline& reference() const { return reference_; }
    double length() const { return reference_.length(); }
    const std::vector<Point2>& tangents() const { return tangents_; }
    const std::vector<double>& curvatures() const { return curvature_; }

    FrenetPoint project(Point2 p) const;

    /// Throws std::out_of_range outside [0, length] and FoldOverError when |d * kappa| >= 1.
    Point2 to_cartesian(double s, double d) const;

    /// Unit tangent and its heading at arc length s (clamped).
    Point2 tangent_at(double s) const;
    double heading_at(double s) const;
    double curvature_at(double s) const;

    bool empty() const { return reference_.empty(); }

private:
    struct Locator {
        std::size_t segment;
        double lambda;
    };
    Locator locate(double s) const;
    Point2 normal_at(std::size_t i) const { return {-tangents_[i].y, tangents_[i].x}; }

    Polyline reference_;
    std::vector<Point2> tangents_;
    std::vector<double> curvature_;
};

FrenetPoint project_to_frame(const CurvilinearFrame& frame, Point2 p);
Point2 frame_to_cartesian(const CurvilinearFrame& frame, double s, double d);

struct OrientedBox {
    Point2 center;
    double heading = 0.0;
    double length = 1.0;
    double width = 1.0;

    /// Counter-clockwise corners starting front-left.
    std::array<Point2, 4> corners() const;
    double area() const { return length * width; }
};

OrientedBox occupancy(const AgentState& state, const Shape& shape);

/// Simple closed ring, stored counter-clockwise.
class Polygon {
public:
    Polygon() = default;
    explicit Polygon(std::vector<Point2> vertices);

    const std::vector<Point2>& vertices() const { return vertices_; }
    double area() const;
    /// Boundary points count as inside.
    bool contains(Point2 p) const;
    Point2 min_corner() const { return lo_; }
    Point2 max_corner() const { return hi_; }

    friend bool operator==(const Polygon& a, const Polygon& b) { return a.vertices_ == b.vertices_; }

private:
    std::vector<Point2> vertices_;
    Point2 lo_;
    Point2 hi_;
};

double signed_area(std::span<const Point2> ring);
std::vector<Point2> convex_hull(std::vector<Point2> points);

/// Overlap test for convex rings (separating axis); touching counts as overlap.
bool convex_overlap(std::span<const Point2> a, std::span<const Point2> b);
/// Overlap test for arbitrary simple polygons (vertex containment + edge crossings).
bool polygons_overlap(const Polygon& a, const Polygon& b);

bool boxes_intersect(const OrientedBox& a, const OrientedBox& b);
double min_distance(const OrientedBox& a, const OrientedBox& b);
bool box_intersects_polygon(const OrientedBox& box, const Polygon& convex_polygon);

/// Corners plus boundary samples at most `spacing` apart must each lie in some region polygon.
bool box_inside_region(const OrientedBox& box, std::span<const Polygon> region, double spacing = 0.1);

double point_segment_distance(Point2 p, Point2 a, Point2 b);
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);

}  // namespace intersim
