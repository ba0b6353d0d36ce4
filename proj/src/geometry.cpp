#include "intersim/geometry.hpp"

#include <algorithm>
#include <limits>

namespace intersim {

namespace {

constexpr double kLambdaTolerance = 1e-9;

Point2 normalized(Point2 a) {
    const double n = norm(a);
    if (n <= 0.0) {
        throw GeometryError("cannot normalize a zero-length vector");
    }
    return {a.x / n, a.y / n};
}

double orientation(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

bool on_segment(Point2 p, Point2 a, Point2 b) {
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

struct Interval {
    double lo;
    double hi;
};

Interval project_ring(std::span<const Point2> ring, Point2 axis) {
    Interval iv{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : ring) {
        const double v = dot(p, axis);
        iv.lo = std::min(iv.lo, v);
        iv.hi = std::max(iv.hi, v);
    }
    return iv;
}

bool separated_on_edges(std::span<const Point2> edges_of, std::span<const Point2> a,
                        std::span<const Point2> b) {
    const std::size_t n = edges_of.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 e = edges_of[(i + 1) % n] - edges_of[i];
        const Point2 axis{-e.y, e.x};
        if (axis.x == 0.0 && axis.y == 0.0) {
            continue;
        }
        const Interval ia = project_ring(a, axis);
        const Interval ib = project_ring(b, axis);
        const double scale = 1e-12 * std::max(1.0, norm(axis));
        if (ia.hi < ib.lo - scale || ib.hi < ia.lo - scale) {
            return true;
        }
    }
    return false;
}

}  // namespace

// ---------------------------------------------------------------- Polyline

Polyline::Polyline(std::vector<Point2> points) : points_(std::move(points)) {
    if (points_.size() < 2) {
        throw GeometryError("polyline needs at least two points");
    }
    cumulative_.reserve(points_.size());
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
            throw GeometryError("polyline point is not finite");
        }
        const double seg = distance(points_[i - 1], points_[i]);
        if (seg <= 0.0) {
            throw GeometryError("polyline has repeated consecutive points");
        }
        cumulative_.push_back(cumulative_.back() + seg);
    }
}

Point2 Polyline::point_at(double s) const {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    i = std::min(i, points_.size() - 2);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double lambda = (s - cumulative_[i]) / seg;
    return points_[i] + lambda * (points_[i + 1] - points_[i]);
}

Polyline concatenate(std::span<const Polyline> parts) {
    std::vector<Point2> pts;
    for (const auto& part : parts) {
        for (const auto& p : part.points()) {
            if (!pts.empty() && distance(pts.back(), p) < 1e-9) {
                continue;
            }
            pts.push_back(p);
        }
    }
    return Polyline(std::move(pts));
}

Polyline extend(const Polyline& line, double back, double front) {
    const auto& src = line.points();
    std::vector<Point2> pts;
    pts.reserve(src.size() + 2);
    if (back > 0.0) {
        const Point2 t = normalized(src[1] - src[0]);
        pts.push_back(src.front() - back * t);
    }
    pts.insert(pts.end(), src.begin(), src.end());
    if (front > 0.0) {
        const Point2 t = normalized(src[src.size() - 1] - src[src.size() - 2]);
        pts.push_back(src.back() + front * t);
    }
    return Polyline(std::move(pts));
}

// ---------------------------------------------------------------- CurvilinearFrame

CurvilinearFrame::CurvilinearFrame(Polyline reference) : reference_(std::move(reference)) {
    const auto& p = reference_.points();
    const std::size_t n = p.size();
    if (n < 2) {
        throw GeometryError("curvilinear frame needs a reference with at least two points");
    }
    tangents_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
        tangents_[i] = normalized(p[hi] - p[lo]);
    }
    curvature_.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Point2 a = p[i] - p[i - 1];
        const Point2 b = p[i + 1] - p[i];
        const double turn = std::atan2(cross(a, b), dot(a, b));
        curvature_[i] = turn / (0.5 * (norm(a) + norm(b)));
    }
    if (n > 2) {
        curvature_.front() = curvature_[1];
        curvature_.back() = curvature_[n - 2];
    }
}

CurvilinearFrame::Locator CurvilinearFrame::locate(double s) const {
    const auto& cum = reference_.cumulative_arclength();
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    std::size_t i = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
    i = std::min(i, reference_.size() - 2);
    const double seg = cum[i + 1] - cum[i];
    return {i, std::clamp((s - cum[i]) / seg, 0.0, 1.0)};
}

FrenetPoint CurvilinearFrame::project(Point2 q) const {
    const auto& p = reference_.points();
    const auto& cum = reference_.cumulative_arclength();
    const std::size_t segments = p.size() - 1;

    std::size_t nearest = 0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < segments; ++i) {
        const double dd = point_segment_distance(q, p[i], p[i + 1]);
        if (dd < nearest_dist) {
            nearest_dist = dd;
            nearest = i;
        }
    }

    bool found = false;
    FrenetPoint best{};
    const std::size_t lo = nearest >= 2 ? nearest - 2 : 0;
    const std::size_t hi = std::min(segments - 1, nearest + 2);
    for (std::size_t i = lo; i <= hi; ++i) {
        const Point2 base = p[i];
        const Point2 dir = p[i + 1] - p[i];
        const Point2 n0 = normal_at(i);
        const Point2 dn = normal_at(i + 1) - n0;
        const Point2 rel = q - base;
        // cross(n(l), rel - l*dir) = 0 is quadratic in l.
        const double a = -cross(dn, dir);
        const double b = cross(dn, rel) - cross(n0, dir);
        const double c = cross(n0, rel);
        double roots[2];
        int count = 0;
        if (std::abs(a) < 1e-14 * std::max(1.0, std::abs(b))) {
            if (b != 0.0) {
                roots[count++] = -c / b;
            }
        } else {
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                // Numerically stable pair of roots.
                const double qq = -0.5 * (b + std::copysign(sq, b));
                if (qq != 0.0) {
                    roots[count++] = qq / a;
                    roots[count++] = c / qq;
                } else {
                    roots[count++] = 0.0;
                }
            }
        }
        for (int k = 0; k < count; ++k) {
            double lambda = roots[k];
            if (lambda < -kLambdaTolerance || lambda > 1.0 + kLambdaTolerance) {
                continue;
            }
            lambda = std::clamp(lambda, 0.0, 1.0);
            const Point2 n = n0 + lambda * dn;
            const double nn = dot(n, n);
            if (nn <= 1e-18) {
                continue;
            }
            const double d = dot(rel - lambda * dir, n) / nn;
            if (!found || std::abs(d) < std::abs(best.d)) {
                found = true;
                best = {cum[i] + lambda * (cum[i + 1] - cum[i]), d, true};
            }
        }
    }
    if (found) {
        return best;
    }

    // Beyond an end: extrapolate along the end tangent.
    const double d_start = distance(q, p.front());
    const double d_end = distance(q, p.back());
    if (d_start <= d_end) {
        const Point2 t = tangents_.front();
        const Point2 rel = q - p.front();
        return {dot(rel, t), cross(t, rel), false};
    }
    const Point2 t = tangents_.back();
    const Point2 rel = q - p.back();
    return {length() + dot(rel, t), cross(t, rel), false};
}

Point2 CurvilinearFrame::to_cartesian(double s, double d) const {
    constexpr double eps = 1e-9;
    if (s < -eps || s > length() + eps) {
        throw std::out_of_range("arc length outside the reference path");
    }
    const Locator loc = locate(s);
    const double kappa = curvature_at(s);
    if (std::abs(d * kappa) >= 1.0) {
        throw FoldOverError("lateral offset folds the frame at this curvature");
    }
    const auto& p = reference_.points();
    const Point2 base = p[loc.segment] + loc.lambda * (p[loc.segment + 1] - p[loc.segment]);
    const Point2 n = (1.0 - loc.lambda) * normal_at(loc.segment) + loc.lambda * normal_at(loc.segment + 1);
    return base + d * n;
}

Point2 CurvilinearFrame::tangent_at(double s) const {
    const Locator loc = locate(s);
    const Point2 t =
        (1.0 - loc.lambda) * tangents_[loc.segment] + loc.lambda * tangents_[loc.segment + 1];
    const double n = norm(t);
    return n > 0.0 ? Point2{t.x / n, t.y / n} : tangents_[loc.segment];
}

double CurvilinearFrame::heading_at(double s) const {
    const Point2 t = tangent_at(s);
    return std::atan2(t.y, t.x);
}

double CurvilinearFrame::curvature_at(double s) const {
    const Locator loc = locate(s);
    return (1.0 - loc.lambda) * curvature_[loc.segment] + loc.lambda * curvature_[loc.segment + 1];
}

FrenetPoint project_to_frame(const CurvilinearFrame& frame, Point2 p) { return frame.project(p); }

Point2 frame_to_cartesian(const CurvilinearFrame& frame, double s, double d) {
    return frame.to_cartesian(s, d);
}

// ---------------------------------------------------------------- boxes

std::array<Point2, 4> OrientedBox::corners() const {
    const Point2 u = heading_vector(heading);
    const Point2 n{-u.y, u.x};
    const Point2 hl = 0.5 * length * u;
    const Point2 hw = 0.5 * width * n;
    return {center + hl + hw, center - hl + hw, center - hl - hw, center + hl - hw};
}

OrientedBox occupancy(const AgentState& state, const Shape& shape) {
    return {{state.x, state.y}, state.theta, shape.length, shape.width};
}

bool convex_overlap(std::span<const Point2> a, std::span<const Point2> b) {
    return !separated_on_edges(a, a, b) && !separated_on_edges(b, a, b);
}

bool boxes_intersect(const OrientedBox& a, const OrientedBox& b) {
    // Cheap rejection on circumscribed circles.
    const double ra = 0.5 * std::hypot(a.length, a.width);
    const double rb = 0.5 * std::hypot(b.length, b.width);
    if (distance(a.center, b.center) > ra + rb + 1e-9) {
        return false;
    }
    const auto ca = a.corners();
    const auto cb = b.corners();
    return convex_overlap(ca, cb);
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0) {
        return distance(p, a);
    }
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double o1 = orientation(a, b, c);
    const double o2 = orientation(a, b, d);
    const double o3 = orientation(c, d, a);
    const double o4 = orientation(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) {
        return true;
    }
    return (o1 == 0 && on_segment(c, a, b)) || (o2 == 0 && on_segment(d, a, b)) ||
           (o3 == 0 && on_segment(a, c, d)) || (o4 == 0 && on_segment(b, c, d));
}

double min_distance(const OrientedBox& a, const OrientedBox& b) {
    if (boxes_intersect(a, b)) {
        return 0.0;
    }
    const auto ca = a.corners();
    const auto cb = b.corners();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
            best = std::min(best, point_segment_distance(cb[j], ca[i], ca[(i + 1) % 4]));
        }
    }
    return best;
}

bool box_intersects_polygon(const OrientedBox& box, const Polygon& convex_polygon) {
    const auto c = box.corners();
    return convex_overlap(c, convex_polygon.vertices());
}

bool box_inside_region(const OrientedBox& box, std::span<const Polygon> region, double spacing) {
    if (spacing <= 0.0) {
        throw std::invalid_argument("sample spacing must be positive");
    }
    const auto c = box.corners();
    Point2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Point2 hi{-lo.x, -lo.y};
    for (const auto& p : c) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    std::vector<const Polygon*> candidates;
    for (const auto& poly : region) {
        if (poly.max_corner().x < lo.x || poly.min_corner().x > hi.x || poly.max_corner().y < lo.y ||
            poly.min_corner().y > hi.y) {
            continue;
        }
        candidates.push_back(&poly);
    }
    if (candidates.empty()) {
        return false;
    }
    const Polygon* last_hit = candidates.front();
    auto covered = [&](Point2 q) {
        if (last_hit->contains(q)) {
            return true;
        }
        for (const Polygon* poly : candidates) {
            if (poly != last_hit && poly->contains(q)) {
                last_hit = poly;
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < 4; ++i) {
        const Point2 a = c[i];
        const Point2 b = c[(i + 1) % 4];
        const auto steps = static_cast<int>(std::ceil(distance(a, b) / spacing));
        for (int k = 0; k < std::max(steps, 1); ++k) {
            const double t = static_cast<double>(k) / std::max(steps, 1);
            if (!covered(a + t * (b - a))) {
                return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------- polygons

double signed_area(std::span<const Point2> ring) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        acc += cross(ring[i], ring[(i + 1) % ring.size()]);
    }
    return 0.5 * acc;
}

Polygon::Polygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() > 1 && vertices_.front() == vertices_.back()) {
        vertices_.pop_back();
    }
    const std::size_t n = vertices_.size();
    if (n < 3) {
        throw GeometryError("polygon needs at least three vertices");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(vertices_[i].x) || !std::isfinite(vertices_[i].y)) {
            throw GeometryError("polygon vertex is not finite");
        }
        if (vertices_[i] == vertices_[(i + 1) % n]) {
            throw GeometryError("polygon has repeated consecutive vertices");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) {
                continue;
            }
            if (segments_intersect(vertices_[i], vertices_[(i + 1) % n], vertices_[j],
                                   vertices_[(j + 1) % n])) {
                throw GeometryError("polygon ring is self-intersecting");
            }
        }
    }
    const double a = signed_area(vertices_);
    if (a == 0.0) {
        throw GeometryError("polygon has zero area");
    }
    if (a < 0.0) {
        std::reverse(vertices_.begin(), vertices_.end());
    }
    lo_ = hi_ = vertices_.front();
    for (const auto& p : vertices_) {
        lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
        hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
    }
}

double Polygon::area() const { return signed_area(vertices_); }

bool Polygon::contains(Point2 p) const {
    if (p.x < lo_.x - 1e-9 || p.x > hi_.x + 1e-9 || p.y < lo_.y - 1e-9 || p.y > hi_.y + 1e-9) {
        return false;
    }
    const std::size_t n = vertices_.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = vertices_[j];
        const Point2 b = vertices_[i];
        if (point_segment_distance(p, a, b) <= 1e-9) {
            return true;
        }
        if ((b.y > p.y) != (a.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) {
                inside = !inside;
            }
        }
    }
    return inside;
}

std::vector<Point2> convex_hull(std::vector<Point2> points) {
    std::sort(points.begin(), points.end(),
              [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) {
        return points;
    }
    std::vector<Point2> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
        while (k >= 2 && orientation(hull[k - 2], hull[k - 1], p) <= 0) {
            --k;
        }
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
        const Point2 p = points[i];
        while (k >= t && orientation(hull[k - 2], hull[k - 1], p) <= 0) {
            --k;
        }
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
    if (a.max_corner().x < b.min_corner().x || b.max_corner().x < a.min_corner().x ||
        a.max_corner().y < b.min_corner().y || b.max_corner().y < a.min_corner().y) {
        return false;
    }
    for (const auto& p : a.vertices()) {
        if (b.contains(p)) {
            return true;
        }
    }
    for (const auto& p : b.vertices()) {
        if (a.contains(p)) {
            return true;
        }
    }
    const auto& va = a.vertices();
    const auto& vb = b.vertices();
    for (std::size_t i = 0; i < va.size(); ++i) {
        for (std::size_t j = 0; j < vb.size(); ++j) {
            if (segments_intersect(va[i], va[(i + 1) % va.size()], vb[j], vb[(j + 1) % vb.size()])) {
                return true;
            }
        }
    }
    return false;
}

}  // namespace intersim
