#include "vanet/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <utility>

#include "vanet/errors.hpp"

namespace vanet {

namespace {

// Both directions of a link must give the same answer, so every segment
// query runs on a canonical endpoint order.
std::pair<Point, Point> canonical(Point a, Point b) {
    if (b.x < a.x || (b.x == a.x && b.y < a.y)) return {b, a};
    return {a, b};
}

double point_segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len_sq = dx * dx + dy * dy;
    double t = len_sq > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, Point{a.x + t * dx, a.y + t * dy});
}

// Parametric interval of the infinite line a + t(b - a) inside the closed
// rectangle; empty when enter > exit.
std::pair<double, double> clip_interval(Point a, Point b, const Obstacle& obs) {
    double enter = -std::numeric_limits<double>::infinity();
    double exit = std::numeric_limits<double>::infinity();
    const std::array<double, 2> origin{a.x, a.y};
    const std::array<double, 2> dir{b.x - a.x, b.y - a.y};
    const std::array<double, 2> lo{obs.min_corner().x, obs.min_corner().y};
    const std::array<double, 2> hi{obs.max_corner().x, obs.max_corner().y};
    for (int axis = 0; axis < 2; ++axis) {
        if (dir[axis] == 0.0) {
            if (origin[axis] < lo[axis] || origin[axis] > hi[axis]) return {1.0, 0.0};
            continue;
        }
        double t1 = (lo[axis] - origin[axis]) / dir[axis];
        double t2 = (hi[axis] - origin[axis]) / dir[axis];
        if (t1 > t2) std::swap(t1, t2);
        enter = std::max(enter, t1);
        exit = std::min(exit, t2);
    }
    return {enter, exit};
}

bool blocked_canonical(Point a, Point b, const Obstacle& obs) {
    const auto [enter, exit] = clip_interval(a, b, obs);
    return enter <= exit && enter < 1.0 && exit > 0.0;
}

double clearance_canonical(Point a, Point b, const Obstacle& obs) {
    if (obs.contains(a) || obs.contains(b) || blocked_canonical(a, b, obs)) return 0.0;
    const Point lo = obs.min_corner();
    const Point hi = obs.max_corner();
    double best = std::min(obs.distance_to(a), obs.distance_to(b));
    for (const Point c : {lo, Point{hi.x, lo.y}, hi, Point{lo.x, hi.y}})
        best = std::min(best, point_segment_distance(c, a, b));
    return best;
}

bool shadows(Point a, Point b, const Obstacle& obs, double delta) {
    // Nothing within delta of the rectangle can lie outside its delta-padded box.
    const Point lo = obs.min_corner();
    const Point hi = obs.max_corner();
    if (std::max(a.x, b.x) < lo.x - delta || std::min(a.x, b.x) > hi.x + delta ||
        std::max(a.y, b.y) < lo.y - delta || std::min(a.y, b.y) > hi.y + delta)
        return false;
    if (obs.contains(a) || obs.contains(b)) return true;
    if (blocked_canonical(a, b, obs)) return true;
    return delta > 0.0 && clearance_canonical(a, b, obs) < delta;
}

}  // namespace

Obstacle::Obstacle(Point min_corner, Point max_corner) : min_(min_corner), max_(max_corner) {
    if (!std::isfinite(min_.x) || !std::isfinite(min_.y) || !std::isfinite(max_.x) ||
        !std::isfinite(max_.y))
        throw InvalidInput("obstacle corners must be finite");
    if (!(min_.x < max_.x) || !(min_.y < max_.y))
        throw InvalidInput("obstacle needs min_corner strictly below-left of max_corner");
}

double Obstacle::distance_to(Point p) const {
    const double dx = std::max({min_.x - p.x, 0.0, p.x - max_.x});
    const double dy = std::max({min_.y - p.y, 0.0, p.y - max_.y});
    return std::sqrt(dx * dx + dy * dy);
}

std::string_view to_string(RegionClass c) {
    switch (c) {
        case RegionClass::Shadowed: return "Shadowed";
        case RegionClass::Clear: return "Clear";
        case RegionClass::OutOfRange: return "OutOfRange";
    }
    return "?";
}

void LinkModel::validate() const {
    if (!(t_base > 0.0)) throw InvalidInput("t_base must be positive");
    if (!(clearance_delta >= 0.0)) throw InvalidInput("clearance_delta must be non-negative");
    if (!(clearance_delta < t_base)) throw InvalidInput("clearance_delta must be below t_base");
}

bool segment_blocked(Point a, Point b, const Obstacle& obs) {
    if (a == b) throw InvalidInput("degenerate segment");
    const auto [p, q] = canonical(a, b);
    return blocked_canonical(p, q, obs);
}

double min_clearance(Point a, Point b, const Obstacle& obs) {
    const auto [p, q] = canonical(a, b);
    return clearance_canonical(p, q, obs);
}

RegionClass classify_link(Point tx, Point rx, std::span<const Obstacle> obstacles,
                          const LinkModel& lm) {
    if (tx == rx) throw InvalidInput("degenerate segment");
    if (distance(tx, rx) > lm.t_base) return RegionClass::OutOfRange;
    const auto [a, b] = canonical(tx, rx);
    for (const auto& obs : obstacles)
        if (shadows(a, b, obs, lm.clearance_delta)) return RegionClass::Shadowed;
    return RegionClass::Clear;
}

double shadow_fraction(Point v, std::span<const Point> neighbors,
                       std::span<const Obstacle> obstacles, const LinkModel& lm) {
    std::size_t in_range = 0;
    std::size_t shadowed = 0;
    for (const Point n : neighbors) {
        if (n == v) continue;
        const RegionClass c = classify_link(v, n, obstacles, lm);
        if (c == RegionClass::OutOfRange) continue;
        ++in_range;
        if (c == RegionClass::Shadowed) ++shadowed;
    }
    if (in_range == 0) return 1.0;
    return static_cast<double>(shadowed) / static_cast<double>(in_range);
}

// ---------------------------------------------------------------------------

ObstacleMap::ObstacleMap(std::vector<Obstacle> obstacles, double cell_size)
    : obstacles_(std::move(obstacles)), cell_(cell_size) {
    if (!(cell_ > 0.0)) throw InvalidInput("cell size must be positive");
    if (obstacles_.empty()) return;
    double min_x = obstacles_.front().min_corner().x, min_y = obstacles_.front().min_corner().y;
    double max_x = obstacles_.front().max_corner().x, max_y = obstacles_.front().max_corner().y;
    for (const auto& o : obstacles_) {
        min_x = std::min(min_x, o.min_corner().x);
        min_y = std::min(min_y, o.min_corner().y);
        max_x = std::max(max_x, o.max_corner().x);
        max_y = std::max(max_y, o.max_corner().y);
    }
    origin_x_ = min_x;
    origin_y_ = min_y;
    nx_ = static_cast<int>(std::floor((max_x - min_x) / cell_)) + 1;
    ny_ = static_cast<int>(std::floor((max_y - min_y) / cell_)) + 1;
    buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
    obstacle_cells_.reserve(obstacles_.size());
    for (std::uint32_t i = 0; i < obstacles_.size(); ++i) {
        const auto& o = obstacles_[i];
        const CellRange r =
            cells_for(o.min_corner().x, o.min_corner().y, o.max_corner().x, o.max_corner().y);
        obstacle_cells_.push_back(r);
        for (int cy = r.y0; cy <= r.y1; ++cy)
            for (int cx = r.x0; cx <= r.x1; ++cx)
                buckets_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(i);
    }
}

ObstacleMap::CellRange ObstacleMap::cells_for(double min_x, double min_y, double max_x,
                                              double max_y) const {
    auto cell = [this](double v, double origin, int n) {
        const double c = std::floor((v - origin) / cell_);
        return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(n - 1)));
    };
    return {cell(min_x, origin_x_, nx_), cell(min_y, origin_y_, ny_), cell(max_x, origin_x_, nx_),
            cell(max_y, origin_y_, ny_)};
}

RegionClass ObstacleMap::classify(Point tx, Point rx, const LinkModel& lm) const {
    if (tx == rx) throw InvalidInput("degenerate segment");
    if (distance(tx, rx) > lm.t_base) return RegionClass::OutOfRange;
    if (obstacles_.empty()) return RegionClass::Clear;
    const auto [a, b] = canonical(tx, rx);
    const double pad = lm.clearance_delta;
    if (obstacles_.size() <= kLinearScanLimit) {
        for (const auto& o : obstacles_)
            if (shadows(a, b, o, pad)) return RegionClass::Shadowed;
        return RegionClass::Clear;
    }
    const double qx0 = std::min(a.x, b.x) - pad, qx1 = std::max(a.x, b.x) + pad;
    const double qy0 = std::min(a.y, b.y) - pad, qy1 = std::max(a.y, b.y) + pad;
    const double gx1 = origin_x_ + nx_ * cell_, gy1 = origin_y_ + ny_ * cell_;
    if (qx1 < origin_x_ || qy1 < origin_y_ || qx0 > gx1 || qy0 > gy1) return RegionClass::Clear;
    const CellRange q = cells_for(qx0, qy0, qx1, qy1);
    for (int cy = q.y0; cy <= q.y1; ++cy) {
        for (int cx = q.x0; cx <= q.x1; ++cx) {
            for (const std::uint32_t i : buckets_[static_cast<std::size_t>(cy) * nx_ + cx]) {
                const CellRange& r = obstacle_cells_[i];
                // Visit each obstacle once: only in the first query cell it occupies.
                if (cx != std::max(r.x0, q.x0) || cy != std::max(r.y0, q.y0)) continue;
                if (shadows(a, b, obstacles_[i], pad)) return RegionClass::Shadowed;
            }
        }
    }
    return RegionClass::Clear;
}

bool ObstacleMap::inside_any(Point p) const {
    if (obstacles_.empty()) return false;
    const CellRange q = cells_for(p.x, p.y, p.x, p.y);
    for (const std::uint32_t i : buckets_[static_cast<std::size_t>(q.y0) * nx_ + q.x0])
        if (obstacles_[i].contains(p)) return true;
    return false;
}

}  // namespace vanet
