#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace vanet {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

inline double distance_sq(Point a, Point b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Axis-aligned building footprint. Closed set: the boundary blocks too.
class Obstacle {
public:
    /// Throws InvalidInput unless min_corner is strictly below-left of max_corner.
    Obstacle(Point min_corner, Point max_corner);

    Point min_corner() const { return min_; }
    Point max_corner() const { return max_; }

    bool contains(Point p) const {
        return p.x >= min_.x && p.x <= max_.x && p.y >= min_.y && p.y <= max_.y;
    }

    /// Euclidean distance from p to the rectangle (0 when inside).
    double distance_to(Point p) const;

    friend bool operator==(const Obstacle&, const Obstacle&) = default;

private:
    Point min_;
    Point max_;
};

/// Link verdict. Shadowed covers both hard blockage and the uncertain
/// clearance band, which is merged into the shadowed class.
enum class RegionClass : std::uint8_t { Shadowed, Clear, OutOfRange };

std::string_view to_string(RegionClass c);

struct LinkModel {
    double t_base = 300.0;          // transmission radius, m
    double clearance_delta = 5.0;   // width of the uncertain band, m

    /// Throws InvalidInput when t_base <= 0, delta < 0 or delta >= t_base.
    void validate() const;
};

/// True iff the open segment (a, b) meets the closed rectangle.
/// Throws InvalidInput for a == b.
bool segment_blocked(Point a, Point b, const Obstacle& obs);

/// Minimum distance between segment [a, b] and the rectangle. Zero when they meet.
double min_clearance(Point a, Point b, const Obstacle& obs);

RegionClass classify_link(Point tx, Point rx, std::span<const Obstacle> obstacles,
                          const LinkModel& lm);

/// Fraction of in-range neighbor links that are Shadowed. 1.0 when no
/// neighbor is in range.
double shadow_fraction(Point v, std::span<const Point> neighbors,
                       std::span<const Obstacle> obstacles, const LinkModel& lm);

/// Uniform bucket grid over a fixed obstacle set. classify() returns exactly
/// what classify_link() returns over the full set; it only skips obstacles
/// that cannot be within clearance_delta of the segment.
class ObstacleMap {
public:
    ObstacleMap() = default;
    explicit ObstacleMap(std::vector<Obstacle> obstacles, double cell_size = 100.0);

    std::span<const Obstacle> all() const { return obstacles_; }
    bool empty() const { return obstacles_.empty(); }

    RegionClass classify(Point tx, Point rx, const LinkModel& lm) const;

    /// True if p lies inside (or on the boundary of) any obstacle.
    bool inside_any(Point p) const;

    /// Below this many obstacles a plain scan beats the bucket walk.
    static constexpr std::size_t kLinearScanLimit = 64;

private:
    struct CellRange {
        int x0, y0, x1, y1;
    };

    CellRange cells_for(double min_x, double min_y, double max_x, double max_y) const;

    std::vector<Obstacle> obstacles_;
    std::vector<CellRange> obstacle_cells_;
    std::vector<std::vector<std::uint32_t>> buckets_;
    double cell_ = 100.0;
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    int nx_ = 0;
    int ny_ = 0;
};

}  // namespace vanet
