#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vanet/geometry.hpp"

namespace vanet {

struct TraceSample {
    double time = 0.0;        // s
    std::string vehicle_id;
    Point pos;                // m
    double speed = 0.0;       // m/s

    friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

/// Synthetic Manhattan grid. Streets run along multiples of block_size in both
/// axes; the number of blocks per side is the smallest that reaches road_length
/// of total street.
struct GridSpec {
    double road_length = 10000.0;
    double block_size = 200.0;
    double street_width = 30.0;
    std::uint32_t lanes = 3;
    double lane_width = 3.5;
    double speed_min = 13.4112;   // 30 mph
    double speed_max = 22.352;    // 50 mph
    std::uint32_t n_vehicles = 200;
    std::uint32_t n_buses = 0;            // fixed buses on top of the per-vehicle share
    std::uint32_t vehicles_per_bus = 50;  // one extra bus per this many cars (0: none)
    std::uint32_t n_rsus = 9;
    double building_fraction = 0.5;
    std::uint32_t bus_loop_blocks = 2;
    double horizon = 210.0;       // trace length, s

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// Blocks per side of the square grid.
    std::uint32_t blocks_per_side() const;
    double extent() const { return blocks_per_side() * block_size; }

    /// n_buses + ceil(n_vehicles / vehicles_per_bus).
    std::uint32_t bus_count() const;
};

struct GridScenario {
    std::vector<TraceSample> samples;
    std::vector<Obstacle> obstacles;
    std::vector<Point> rsus;
};

/// Deterministic for a fixed (spec, seed). Cars random-walk the street graph
/// at a constant per-car speed; buses circle fixed rectangular loops; every
/// block is built up with probability building_fraction.
GridScenario generate_grid_scenario(const GridSpec& spec, std::uint64_t seed);

/// Trace CSV with the header `time_s,vehicle_id,x_m,y_m,speed_mps`.
/// Result is sorted by (vehicle_id, time). Throws ParseError (with line) on
/// malformed rows and ValidationError on per-vehicle time order violations.
std::vector<TraceSample> load_trace(const std::filesystem::path& path);
std::vector<TraceSample> parse_trace(std::istream& in);
void write_trace(std::ostream& out, std::span<const TraceSample> samples);

inline constexpr std::string_view kTraceHeader = "time_s,vehicle_id,x_m,y_m,speed_mps";

/// Piecewise-linear trajectories indexed by vehicle. Immutable after construction.
class Trace {
public:
    Trace() = default;
    explicit Trace(std::vector<TraceSample> samples);

    std::size_t size() const { return tracks_.size(); }
    const std::string& id(std::size_t i) const { return tracks_[i].id; }
    std::optional<std::size_t> find(std::string_view id) const;

    double begin_time(std::size_t i) const { return tracks_[i].times.front(); }
    double end_time(std::size_t i) const { return tracks_[i].times.back(); }
    bool covers(std::size_t i, double t) const {
        return t >= begin_time(i) && t <= end_time(i);
    }

    /// Throws OutOfSpan outside the vehicle's sampled span.
    Point position_at(std::string_view id, double t) const;
    Point position_at(std::size_t i, double t) const;

    /// Same as position_at, reusing `hint` as a segment cursor. Caller must
    /// check covers() first.
    Point position_at(std::size_t i, double t, std::size_t& hint) const;

    std::vector<TraceSample> samples() const;

    /// Largest displacement rate over any trajectory segment, m/s.
    double max_speed() const;

private:
    struct Track {
        std::string id;
        std::vector<double> times;
        std::vector<Point> points;
        std::vector<double> speeds;
    };

    static Point interpolate(const Track& tr, std::size_t k, double t);

    std::vector<Track> tracks_;
};

}  // namespace vanet
