#include "vanet/mobility.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "vanet/errors.hpp"
#include "vanet/rng.hpp"

namespace vanet {

void GridSpec::validate() const {
    auto fail = [](const char* field, const char* why) {
        throw ConfigError(fmt::format("scenario.grid.{}: {}", field, why));
    };
    if (!(road_length > 0.0)) fail("road_length", "must be positive");
    if (!(block_size > 0.0)) fail("block_size", "must be positive");
    if (!(street_width > 0.0) || !(street_width < block_size))
        fail("street_width", "must be positive and below block_size");
    if (lanes < 1) fail("lanes", "must be at least 1");
    if (!(lane_width >= 0.0)) fail("lane_width", "must be non-negative");
    if (!((lanes - 1) * lane_width * 0.5 < street_width * 0.5))
        fail("lanes", "lanes do not fit inside the street width");
    if (!(speed_min > 0.0)) fail("speed_min", "must be positive");
    if (!(speed_min <= speed_max)) fail("speed_max", "must be >= speed_min");
    if (!(building_fraction >= 0.0 && building_fraction <= 1.0))
        fail("building_fraction", "must lie in [0, 1]");
    if (!(horizon > 0.0)) fail("horizon", "must be positive");
    const std::uint32_t m = blocks_per_side();
    if (bus_loop_blocks < 1 || bus_loop_blocks > m)
        fail("bus_loop_blocks", "must be between 1 and the blocks per side");
    if (n_rsus > (m + 1) * (m + 1)) fail("n_rsus", "more RSUs than intersections");
}

std::uint32_t GridSpec::bus_count() const {
    if (vehicles_per_bus == 0) return n_buses;
    return n_buses + (n_vehicles + vehicles_per_bus - 1) / vehicles_per_bus;
}

std::uint32_t GridSpec::blocks_per_side() const {
    std::uint32_t m = 1;
    while (2.0 * (m + 1) * m * block_size < road_length) ++m;
    return m;
}

namespace {

enum class Heading { PosX, NegX, PosY, NegY };

constexpr std::array<Heading, 4> kHeadings{Heading::PosX, Heading::NegX, Heading::PosY,
                                           Heading::NegY};

Heading reverse(Heading h) {
    switch (h) {
        case Heading::PosX: return Heading::NegX;
        case Heading::NegX: return Heading::PosX;
        case Heading::PosY: return Heading::NegY;
        case Heading::NegY: return Heading::PosY;
    }
    return h;
}

std::array<int, 2> step(Heading h) {
    switch (h) {
        case Heading::PosX: return {1, 0};
        case Heading::NegX: return {-1, 0};
        case Heading::PosY: return {0, 1};
        case Heading::NegY: return {0, -1};
    }
    return {0, 0};
}

// Cars random-walk the intersection graph; the lane offset shifts the whole
// centerline path diagonally, which keeps it continuous through corners.
std::vector<TraceSample> walk_car(const GridSpec& spec, const std::string& id, Rng& rng) {
    const int m = static_cast<int>(spec.blocks_per_side());
    const double b = spec.block_size;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> speed_dist(spec.speed_min, spec.speed_max);

    const double speed = spec.speed_min == spec.speed_max ? spec.speed_min : speed_dist(rng);
    const auto lane = std::uniform_int_distribution<std::uint32_t>(0, spec.lanes - 1)(rng);
    const double offset = (static_cast<double>(lane) - (spec.lanes - 1) * 0.5) * spec.lane_width;

    // Start on a uniformly chosen street edge.
    const int edges_per_axis = m * (m + 1);
    const int edge = std::uniform_int_distribution<int>(0, 2 * edges_per_axis - 1)(rng);
    const bool horizontal = edge < edges_per_axis;
    const int e = horizontal ? edge : edge - edges_per_axis;
    int ni, nj;      // start node of the edge
    Heading along;   // direction from start node to end node
    if (horizontal) {
        ni = e % m;
        nj = e / m;
        along = Heading::PosX;
    } else {
        ni = e / m;
        nj = e % m;
        along = Heading::PosY;
    }
    const double frac = unit(rng);
    const bool forward = unit(rng) < 0.5;
    Heading heading = forward ? along : reverse(along);
    const auto [dx, dy] = step(along);
    Point pos{(ni + dx * frac) * b, (nj + dy * frac) * b};
    // Next node in the travel direction.
    int ti = forward ? ni + dx : ni;
    int tj = forward ? nj + dy : nj;

    std::vector<TraceSample> out;
    auto emit = [&](double t, Point p) {
        out.push_back(TraceSample{t, id, Point{p.x + offset, p.y + offset}, speed});
    };
    double t = 0.0;
    emit(t, pos);
    while (true) {
        const Point target{ti * b, tj * b};
        const double arrive = t + distance(pos, target) / speed;
        if (arrive >= spec.horizon) {
            const double f = (spec.horizon - t) / (arrive - t);
            emit(spec.horizon, Point{pos.x + f * (target.x - pos.x), pos.y + f * (target.y - pos.y)});
            break;
        }
        if (arrive > t) emit(arrive, target);
        t = arrive;
        pos = target;
        std::array<Heading, 4> options{};
        std::size_t n_opt = 0;
        for (const Heading h : kHeadings) {
            if (h == reverse(heading)) continue;
            const auto [sx, sy] = step(h);
            const int ci = ti + sx, cj = tj + sy;
            if (ci < 0 || cj < 0 || ci > m || cj > m) continue;
            options[n_opt++] = h;
        }
        if (n_opt == 0) options[n_opt++] = reverse(heading);
        heading = options[std::uniform_int_distribution<std::size_t>(0, n_opt - 1)(rng)];
        const auto [sx, sy] = step(heading);
        ti += sx;
        tj += sy;
    }
    return out;
}

// Buses circle a fixed loop counter-clockwise at speed_min.
std::vector<TraceSample> loop_bus(const GridSpec& spec, const std::string& id, Rng& rng) {
    const int m = static_cast<int>(spec.blocks_per_side());
    const int l = static_cast<int>(spec.bus_loop_blocks);
    const double b = spec.block_size;
    const int i0 = std::uniform_int_distribution<int>(0, m - l)(rng);
    const int j0 = std::uniform_int_distribution<int>(0, m - l)(rng);
    const double side = l * b;
    const std::array<Point, 4> corners{Point{i0 * b, j0 * b}, Point{i0 * b + side, j0 * b},
                                       Point{i0 * b + side, j0 * b + side},
                                       Point{i0 * b, j0 * b + side}};
    const double perimeter = 4.0 * side;
    const double speed = spec.speed_min;
    double s = std::uniform_real_distribution<double>(0.0, perimeter)(rng);

    auto point_at = [&](double arc) {
        arc = std::fmod(arc, perimeter);
        const int k = std::min(3, static_cast<int>(arc / side));
        const double f = (arc - k * side) / side;
        const Point a = corners[k], c = corners[(k + 1) % 4];
        return Point{a.x + f * (c.x - a.x), a.y + f * (c.y - a.y)};
    };

    std::vector<TraceSample> out;
    double t = 0.0;
    out.push_back(TraceSample{t, id, point_at(s), speed});
    while (true) {
        const double to_corner = side - std::fmod(s, side);
        const double arrive = t + to_corner / speed;
        if (arrive >= spec.horizon) {
            out.push_back(TraceSample{spec.horizon, id, point_at(s + (spec.horizon - t) * speed), speed});
            break;
        }
        s += to_corner;
        t = arrive;
        out.push_back(TraceSample{t, id, point_at(s), speed});
    }
    return out;
}

double parse_number(std::string_view field, std::size_t line, const char* name) {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc{} || ptr != end || field.empty() || !std::isfinite(v))
        throw ParseError(line, fmt::format("bad {} '{}'", name, field));
    return v;
}

}  // namespace

GridScenario generate_grid_scenario(const GridSpec& spec, std::uint64_t seed) {
    spec.validate();
    GridScenario out;
    const std::uint32_t m = spec.blocks_per_side();
    const double b = spec.block_size;
    const double hw = spec.street_width * 0.5;

    Rng build_rng = substream(seed, "buildings");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint32_t by = 0; by < m; ++by) {
        for (std::uint32_t bx = 0; bx < m; ++bx) {
            if (unit(build_rng) < spec.building_fraction)
                out.obstacles.emplace_back(Point{bx * b + hw, by * b + hw},
                                           Point{(bx + 1) * b - hw, (by + 1) * b - hw});
        }
    }

    Rng car_rng = substream(seed, "mobility");
    for (std::uint32_t i = 0; i < spec.n_vehicles; ++i) {
        auto s = walk_car(spec, fmt::format("veh{:04d}", i), car_rng);
        out.samples.insert(out.samples.end(), s.begin(), s.end());
    }
    Rng bus_rng = substream(seed, "buses");
    for (std::uint32_t i = 0, n = spec.bus_count(); i < n; ++i) {
        auto s = loop_bus(spec, fmt::format("bus{:03d}", i), bus_rng);
        out.samples.insert(out.samples.end(), s.begin(), s.end());
    }

    const std::uint32_t nodes = (m + 1) * (m + 1);
    for (std::uint32_t k = 0; k < spec.n_rsus; ++k) {
        const std::uint32_t idx = static_cast<std::uint32_t>(
            (static_cast<std::uint64_t>(2 * k + 1) * nodes) / (2ULL * spec.n_rsus));
        out.rsus.push_back(Point{(idx % (m + 1)) * b, (idx / (m + 1)) * b});
    }
    return out;
}

std::vector<TraceSample> parse_trace(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(1, "missing header");
    ++lineno;
    if (line != kTraceHeader)
        throw ParseError(1, fmt::format("expected header '{}'", kTraceHeader));

    std::vector<TraceSample> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.back() == '\r') throw ParseError(lineno, "CR line endings are not accepted");
        std::array<std::string_view, 5> f{};
        std::size_t n = 0, start = 0;
        const std::string_view sv(line);
        while (true) {
            const std::size_t comma = sv.find(',', start);
            if (n == f.size()) throw ParseError(lineno, "too many fields");
            f[n++] = sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (n != f.size()) throw ParseError(lineno, fmt::format("expected 5 fields, got {}", n));
        TraceSample s;
        s.time = parse_number(f[0], lineno, "time_s");
        if (f[1].empty()) throw ParseError(lineno, "empty vehicle_id");
        s.vehicle_id = std::string(f[1]);
        s.pos.x = parse_number(f[2], lineno, "x_m");
        s.pos.y = parse_number(f[3], lineno, "y_m");
        s.speed = parse_number(f[4], lineno, "speed_mps");
        if (s.time < 0.0) throw ParseError(lineno, "negative time");
        if (s.speed < 0.0) throw ParseError(lineno, "negative speed");
        rows.push_back(std::move(s));
    }

    // Per-vehicle order must already be strictly increasing in the file.
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.vehicle_id < b.vehicle_id; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].vehicle_id == rows[i - 1].vehicle_id && !(rows[i].time > rows[i - 1].time))
            throw ValidationError(fmt::format("vehicle {}: timestamps not strictly increasing at t={}",
                                              rows[i].vehicle_id, rows[i].time));
    }
    return rows;
}

std::vector<TraceSample> load_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("file not found: {}", path.string()));
    return parse_trace(in);
}

namespace {

// Fixed notation with the fewest decimals (at least three) that reads back exactly.
std::string exact_fixed(double v) {
    std::string s;
    for (int p = 3; p <= 17; ++p) {
        s = fmt::format("{:.{}f}", v, p);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        if (back == v) break;
    }
    return s;
}

}  // namespace

void write_trace(std::ostream& out, std::span<const TraceSample> samples) {
    out << kTraceHeader << '\n';
    for (const auto& s : samples)
        out << exact_fixed(s.time) << ',' << s.vehicle_id << ',' << exact_fixed(s.pos.x) << ','
            << exact_fixed(s.pos.y) << ',' << exact_fixed(s.speed) << '\n';
}

// ---------------------------------------------------------------------------

Trace::Trace(std::vector<TraceSample> samples) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const auto& a, const auto& b) { return a.vehicle_id < b.vehicle_id; });
    for (auto& s : samples) {
        if (!(s.time >= 0.0) || !(s.speed >= 0.0) || !std::isfinite(s.pos.x) ||
            !std::isfinite(s.pos.y))
            throw ValidationError(fmt::format("vehicle {}: invalid sample at t={}", s.vehicle_id, s.time));
        if (tracks_.empty() || tracks_.back().id != s.vehicle_id) {
            tracks_.push_back(Track{s.vehicle_id, {}, {}, {}});
        } else if (!(s.time > tracks_.back().times.back())) {
            throw ValidationError(fmt::format("vehicle {}: timestamps not strictly increasing at t={}",
                                              s.vehicle_id, s.time));
        }
        auto& tr = tracks_.back();
        tr.times.push_back(s.time);
        tr.points.push_back(s.pos);
        tr.speeds.push_back(s.speed);
    }
}

std::optional<std::size_t> Trace::find(std::string_view id) const {
    const auto it = std::lower_bound(tracks_.begin(), tracks_.end(), id,
                                     [](const Track& t, std::string_view v) { return t.id < v; });
    if (it == tracks_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - tracks_.begin());
}

Point Trace::interpolate(const Track& tr, std::size_t k, double t) {
    if (t == tr.times[k] || k + 1 == tr.times.size()) return tr.points[k];
    const double f = (t - tr.times[k]) / (tr.times[k + 1] - tr.times[k]);
    const Point a = tr.points[k], b = tr.points[k + 1];
    return Point{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

Point Trace::position_at(std::string_view id, double t) const {
    const auto i = find(id);
    if (!i) throw OutOfSpan(fmt::format("unknown vehicle {}", id));
    return position_at(*i, t);
}

Point Trace::position_at(std::size_t i, double t) const {
    if (!covers(i, t))
        throw OutOfSpan(fmt::format("vehicle {}: t={} outside [{}, {}]", tracks_[i].id, t,
                                    begin_time(i), end_time(i)));
    std::size_t hint = 0;
    return position_at(i, t, hint);
}

Point Trace::position_at(std::size_t i, double t, std::size_t& hint) const {
    const Track& tr = tracks_[i];
    const std::size_t n = tr.times.size();
    if (hint >= n) hint = 0;
    // Fast path: forward scan from the cursor (queries are mostly monotone).
    if (tr.times[hint] <= t) {
        std::size_t k = hint;
        for (int steps = 0; steps < 4 && k + 1 < n && tr.times[k + 1] <= t; ++steps) ++k;
        if (k + 1 == n || tr.times[k + 1] > t) {
            hint = k;
            return interpolate(tr, k, t);
        }
    }
    const auto it = std::upper_bound(tr.times.begin(), tr.times.end(), t);
    hint = it == tr.times.begin() ? 0 : static_cast<std::size_t>(it - tr.times.begin()) - 1;
    return interpolate(tr, hint, t);
}

double Trace::max_speed() const {
    double v = 0.0;
    for (const auto& tr : tracks_)
        for (std::size_t k = 0; k + 1 < tr.times.size(); ++k)
            v = std::max(v, distance(tr.points[k], tr.points[k + 1]) / (tr.times[k + 1] - tr.times[k]));
    return v;
}

std::vector<TraceSample> Trace::samples() const {
    std::vector<TraceSample> out;
    for (const auto& tr : tracks_)
        for (std::size_t k = 0; k < tr.times.size(); ++k)
            out.push_back(TraceSample{tr.times[k], tr.id, tr.points[k], tr.speeds[k]});
    return out;
}

}  // namespace vanet
