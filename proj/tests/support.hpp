#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "vanet/geometry.hpp"
#include "vanet/mobility.hpp"
#include "vanet/protocols.hpp"
#include "vanet/scenario.hpp"
#include "vanet/simulation.hpp"

namespace testing {

using namespace vanet;

/// Parked vehicles: cars first, then buses, each at a fixed point for [0, horizon].
inline Scenario static_scenario(std::span<const Point> cars, std::span<const Point> buses,
                                std::vector<Obstacle> obstacles = {}, std::vector<Point> rsus = {},
                                double horizon = 100.0) {
    std::vector<TraceSample> s;
    for (std::size_t i = 0; i < cars.size(); ++i) {
        const auto id = fmt::format("veh{:04d}", i);
        s.push_back({0.0, id, cars[i], 0.0});
        s.push_back({horizon, id, cars[i], 0.0});
    }
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto id = fmt::format("bus{:03d}", i);
        s.push_back({0.0, id, buses[i], 0.0});
        s.push_back({horizon, id, buses[i], 0.0});
    }
    return Scenario(Trace(std::move(s)), std::move(obstacles), std::move(rsus));
}

/// Test-friendly parameters: no contention randomness, fixed cloud legs.
inline SimParams quiet_params(ProtocolKind kind, std::vector<ScriptedMessage> script) {
    SimParams p;
    p.protocol.kind = kind;
    p.mac.zero_backoff = true;
    p.workload.script = std::move(script);
    p.duration = 10.0;
    p.drain = 20.0;
    return p;
}

/// Signed distance from p to a closed rectangle: negative inside.
inline double signed_distance(Point p, Point lo, Point hi) {
    const double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
    const double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
    if (dx > 0.0 || dy > 0.0) return std::sqrt(dx * dx + dy * dy);
    return -std::min({p.x - lo.x, hi.x - p.x, p.y - lo.y, hi.y - p.y});
}

/// Minimum signed distance between the segment and the rectangle by dense
/// sampling (10^4 points), then zooming in around the best sample. The
/// signed distance to a convex set is convex along a line, so the zoom
/// cannot miss the global minimum.
inline double sampled_signed_clearance(Point a, Point b, Point lo, Point hi) {
    constexpr int kSamples = 10000;
    double t0 = 0.0, t1 = 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 6; ++round) {
        double best_t = t0;
        for (int i = 0; i <= kSamples; ++i) {
            const double t = t0 + (t1 - t0) * i / kSamples;
            const Point p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
            const double d = signed_distance(p, lo, hi);
            if (d < best) {
                best = d;
                best_t = t;
            }
        }
        const double step = (t1 - t0) / kSamples;
        t0 = std::max(0.0, best_t - step);
        t1 = std::min(1.0, best_t + step);
    }
    return best;
}

/// Exhaustive maximum coverage over every subset of at most k gateways.
inline std::size_t best_coverage(const std::vector<std::vector<bool>>& covers, std::uint32_t k) {
    const std::size_t n = covers.size();
    const std::size_t m = n ? covers[0].size() : 0;
    std::size_t best = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::uint32_t>(__builtin_popcount(mask)) > k) continue;
        std::size_t c = 0;
        for (std::size_t t = 0; t < m; ++t)
            for (std::size_t g = 0; g < n; ++g)
                if ((mask >> g) & 1u && covers[g][t]) {
                    ++c;
                    break;
                }
        best = std::max(best, c);
    }
    return best;
}

}  // namespace testing
