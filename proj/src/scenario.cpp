#include "vanet/scenario.hpp"

#include <fmt/format.h>

namespace vanet {

Scenario::Scenario(Trace trace, std::vector<Obstacle> obstacles, std::vector<Point> rsus)
    : trace_(std::move(trace)), obstacles_(std::move(obstacles)), rsus_(std::move(rsus)) {
    std::vector<std::uint32_t> buses;
    for (std::uint32_t i = 0; i < trace_.size(); ++i) {
        if (is_bus_id(trace_.id(i))) {
            buses.push_back(i);
        } else {
            track_of_.push_back(i);
            roles_.push_back(NodeRole::Car);
            ids_.push_back(trace_.id(i));
        }
    }
    n_cars_ = static_cast<std::uint32_t>(track_of_.size());
    n_buses_ = static_cast<std::uint32_t>(buses.size());
    for (const auto b : buses) {
        track_of_.push_back(b);
        roles_.push_back(NodeRole::Bus);
        ids_.push_back(trace_.id(b));
    }
    for (std::size_t k = 0; k < rsus_.size(); ++k) {
        roles_.push_back(NodeRole::Rsu);
        ids_.push_back(fmt::format("rsu{:03d}", k));
    }
}

std::optional<Point> Scenario::position(std::uint32_t node, double t) const {
    std::size_t hint = 0;
    return position(node, t, hint);
}

std::optional<Point> Scenario::position(std::uint32_t node, double t, std::size_t& hint) const {
    if (node >= first_rsu()) return rsus_[node - first_rsu()];
    const std::uint32_t track = track_of_[node];
    if (!trace_.covers(track, t)) return std::nullopt;
    return trace_.position_at(track, t, hint);
}

}  // namespace vanet
