#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vanet/geometry.hpp"
#include "vanet/mobility.hpp"

namespace vanet {

enum class NodeRole : std::uint8_t { Car, Bus, Rsu };

/// Immutable world description shared by every run on it.
///
/// Node numbering is fixed: cars occupy [0, n_cars), buses follow, RSUs come
/// last. A trace vehicle is a bus iff its id starts with "bus".
class Scenario {
public:
    Scenario(Trace trace, std::vector<Obstacle> obstacles, std::vector<Point> rsus);

    static bool is_bus_id(std::string_view id) { return id.starts_with("bus"); }

    std::size_t node_count() const { return roles_.size(); }
    std::uint32_t n_cars() const { return n_cars_; }
    std::uint32_t n_buses() const { return n_buses_; }
    std::uint32_t n_rsus() const { return static_cast<std::uint32_t>(rsus_.size()); }
    std::uint32_t first_bus() const { return n_cars_; }
    std::uint32_t first_rsu() const { return n_cars_ + n_buses_; }

    NodeRole role(std::uint32_t node) const { return roles_[node]; }
    const std::string& node_id(std::uint32_t node) const { return ids_[node]; }

    /// Ground-truth position; empty if the node is outside its trace span.
    std::optional<Point> position(std::uint32_t node, double t) const;
    /// Same with a caller-owned cursor (one per node) for monotone queries.
    std::optional<Point> position(std::uint32_t node, double t, std::size_t& hint) const;

    const Trace& trace() const { return trace_; }
    const ObstacleMap& obstacles() const { return obstacles_; }
    std::span<const Point> rsus() const { return rsus_; }

private:
    Trace trace_;
    ObstacleMap obstacles_;
    std::vector<Point> rsus_;
    std::vector<std::uint32_t> track_of_;  // node -> trace index (mobile nodes)
    std::vector<NodeRole> roles_;
    std::vector<std::string> ids_;
    std::uint32_t n_cars_ = 0;
    std::uint32_t n_buses_ = 0;
};

}  // namespace vanet
