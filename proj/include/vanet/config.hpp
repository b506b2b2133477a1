#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vanet/geometry.hpp"
#include "vanet/mobility.hpp"
#include "vanet/scenario.hpp"
#include "vanet/simulation.hpp"

namespace vanet {

inline constexpr std::string_view kVersion = "0.1.0";

/// Everything a run needs. Exactly one of `grid` and `trace_path` is set.
struct ScenarioConfig {
    std::optional<GridSpec> grid = GridSpec{};
    std::optional<std::string> trace_path;
    std::vector<Obstacle> obstacles;   // added to any generated buildings
    std::vector<Point> rsus;           // added to any generated RSUs
    SimParams sim;
    std::vector<std::uint64_t> seeds{1};

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// YAML text to config. Unknown keys and bad values are ConfigError.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical YAML. parse_config(serialize_config(c)) serializes identically.
std::string serialize_config(const ScenarioConfig& c);

/// 16 hex digits of FNV-1a over the canonical text.
std::string config_hash(const ScenarioConfig& c);

/// `key=value` where key is a dotted path (mac.cw_min) or a leaf name that is
/// unique across the schema (cw_min). The value is read as YAML.
void apply_override(ScenarioConfig& c, std::string_view assignment);

/// Every settable dotted key, in serialization order.
std::vector<std::string> config_keys();

/// World for the run: generated grid (seeded by the run seed) or loaded trace.
Scenario build_scenario(const ScenarioConfig& c);

}  // namespace vanet
