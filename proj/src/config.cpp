#include "vanet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "vanet/errors.hpp"
#include "vanet/metrics.hpp"
#include "vanet/rng.hpp"

namespace vanet {

namespace {

// ---------------------------------------------------------------------------
// scalar conversion

double to_double(const YAML::Node& n, const std::string& key) {
    if (!n.IsScalar()) throw ConfigError(key + ": expected a number");
    const std::string s = n.Scalar();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, s));
    return v;
}

std::uint64_t to_u64(const YAML::Node& n, const std::string& key) {
    if (!n.IsScalar()) throw ConfigError(key + ": expected a non-negative integer");
    const std::string s = n.Scalar();
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, s));
    return v;
}

std::uint32_t to_u32(const YAML::Node& n, const std::string& key) {
    const auto v = to_u64(n, key);
    if (v > 0xffffffffULL) throw ConfigError(key + ": value too large");
    return static_cast<std::uint32_t>(v);
}

bool to_bool(const YAML::Node& n, const std::string& key) {
    if (n.IsScalar()) {
        const std::string& s = n.Scalar();
        if (s == "true") return true;
        if (s == "false") return false;
    }
    throw ConfigError(key + ": expected true or false");
}

std::string flow_points(const std::vector<Point>& pts) {
    std::string out = "[";
    for (std::size_t i = 0; i < pts.size(); ++i)
        out += fmt::format("{}[{}, {}]", i ? ", " : "", format_double(pts[i].x), format_double(pts[i].y));
    return out + "]";
}

std::string flow_obstacles(const std::vector<Obstacle>& obs) {
    std::string out = "[";
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto a = obs[i].min_corner();
        const auto b = obs[i].max_corner();
        out += fmt::format("{}[{}, {}, {}, {}]", i ? ", " : "", format_double(a.x), format_double(a.y),
                           format_double(b.x), format_double(b.y));
    }
    return out + "]";
}

std::string quoted(const std::string& s) {
    YAML::Emitter e;
    e << YAML::DoubleQuoted << s;
    return e.c_str();
}

// ---------------------------------------------------------------------------
// schema

struct Field {
    std::string key;
    std::function<std::string(const ScenarioConfig&)> get;   // empty string: omit
    std::function<void(ScenarioConfig&, const YAML::Node&, const std::string&)> set;
};

GridSpec& grid_of(ScenarioConfig& c, const std::string& key) {
    if (!c.grid) throw ConfigError(key + ": grid settings need a grid scenario (no scenario.trace)");
    return *c.grid;
}

template <typename T>
Field grid_double(const char* name, T GridSpec::*member) {
    const std::string key = std::string("scenario.grid.") + name;
    return {key,
            [member](const ScenarioConfig& c) {
                return c.grid ? format_double((*c.grid).*member) : std::string();
            },
            [member](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                grid_of(c, k).*member = to_double(n, k);
            }};
}

Field grid_u32(const char* name, std::uint32_t GridSpec::*member) {
    const std::string key = std::string("scenario.grid.") + name;
    return {key,
            [member](const ScenarioConfig& c) {
                return c.grid ? std::to_string((*c.grid).*member) : std::string();
            },
            [member](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                grid_of(c, k).*member = to_u32(n, k);
            }};
}

template <typename S>
Field dbl(std::string key, S SimParams::*section, double S::*member) {
    return {std::move(key),
            [=](const ScenarioConfig& c) { return format_double(c.sim.*section.*member); },
            [=](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                c.sim.*section.*member = to_double(n, k);
            }};
}

template <typename S>
Field u32(std::string key, S SimParams::*section, std::uint32_t S::*member) {
    return {std::move(key),
            [=](const ScenarioConfig& c) { return std::to_string(c.sim.*section.*member); },
            [=](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                c.sim.*section.*member = to_u32(n, k);
            }};
}

Field sim_dbl(std::string key, double SimParams::*member) {
    return {std::move(key), [=](const ScenarioConfig& c) { return format_double(c.sim.*member); },
            [=](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                c.sim.*member = to_double(n, k);
            }};
}

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = [] {
        std::vector<Field> f;
        f.push_back(grid_double("road_length", &GridSpec::road_length));
        f.push_back(grid_double("block_size", &GridSpec::block_size));
        f.push_back(grid_double("street_width", &GridSpec::street_width));
        f.push_back(grid_u32("lanes", &GridSpec::lanes));
        f.push_back(grid_double("lane_width", &GridSpec::lane_width));
        f.push_back(grid_double("speed_min", &GridSpec::speed_min));
        f.push_back(grid_double("speed_max", &GridSpec::speed_max));
        f.push_back(grid_u32("n_vehicles", &GridSpec::n_vehicles));
        f.push_back(grid_u32("n_buses", &GridSpec::n_buses));
        f.push_back(grid_u32("vehicles_per_bus", &GridSpec::vehicles_per_bus));
        f.push_back(grid_u32("n_rsus", &GridSpec::n_rsus));
        f.push_back(grid_double("building_fraction", &GridSpec::building_fraction));
        f.push_back(grid_u32("bus_loop_blocks", &GridSpec::bus_loop_blocks));
        f.push_back({"scenario.trace",
                     [](const ScenarioConfig& c) { return c.trace_path ? quoted(*c.trace_path) : ""; },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         if (!n.IsScalar() || n.Scalar().empty())
                             throw ConfigError(k + ": expected a file path");
                         c.trace_path = n.Scalar();
                         c.grid.reset();
                     }});
        f.push_back({"scenario.obstacles",
                     [](const ScenarioConfig& c) { return flow_obstacles(c.obstacles); },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         if (!n.IsSequence()) throw ConfigError(k + ": expected a list of [x0, y0, x1, y1]");
                         std::vector<Obstacle> out;
                         for (std::size_t i = 0; i < n.size(); ++i) {
                             const auto e = n[i];
                             const std::string ek = fmt::format("{}[{}]", k, i);
                             if (!e.IsSequence() || e.size() != 4)
                                 throw ConfigError(ek + ": expected [x0, y0, x1, y1]");
                             try {
                                 out.emplace_back(Point{to_double(e[0], ek), to_double(e[1], ek)},
                                                  Point{to_double(e[2], ek), to_double(e[3], ek)});
                             } catch (const InvalidInput& ex) {
                                 throw ConfigError(ek + ": " + ex.what());
                             }
                         }
                         c.obstacles = std::move(out);
                     }});
        f.push_back({"scenario.rsus", [](const ScenarioConfig& c) { return flow_points(c.rsus); },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         if (!n.IsSequence()) throw ConfigError(k + ": expected a list of [x, y]");
                         std::vector<Point> out;
                         for (std::size_t i = 0; i < n.size(); ++i) {
                             const auto e = n[i];
                             const std::string ek = fmt::format("{}[{}]", k, i);
                             if (!e.IsSequence() || e.size() != 2) throw ConfigError(ek + ": expected [x, y]");
                             out.push_back({to_double(e[0], ek), to_double(e[1], ek)});
                         }
                         c.rsus = std::move(out);
                     }});

        f.push_back(dbl("link.t_base", &SimParams::link, &LinkModel::t_base));
        f.push_back(dbl("link.clearance_delta", &SimParams::link, &LinkModel::clearance_delta));
        f.push_back(sim_dbl("link.shadow_loss", &SimParams::shadow_loss));

        f.push_back(dbl("mac.data_rate", &SimParams::mac, &MacParams::data_rate));
        f.push_back(u32("mac.cw_min", &SimParams::mac, &MacParams::cw_min));
        f.push_back(u32("mac.cw_max", &SimParams::mac, &MacParams::cw_max));
        f.push_back(dbl("mac.slot_time", &SimParams::mac, &MacParams::slot_time));
        f.push_back(dbl("mac.sifs", &SimParams::mac, &MacParams::sifs));
        f.push_back(u32("mac.msg_size", &SimParams::mac, &MacParams::msg_size));
        f.push_back(u32("mac.unicast_retries", &SimParams::mac, &MacParams::unicast_retries));
        f.push_back({"mac.zero_backoff",
                     [](const ScenarioConfig& c) { return std::string(c.sim.mac.zero_backoff ? "true" : "false"); },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         c.sim.mac.zero_backoff = to_bool(n, k);
                     }});

        f.push_back(dbl("cloud.uplink_delay", &SimParams::cloud, &CloudModel::uplink_delay));
        f.push_back(dbl("cloud.downlink_delay", &SimParams::cloud, &CloudModel::downlink_delay));
        f.push_back(dbl("cloud.delay_jitter", &SimParams::cloud, &CloudModel::delay_jitter));
        f.push_back(dbl("cloud.processing_delay", &SimParams::cloud, &CloudModel::processing_delay));
        f.push_back(dbl("cloud.deploy_delay", &SimParams::cloud, &CloudModel::deploy_delay));
        f.push_back(dbl("cloud.gateway_access_delay", &SimParams::cloud, &CloudModel::gateway_access_delay));

        f.push_back({"protocol.kind",
                     [](const ScenarioConfig& c) { return std::string(config_name(c.sim.protocol.kind)); },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         const auto p = n.IsScalar() ? parse_protocol(n.Scalar()) : std::nullopt;
                         if (!p) throw ConfigError(k + ": expected one of hybrid, cmds, clbp, cloudvanet");
                         c.sim.protocol.kind = *p;
                     }});
        f.push_back(dbl("protocol.mode_threshold", &SimParams::protocol, &ProtocolParams::mode_threshold));
        f.push_back(u32("protocol.ttl", &SimParams::protocol, &ProtocolParams::ttl));
        f.push_back(dbl("protocol.cloud_split", &SimParams::protocol, &ProtocolParams::cloud_split));
        f.push_back(u32("protocol.k_max", &SimParams::protocol, &ProtocolParams::k_max));
        f.push_back(dbl("protocol.retry_interval", &SimParams::protocol, &ProtocolParams::retry_interval));
        f.push_back(u32("protocol.max_retries", &SimParams::protocol, &ProtocolParams::max_retries));

        f.push_back(dbl("workload.rate_per_vehicle", &SimParams::workload, &WorkloadParams::rate_per_vehicle));
        f.push_back(dbl("workload.target_radius", &SimParams::workload, &WorkloadParams::target_radius));
        f.push_back({"workload.script",
                     [](const ScenarioConfig& c) {
                         std::string out = "[";
                         const auto& s = c.sim.workload.script;
                         for (std::size_t i = 0; i < s.size(); ++i)
                             out += fmt::format("{}[{}, {}]", i ? ", " : "", format_double(s[i].time), s[i].source);
                         return out + "]";
                     },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         if (!n.IsSequence()) throw ConfigError(k + ": expected a list of [time, source]");
                         std::vector<ScriptedMessage> out;
                         for (std::size_t i = 0; i < n.size(); ++i) {
                             const auto e = n[i];
                             const std::string ek = fmt::format("{}[{}]", k, i);
                             if (!e.IsSequence() || e.size() != 2) throw ConfigError(ek + ": expected [time, source]");
                             out.push_back({to_double(e[0], ek), to_u32(e[1], ek)});
                         }
                         c.sim.workload.script = std::move(out);
                     }});

        f.push_back(sim_dbl("run.duration", &SimParams::duration));
        f.push_back(sim_dbl("run.drain", &SimParams::drain));
        f.push_back(sim_dbl("run.beacon_interval", &SimParams::beacon_interval));
        f.push_back({"run.seed", [](const ScenarioConfig& c) { return std::to_string(c.sim.seed); },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         c.sim.seed = to_u64(n, k);
                     }});
        f.push_back({"run.seeds",
                     [](const ScenarioConfig& c) {
                         std::string out = "[";
                         for (std::size_t i = 0; i < c.seeds.size(); ++i)
                             out += (i ? ", " : "") + std::to_string(c.seeds[i]);
                         return out + "]";
                     },
                     [](ScenarioConfig& c, const YAML::Node& n, const std::string& k) {
                         std::vector<std::uint64_t> out;
                         if (n.IsScalar()) out.push_back(to_u64(n, k));
                         else if (n.IsSequence())
                             for (const auto& e : n) out.push_back(to_u64(e, k));
                         else throw ConfigError(k + ": expected a list of seeds");
                         c.seeds = std::move(out);
                     }});
        return f;
    }();
    return fields;
}

const Field* find_field(std::string_view key) {
    for (const auto& f : schema())
        if (f.key == key) return &f;
    return nullptr;
}

void walk(ScenarioConfig& c, const YAML::Node& node, const std::string& prefix) {
    if (!node.IsMap()) throw ConfigError((prefix.empty() ? std::string("document") : prefix) + ": expected a mapping");
    for (const auto& kv : node) {
        const std::string name = kv.first.as<std::string>();
        const std::string key = prefix.empty() ? name : prefix + "." + name;
        if (const auto* f = find_field(key)) {
            f->set(c, kv.second, key);
            continue;
        }
        const bool is_section = std::any_of(schema().begin(), schema().end(), [&](const Field& fl) {
            return fl.key.rfind(key + ".", 0) == 0;
        });
        if (!is_section) throw ConfigError(key + ": unknown key");
        walk(c, kv.second, key);
    }
}

}  // namespace

void ScenarioConfig::validate() const {
    if (grid.has_value() == trace_path.has_value())
        throw ConfigError("scenario: exactly one of scenario.grid and scenario.trace must be given");
    if (grid) grid->validate();
    try {
        sim.link.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("link: ") + e.what());
    }
    sim.validate();
    if (seeds.empty()) throw ConfigError("run.seeds: at least one seed is required");
}

ScenarioConfig parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("config: YAML error at line {}: {}", e.mark.line + 1, e.msg));
    }
    ScenarioConfig c;
    if (root.IsNull()) {
        c.validate();
        return c;
    }
    // Trace mode must drop the default grid before grid keys are checked.
    if (root.IsMap() && root["scenario"] && root["scenario"].IsMap() && root["scenario"]["trace"])
        c.grid.reset();
    try {
        walk(c, root, "");
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("config: line {}: {}", e.mark.line + 1, e.msg));
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("file not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& c) {
    std::string out;
    std::vector<std::string> open;
    for (const auto& f : schema()) {
        const std::string value = f.get(c);
        if (value.empty()) continue;
        std::vector<std::string> parts;
        std::size_t i = 0;
        while (true) {
            const auto j = f.key.find('.', i);
            parts.push_back(f.key.substr(i, j == std::string::npos ? std::string::npos : j - i));
            if (j == std::string::npos) break;
            i = j + 1;
        }
        std::size_t common = 0;
        while (common < open.size() && common + 1 < parts.size() && open[common] == parts[common]) ++common;
        open.resize(common);
        for (std::size_t d = common; d + 1 < parts.size(); ++d) {
            out += std::string(2 * d, ' ') + parts[d] + ":\n";
            open.push_back(parts[d]);
        }
        out += std::string(2 * (parts.size() - 1), ' ') + parts.back() + ": " + value + "\n";
    }
    return out;
}

std::string config_hash(const ScenarioConfig& c) {
    return fmt::format("{:016x}", fnv1a64(serialize_config(c)));
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& f : schema()) out.push_back(f.key);
    return out;
}

void apply_override(ScenarioConfig& c, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError(fmt::format("--set '{}': expected key=value", assignment));
    const std::string key(assignment.substr(0, eq));
    const std::string value(assignment.substr(eq + 1));

    const Field* field = find_field(key);
    if (!field) {
        for (const auto& f : schema()) {
            const auto dot = f.key.rfind('.');
            if (f.key.substr(dot + 1) != key) continue;
            if (field) throw ConfigError(fmt::format("--set {}: ambiguous key, use the dotted form", key));
            field = &f;
        }
    }
    if (!field) throw ConfigError(fmt::format("--set {}: unknown key", key));
    YAML::Node node;
    try {
        node = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("--set {}: {}", key, e.msg));
    }
    if (field->key == "scenario.trace") c.grid.reset();
    field->set(c, node, field->key);
    c.validate();
}

Scenario build_scenario(const ScenarioConfig& c) {
    c.validate();
    std::vector<Obstacle> obstacles;
    std::vector<Point> rsus;
    std::vector<TraceSample> samples;
    if (c.grid) {
        GridSpec spec = *c.grid;
        spec.horizon = c.sim.duration + c.sim.drain;
        auto g = generate_grid_scenario(spec, c.sim.seed);
        samples = std::move(g.samples);
        obstacles = std::move(g.obstacles);
        rsus = std::move(g.rsus);
    } else {
        samples = load_trace(*c.trace_path);
    }
    obstacles.insert(obstacles.end(), c.obstacles.begin(), c.obstacles.end());
    rsus.insert(rsus.end(), c.rsus.begin(), c.rsus.end());
    return Scenario(Trace(std::move(samples)), std::move(obstacles), std::move(rsus));
}

}  // namespace vanet
