#include <random>
#include <set>
#include <sstream>

#include <doctest.h>

#include "support.hpp"
#include "vanet/config.hpp"
#include "vanet/errors.hpp"

using namespace vanet;
using testing::quiet_params;
using testing::static_scenario;

namespace {

const LinkModel kLm{};
const double kTx = 0.001024;

NeighborEntry entry(std::uint32_t node, RegionClass c, NodeRole role = NodeRole::Car) {
    return {node, {}, c, role};
}

const Message& only_message_from(const RunResult& r, std::uint32_t source) {
    for (const auto& m : r.message_detail)
        if (m.source == source) return m;
    FAIL("no message from source");
    throw std::logic_error("unreachable");
}

std::size_t target_index(const Message& m, std::uint32_t node) {
    const auto it = std::find(m.targets.begin(), m.targets.end(), node);
    REQUIRE(it != m.targets.end());
    return static_cast<std::size_t>(it - m.targets.begin());
}

std::size_t count_action(const Message& m, HopAction a) {
    return static_cast<std::size_t>(
        std::count_if(m.hop_trace.begin(), m.hop_trace.end(), [&](const HopEntry& h) { return h.action == a; }));
}

RunResult run(const Scenario& sc, const SimParams& p) {
    RunOptions o;
    o.keep_messages = true;
    return run_simulation(sc, p, o);
}

}  // namespace

TEST_CASE("select_mode examples") {
    const std::vector<NeighborEntry> clear{entry(1, RegionClass::Clear), entry(2, RegionClass::Clear),
                                           entry(9, RegionClass::Clear, NodeRole::Rsu)};
    CHECK(select_mode(clear, 0.5) == DisseminationMode::MultiHopV2V);
    const std::vector<NeighborEntry> dark{entry(1, RegionClass::Shadowed), entry(9, RegionClass::Shadowed, NodeRole::Rsu)};
    CHECK(select_mode(dark, 0.5) == DisseminationMode::CloudGateway);
    CHECK(select_mode(std::span<const NeighborEntry>{}, 0.5) == DisseminationMode::CloudGateway);
    // only the RSU link is clear: infrastructure relays
    const std::vector<NeighborEntry> rsu_only{entry(1, RegionClass::Shadowed), entry(2, RegionClass::Clear, NodeRole::Rsu),
                                              entry(3, RegionClass::Clear, NodeRole::Rsu)};
    CHECK(select_mode(rsu_only, 0.5) == DisseminationMode::MultiHopV2I);
    // threshold is inclusive
    const std::vector<NeighborEntry> half{entry(1, RegionClass::Shadowed), entry(2, RegionClass::Clear)};
    CHECK(select_mode(half, 0.5) == DisseminationMode::CloudGateway);
    CHECK(select_mode(half, 0.51) == DisseminationMode::MultiHopV2V);

    const ObstacleMap wall({Obstacle({40, -10}, {60, 10})});
    const std::vector<Point> cars{{100, 0}, {0, 100}};
    CHECK(select_mode({0, 0}, cars, {}, wall, kLm, 0.5) == DisseminationMode::CloudGateway);
    CHECK(select_mode({0, 0}, cars, {}, wall, kLm, 0.75) == DisseminationMode::MultiHopV2V);
}

TEST_CASE("select_gateways examples") {
    const ObstacleMap none;
    const std::vector<GatewayInfo> one{{7, {0, 0}}};
    const std::vector<TargetInfo> near{{1, {50, 0}}, {2, {0, 80}}, {3, {-100, -100}}};
    const auto s = select_gateways(one, near, none, kLm, 3);
    REQUIRE(s);
    CHECK(*s == std::vector<std::uint32_t>{7});
    CHECK(select_gateways(one, {}, none, kLm, 3)->empty());
    CHECK_FALSE(select_gateways({}, near, none, kLm, 3));

    // equal gain: lower access delay, then lower id
    const std::vector<GatewayInfo> tie{{5, {0, 0}, 0.2}, {4, {0, 0}, 0.1}, {3, {0, 0}, 0.1}};
    CHECK(*select_gateways(tie, near, none, kLm, 1) == std::vector<std::uint32_t>{3});
    // a shadowed target is not covered
    const ObstacleMap wall({Obstacle({20, -10}, {30, 10})});
    const std::vector<TargetInfo> behind{{1, {50, 0}}};
    CHECK(select_gateways(one, behind, wall, kLm, 3)->empty());
}

TEST_CASE("greedy coverage against the exhaustive optimum") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 800.0);
    const double bound = 1.0 - 1.0 / std::exp(1.0);
    int optimal = 0;
    constexpr int kInstances = 200;
    for (int inst = 0; inst < kInstances; ++inst) {
        std::vector<Obstacle> obs;
        for (int k = 0; k < 4; ++k) {
            const double x = u(rng), y = u(rng);
            obs.emplace_back(Point{x, y}, Point{x + 60.0, y + 60.0});
        }
        const ObstacleMap map(obs);
        const std::size_t ng = 1 + rng() % 12, nt = 1 + rng() % 25;
        const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng() % 4);
        std::vector<GatewayInfo> gws;
        std::vector<TargetInfo> tgs;
        for (std::size_t g = 0; g < ng; ++g) gws.push_back({static_cast<std::uint32_t>(g), {u(rng), u(rng)}});
        for (std::size_t t = 0; t < nt; ++t) tgs.push_back({static_cast<std::uint32_t>(t), {u(rng), u(rng)}});
        std::vector<std::vector<bool>> covers(ng, std::vector<bool>(nt));
        for (std::size_t g = 0; g < ng; ++g)
            for (std::size_t t = 0; t < nt; ++t)
                covers[g][t] = gws[g].pos == tgs[t].pos ||
                               classify_link(gws[g].pos, tgs[t].pos, obs, kLm) == RegionClass::Clear;
        const auto sel = select_gateways(gws, tgs, map, kLm, k);
        REQUIRE(sel);
        CHECK(sel->size() <= k);
        std::size_t got = 0;
        for (std::size_t t = 0; t < nt; ++t)
            for (const auto g : *sel)
                if (covers[g][t]) {
                    ++got;
                    break;
                }
        const auto best = testing::best_coverage(covers, k);
        CHECK(static_cast<double>(got) >= bound * static_cast<double>(best));
        optimal += got == best;
    }
    MESSAGE("greedy optimal on " << optimal << " of " << kInstances);
}

TEST_CASE("relay choice") {
    const std::vector<RelayCandidate> c{{1, {100, 0}}, {2, {0, 100}}, {3, {200, 0}}};
    const std::vector<Point> far_east{{900, 0}, {100, 50}};
    CHECK(targeted_relay({0, 0}, c, far_east) == 3u);
    const std::vector<Point> north{{0, 500}};
    CHECK(targeted_relay({0, 0}, c, north) == 2u);
    // nobody is closer than the holder to any target
    const std::vector<Point> west{{-500, 0}};
    CHECK_FALSE(targeted_relay({0, 0}, c, west));
    CHECK_FALSE(targeted_relay({0, 0}, {}, north));

    // progress: farthest candidate that moves away from the origin
    CHECK(progress_relay({0, 0}, {0, 0}, c, true) == 3u);
    CHECK(progress_relay({100, 0}, {0, 0}, c, false) == 3u);
    const std::vector<RelayCandidate> back{{1, {50, 0}}};
    CHECK_FALSE(progress_relay({100, 0}, {0, 0}, back, false));
}

TEST_CASE("one clear hop costs exactly one frame time") {
    const std::vector<Point> cars{{0, 0}, {100, 0}};
    for (const auto kind : {ProtocolKind::HybridVehcloud, ProtocolKind::ClbpLike}) {
        const auto sc = static_scenario(cars, {});
        const auto r = run(sc, quiet_params(kind, {{1.0, 0}}));
        const auto& m = only_message_from(r, 0);
        REQUIRE(m.targets == std::vector<std::uint32_t>{1});
        CHECK(m.initial_mode == DisseminationMode::MultiHopV2V);
        CHECK(m.hops[0] == 1);
        CHECK(m.delivered_at[0] - m.created_at == doctest::Approx(kTx).epsilon(1e-12));
    }
}

TEST_CASE("line of five cars 250 m apart needs four hops") {
    const std::vector<Point> cars{{0, 0}, {250, 0}, {500, 0}, {750, 0}, {1000, 0}};
    for (const auto kind : {ProtocolKind::HybridVehcloud, ProtocolKind::ClbpLike}) {
        const auto sc = static_scenario(cars, {});
        auto p = quiet_params(kind, {{1.0, 0}});
        p.workload.target_radius = 1100.0;
        const auto r = run(sc, p);
        const auto& m = only_message_from(r, 0);
        REQUIRE(m.targets.size() == 4);
        for (std::uint32_t k = 1; k <= 4; ++k) {
            const auto i = target_index(m, k);
            CHECK(m.hops[i] == k);
            CHECK(m.delivered_at[i] - m.created_at == doctest::Approx(k * kTx).epsilon(1e-12));
        }
        CHECK(r.tallies.collided == 0);
    }
}

TEST_CASE("cloud path delay is the sum of its legs") {
    // the target is out of the source's reach; the bus sees both
    const std::vector<Point> cars{{0, 0}, {450, 0}};
    const std::vector<Point> buses{{250, 0}};
    const auto sc = static_scenario(cars, buses);
    auto p = quiet_params(ProtocolKind::CmdsLike, {{1.0, 0}, {5.0, 0}});
    p.cloud.uplink_delay = 0.013;
    p.cloud.downlink_delay = 0.027;
    p.cloud.processing_delay = 0.004;
    p.cloud.deploy_delay = 0.3;
    p.cloud.gateway_access_delay = 0.002;
    const auto r = run(sc, p);
    REQUIRE(r.message_detail.size() == 2);
    const double legs = 0.013 + 0.027 + 0.004 + 0.002 + 2 * kTx;
    const auto& first = r.message_detail[0];
    const auto& second = r.message_detail[1];
    REQUIRE(first.targets == std::vector<std::uint32_t>{1});
    CHECK(std::abs(first.delivered_at[0] - first.created_at - (legs + 0.3)) < 1e-9);
    CHECK(std::abs(second.delivered_at[0] - second.created_at - legs) < 1e-9);
    CHECK(first.hops[0] == 2);
    CHECK(first.via[0] == DisseminationMode::CloudGateway);
}

TEST_CASE("zero cloud delays leave only the two frame times") {
    const std::vector<Point> cars{{0, 0}, {450, 0}};
    const std::vector<Point> buses{{250, 0}};
    const auto sc = static_scenario(cars, buses);
    auto p = quiet_params(ProtocolKind::CmdsLike, {{1.0, 0}});
    p.cloud = CloudModel{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const auto r = run(sc, p);
    const auto& m = r.message_detail.at(0);
    CHECK(std::abs(m.delivered_at[0] - m.created_at - 2 * kTx) < 1e-12);
}

TEST_CASE("no reachable bus: undelivered after max_retries") {
    const std::vector<Point> cars{{0, 0}, {450, 0}};
    const std::vector<Point> buses{{2000, 2000}};
    const auto sc = static_scenario(cars, buses);
    auto p = quiet_params(ProtocolKind::CmdsLike, {{1.0, 0}});
    p.protocol.max_retries = 4;
    const auto r = run(sc, p);
    const auto& m = r.message_detail.at(0);
    CHECK(m.n_delivered == 0);
    CHECK(count_action(m, HopAction::Retry) == 4);
    CHECK(m.hop_trace.back().action == HopAction::GiveUp);
    CHECK(r.summary.delivery_probability == 0.0);
    CHECK_FALSE(r.summary.mean_e2e_delay);
}

TEST_CASE("a building across the chain escalates to the cloud") {
    const std::vector<Point> cars{{0, 0}, {250, 0}, {500, 0}, {150, -150}};
    const std::vector<Point> buses{{250, 100}};
    std::vector<Obstacle> obs{Obstacle({350, -20}, {400, 20}), Obstacle({200, -100}, {300, -50})};
    const auto sc = static_scenario(cars, buses, obs);
    const auto r = run(sc, quiet_params(ProtocolKind::HybridVehcloud, {{1.0, 0}}));
    const auto& m = only_message_from(r, 0);
    CHECK(m.initial_mode == DisseminationMode::MultiHopV2V);
    CHECK(m.escalated);
    CHECK(count_action(m, HopAction::Escalate) == 1);
    const auto i = target_index(m, 2);
    REQUIRE_FALSE(std::isnan(m.delivered_at[i]));
    CHECK(m.via[i] == DisseminationMode::CloudGateway);
    CHECK(m.complete());

    // the pure multi-hop comparator stops at the wall
    const auto c = run(sc, quiet_params(ProtocolKind::ClbpLike, {{1.0, 0}}));
    const auto& mc = only_message_from(c, 0);
    CHECK(std::isnan(mc.delivered_at[target_index(mc, 2)]));
}

TEST_CASE("split 1.0 reproduces the cloud-always comparator") {
    ScenarioConfig cfg = parse_config("");
    cfg.grid->n_vehicles = 60;
    cfg.sim.duration = 20.0;
    cfg.sim.drain = 5.0;
    for (const std::uint64_t seed : {3u, 4u}) {
        cfg.sim.seed = seed;
        const auto sc = build_scenario(cfg);
        SimParams a = cfg.sim, b = cfg.sim;
        a.protocol.kind = ProtocolKind::CmdsLike;
        b.protocol.kind = ProtocolKind::CloudVanetLike;
        b.protocol.cloud_split = 1.0;
        const auto ra = run(sc, a);
        const auto rb = run(sc, b);
        REQUIRE(ra.message_detail.size() == rb.message_detail.size());
        for (std::size_t k = 0; k < ra.message_detail.size(); ++k) {
            const auto& x = ra.message_detail[k];
            const auto& y = rb.message_detail[k];
            CHECK(x.initial_mode == y.initial_mode);
            CHECK(x.targets == y.targets);
            CHECK(x.hops == y.hops);
            CHECK(x.hop_trace.size() == y.hop_trace.size());
            for (std::size_t i = 0; i < x.delivered_at.size(); ++i)
                CHECK(std::isnan(x.delivered_at[i]) == std::isnan(y.delivered_at[i]));
        }
        CHECK(ra.tallies == rb.tallies);
        CHECK(ra.summary.delivery_probability == rb.summary.delivery_probability);
    }
}

TEST_CASE("protocol invariants on a grid run") {
    ScenarioConfig cfg = parse_config("");
    cfg.grid->n_vehicles = 120;
    cfg.sim.duration = 30.0;
    cfg.sim.drain = 5.0;
    cfg.sim.seed = 5;
    const auto sc = build_scenario(cfg);
    for (const auto kind : kAllProtocols) {
        SimParams p = cfg.sim;
        p.protocol.kind = kind;
        std::ostringstream log;
        RunOptions o;
        o.keep_messages = true;
        o.event_log = &log;
        const auto r = run_simulation(sc, p, o);
        std::uint64_t per_mode = r.initial_modes[0] + r.initial_modes[1] + r.initial_modes[2];
        CHECK(per_mode == r.messages);
        for (const auto& m : r.message_detail) {
            // exactly one originate entry carrying the initial mode
            CHECK(count_action(m, HopAction::Originate) == 1);
            CHECK(m.hop_trace.front().mode == m.initial_mode);
            // no node broadcasts a message twice as a relay
            auto t = m.transmitted;
            std::sort(t.begin(), t.end());
            CHECK(std::adjacent_find(t.begin(), t.end()) == t.end());
            if (kind == ProtocolKind::CmdsLike) CHECK(m.initial_mode == DisseminationMode::CloudGateway);
            if (kind == ProtocolKind::ClbpLike) CHECK(m.initial_mode == DisseminationMode::MultiHopV2V);
            if (kind != ProtocolKind::HybridVehcloud) CHECK_FALSE(m.escalated);
        }
        // every delivery is backed by a Delivered reception in the log
        std::set<std::pair<std::uint32_t, std::uint32_t>> logged;
        std::istringstream in(log.str());
        std::string line;
        while (std::getline(in, line)) {
            if (line.find(" RxResolve ") == std::string::npos) continue;
            const auto mp = line.find("msg=");
            const auto np = line.find("new=");
            const auto msg = static_cast<std::uint32_t>(std::stoul(line.substr(mp + 4)));
            std::stringstream ids(line.substr(np + 4));
            std::string id;
            while (std::getline(ids, id, ','))
                if (!id.empty()) logged.insert({msg, static_cast<std::uint32_t>(std::stoul(id))});
        }
        std::size_t delivered = 0;
        for (const auto& m : r.message_detail)
            for (std::size_t i = 0; i < m.targets.size(); ++i)
                if (!std::isnan(m.delivered_at[i])) {
                    ++delivered;
                    CHECK(logged.contains(std::pair{m.id, m.targets[i]}));
                }
        CHECK(delivered == logged.size());
        CHECK(delivered == r.delivered);
    }
}
