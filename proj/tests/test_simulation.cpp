#include <map>
#include <sstream>

#include <doctest.h>

#include "support.hpp"
#include "vanet/config.hpp"
#include "vanet/errors.hpp"

using namespace vanet;

namespace {

struct Logged {
    RunResult result;
    std::string log;
};

Logged logged_run(const ScenarioConfig& cfg) {
    const auto sc = build_scenario(cfg);
    std::ostringstream log;
    RunOptions o;
    o.event_log = &log;
    o.keep_records = true;
    auto r = run_simulation(sc, cfg.sim, o);
    return {std::move(r), log.str()};
}

ScenarioConfig small(ProtocolKind kind, std::uint64_t seed) {
    ScenarioConfig c = parse_config("");
    c.grid->n_vehicles = 80;
    c.sim.duration = 15.0;
    c.sim.drain = 3.0;
    c.sim.seed = seed;
    c.sim.protocol.kind = kind;
    return c;
}

std::string summary_text(const RunSummary& s) {
    std::ostringstream out;
    const RunSummary rows[] = {s};
    write_summary_csv(out, rows);
    return out.str();
}

}  // namespace

TEST_CASE("runs are reproducible byte for byte") {
    for (const auto kind : kAllProtocols) {
        const auto a = logged_run(small(kind, 7));
        const auto b = logged_run(small(kind, 7));
        CHECK(a.log == b.log);
        CHECK(summary_text(a.result.summary) == summary_text(b.result.summary));
    }
    const auto c = logged_run(small(ProtocolKind::HybridVehcloud, 8));
    const auto a = logged_run(small(ProtocolKind::HybridVehcloud, 7));
    CHECK(c.log != a.log);
}

TEST_CASE("metrics replay from the event log") {
    for (const auto kind : kAllProtocols) {
        const auto r = logged_run(small(kind, 11));
        std::istringstream in(r.log);
        const auto replayed = replay_metrics(in);
        CHECK(summary_text(replayed) == summary_text(r.result.summary));
    }
    std::istringstream junk("# vanetsim event log v1\nnot an event\n");
    CHECK_THROWS_AS(replay_metrics(junk), ParseError);
}

TEST_CASE("event log structure") {
    const auto r = logged_run(small(ProtocolKind::HybridVehcloud, 12));
    std::istringstream in(r.log);
    std::string line;
    double last = 0.0;
    std::map<std::uint64_t, double> starts;
    std::size_t ends = 0;
    const double dur = tx_duration(MacParams{});
    while (std::getline(in, line)) {
        if (line.starts_with("#")) continue;
        std::istringstream f(line);
        double t = 0.0;
        std::uint64_t seq = 0;
        std::string kind;
        f >> t >> seq >> kind;
        CHECK(t >= last);
        last = t;
        if (kind == "TxStart" && line.find("attempt=") != std::string::npos) {
            const auto a = std::stoull(line.substr(line.find("attempt=") + 8));
            CHECK_FALSE(starts.contains(a));
            starts[a] = t;
        } else if (kind == "TxEnd") {
            const auto a = std::stoull(line.substr(line.find("attempt=") + 8));
            REQUIRE(starts.contains(a));
            CHECK(std::abs(t - (starts[a] + dur)) < 1e-12);
            ++ends;
        }
    }
    CHECK(ends == starts.size());
    CHECK(ends == r.result.attempts);
    CHECK(last <= 15.0 + 3.0);
}

TEST_CASE("records agree with the summary") {
    const auto r = logged_run(small(ProtocolKind::CloudVanetLike, 13));
    CHECK(r.result.records.size() == r.result.pairs);
    CHECK(end_to_end_delay(r.result.records) == r.result.summary.mean_e2e_delay);
    CHECK(delivery_probability(r.result.records) == r.result.summary.delivery_probability);
    CHECK(collision_ratio(r.result.tallies) == r.result.summary.collision_ratio);
    for (const auto& rec : r.result.records)
        if (rec.delivered_at) CHECK(*rec.delivered_at >= rec.created_at);
}

TEST_CASE("single sender never collides") {
    std::vector<Point> cars;
    for (int i = 0; i < 8; ++i) cars.push_back({i * 40.0, 0.0});
    const auto sc = testing::static_scenario(cars, {});
    std::vector<ScriptedMessage> script;
    for (int k = 0; k < 40; ++k) script.push_back({0.5 + k * 0.2, 0});
    for (const bool zero : {true, false}) {
        auto p = testing::quiet_params(ProtocolKind::ClbpLike, script);
        p.mac.zero_backoff = zero;
        const auto r = run_simulation(sc, p);
        CHECK(r.tallies.collided == 0);
        CHECK(r.summary.collision_ratio == 0.0);
    }
}

TEST_CASE("parameter validation") {
    SimParams p;
    p.duration = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    SimParams q;
    q.workload.script = {{2.0, 0}, {1.0, 0}};
    CHECK_THROWS_AS(q.validate(), ConfigError);
    SimParams s;
    s.protocol.ttl = 0;
    CHECK_THROWS(s.validate());
    SimParams u;
    u.shadow_loss = 1.5;
    CHECK_THROWS(u.validate());
}
