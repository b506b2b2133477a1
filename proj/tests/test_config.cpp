#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "vanet/config.hpp"
#include "vanet/errors.hpp"
#include "vanet/sweep.hpp"

using namespace vanet;
namespace fs = std::filesystem;

TEST_CASE("serialize/parse is a fixed point") {
    const auto d = parse_config("");
    const auto text = serialize_config(d);
    CHECK(serialize_config(parse_config(text)) == text);

    ScenarioConfig c = d;
    c.sim.mac.cw_min = 15;
    c.sim.link.clearance_delta = 2.5;
    c.sim.cloud.delay_jitter = 0.001;
    c.sim.protocol.kind = ProtocolKind::CloudVanetLike;
    c.sim.workload.script = {{0.25, 3}, {1.0 / 3.0, 4}};
    c.obstacles = {Obstacle({0.1, 0.2}, {10.3, 20.4})};
    c.rsus = {{5, 5}};
    c.seeds = {4, 5, 6};
    const auto t1 = serialize_config(c);
    const auto back = parse_config(t1);
    CHECK(serialize_config(back) == t1);
    CHECK(back.sim.workload.script == c.sim.workload.script);
    CHECK(back.obstacles == c.obstacles);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(back) != config_hash(d));
    CHECK(config_hash(c).size() == 16);
}

TEST_CASE("unknown keys and bad values are errors") {
    CHECK_THROWS_AS(parse_config("mac:\n  cw_mni: 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("bogus: 1\n"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("mac:\n  cw_min: -3\n"), doctest::Contains("mac.cw_min"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("run:\n  duration: 0\n"), doctest::Contains("duration"), ConfigError);
    CHECK_THROWS_AS(parse_config("protocol:\n  kind: nonsense\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("mac: [1, 2\n"), ConfigError);
}

TEST_CASE("overrides") {
    auto c = parse_config("");
    apply_override(c, "n_vehicles=450");
    CHECK(c.grid->n_vehicles == 450);
    apply_override(c, "mac.cw_max=511");
    CHECK(c.sim.mac.cw_max == 511);
    apply_override(c, "kind=clbp");
    CHECK(c.sim.protocol.kind == ProtocolKind::ClbpLike);
    apply_override(c, "scenario.obstacles=[[0, 0, 10, 10]]");
    CHECK(c.obstacles.size() == 1);
    CHECK_THROWS_AS(apply_override(c, "no_such_key=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "n_vehicles"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "n_vehicles=many"), ConfigError);
    const auto keys = config_keys();
    CHECK(std::find(keys.begin(), keys.end(), "scenario.grid.vehicles_per_bus") != keys.end());
    CHECK(std::find(keys.begin(), keys.end(), "workload.script") != keys.end());
}

TEST_CASE("trace scenarios") {
    const fs::path dir = fs::temp_directory_path() / "vanet_config_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "t.csv");
        out << "time_s,vehicle_id,x_m,y_m,speed_mps\n"
               "0.000,a,0,0,10\n10.000,a,100,0,10\n"
               "0.000,bus1,50,10,0\n10.000,bus1,50,10,0\n";
    }
    auto c = parse_config("scenario:\n  trace: " + (dir / "t.csv").string() + "\n");
    CHECK_FALSE(c.grid);
    const auto sc = build_scenario(c);
    CHECK(sc.n_cars() == 1);
    CHECK(sc.n_buses() == 1);
    CHECK_THROWS_AS(load_config(dir / "absent.yaml"), ConfigError);
    try {
        load_config(dir / "absent.yaml");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("file not found") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("sweep job product") {
    const std::vector<ProtocolKind> p(kAllProtocols.begin(), kAllProtocols.end());
    std::vector<std::uint32_t> n;
    for (std::uint32_t k = 50; k <= 450; k += 50) n.push_back(k);
    std::vector<std::uint64_t> s(20);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = i + 1;
    CHECK(sweep_jobs(p, n, s).size() == 720);
    CHECK_THROWS_AS(sweep_jobs({}, n, s), ConfigError);
    CHECK_THROWS_AS(sweep_jobs(p, {}, s), ConfigError);
    CHECK_THROWS_AS(sweep_jobs(p, n, {}), ConfigError);

    const auto one = sweep_jobs(std::span(p).first(1), std::span(n).first(1), std::span(s).first(1));
    REQUIRE(one.size() == 1);
    auto base = parse_config("");
    base.sim.duration = 2.0;
    base.sim.drain = 1.0;
    const JobFn fn = [&](const RunJob& j) {
        if (j.seed == 99) throw std::runtime_error("boom");
        return run_job(base, j);
    };
    const std::vector<RunJob> jobs{{ProtocolKind::ClbpLike, 50, 1}, {ProtocolKind::ClbpLike, 50, 99},
                                   {ProtocolKind::CmdsLike, 60, 2}};
    const auto serial = run_jobs_serial(jobs, fn);
    const auto parallel = run_jobs_parallel(jobs, fn, 3);
    REQUIRE(serial.size() == 3);
    CHECK(serial[1].error == "boom");
    CHECK_FALSE(serial[1].summary);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(serial[i].summary.has_value() == parallel[i].summary.has_value());
        if (serial[i].summary) {
            CHECK(serial[i].summary->avg_throughput == parallel[i].summary->avg_throughput);
            CHECK(serial[i].summary->n_vehicles == jobs[i].n_vehicles);
        }
    }
}

TEST_CASE("run directories validate and catch tampering") {
    const fs::path dir = fs::temp_directory_path() / "vanet_rundir_test";
    fs::remove_all(dir);
    auto c = parse_config("");
    c.grid->n_vehicles = 40;
    c.sim.duration = 5.0;
    c.sim.drain = 1.0;
    execute_run(c, dir);
    for (const char* f : {"config.yaml", "summary.csv", "events.log", "figure3_delay.csv", "figure4_delivery.csv",
                          "figure5_collision.csv", "figure6_throughput.csv"})
        CHECK(fs::exists(dir / f));
    CHECK(validate_run_dir(dir).ok);
    {
        std::ofstream out(dir / "figure4_delivery.csv", std::ios::app);
        out << "450,1,0,1\n";
    }
    const auto bad = validate_run_dir(dir);
    CHECK_FALSE(bad.ok);
    CHECK(bad.message.find("figure4_delivery.csv") != std::string::npos);
    fs::remove(dir / "events.log");
    CHECK_THROWS_AS(validate_run_dir(dir), ConfigError);
    fs::remove_all(dir);
}
