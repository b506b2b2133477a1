// vanetsim: command-line front end for the simulator.

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vanet/config.hpp"
#include "vanet/errors.hpp"
#include "vanet/mobility.hpp"
#include "vanet/sweep.hpp"

namespace fs = std::filesystem;
using namespace vanet;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kUsage = 2;

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string out;
};

ScenarioConfig load(const Common& c) {
    ScenarioConfig cfg = c.config.empty() ? parse_config("") : load_config(c.config);
    for (const auto& s : c.sets) apply_override(cfg, s);
    if (c.seed) {
        cfg.sim.seed = *c.seed;
        cfg.seeds = {*c.seed};
    }
    cfg.validate();
    return cfg;
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

template <typename T>
std::vector<T> split_list(const std::string& s, const char* what) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        if constexpr (std::is_same_v<T, ProtocolKind>) {
            const auto p = parse_protocol(tok);
            if (!p) throw ConfigError(fmt::format("--{}: unknown protocol '{}'", what, tok));
            out.push_back(*p);
        } else {
            T v{};
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || ptr != tok.data() + tok.size())
                throw ConfigError(fmt::format("--{}: bad entry '{}'", what, tok));
            out.push_back(v);
        }
    }
    return out;
}

void print_summary(const RunSummary& s) {
    std::cout << fmt::format("protocol              {}\n", to_string(s.protocol));
    std::cout << fmt::format("n_vehicles            {}\n", s.n_vehicles);
    std::cout << fmt::format("seed                  {}\n", s.seed);
    std::cout << fmt::format("mean_e2e_delay_s      {}\n", format_optional(s.mean_e2e_delay));
    std::cout << fmt::format("delivery_probability  {}\n", format_optional(s.delivery_probability));
    std::cout << fmt::format("collision_ratio       {}\n", format_double(s.collision_ratio));
    std::cout << fmt::format("avg_throughput_bps    {}\n", format_double(s.avg_throughput));
}

int cmd_run(const Common& c, bool trace, bool debug_events) {
    const auto cfg = load(c);
    const fs::path dir = c.out.empty()
                             ? fs::path("runs") / fmt::format("run-{}-{}-s{}", timestamp(),
                                                              config_name(cfg.sim.protocol.kind), cfg.sim.seed)
                             : fs::path(c.out);
    RunDirOptions opt;
    opt.hop_trace = trace;
    opt.echo_events = debug_events ? &std::cerr : nullptr;
    const auto res = execute_run(cfg, dir, opt);
    print_summary(res.summary);
    std::cout << fmt::format("messages              {} ({} pairs, {} delivered)\n", res.messages, res.pairs,
                             res.delivered);
    std::cout << fmt::format("initial modes         cloud={} v2v={} v2i={} escalations={}\n",
                             res.initial_modes[0], res.initial_modes[1], res.initial_modes[2], res.escalations);
    std::cout << fmt::format("transmissions         {} ({} deferrals)\n", res.attempts, res.deferrals);
    std::cout << "output                " << dir.string() << '\n';
    return kOk;
}

int cmd_sweep(const Common& c, const std::string& protocols, const std::string& counts,
              const std::string& seeds, int jobs, bool debug_events) {
    const auto base = load(c);
    const auto protos = split_list<ProtocolKind>(protocols, "protocols");
    auto ns = split_list<std::uint32_t>(counts, "counts");
    if (!base.grid && ns.empty()) ns.push_back(0);
    const auto ss = seeds.empty() ? base.seeds : split_list<std::uint64_t>(seeds, "seeds");
    const auto job_list = sweep_jobs(protos, ns, ss);
    const fs::path dir = c.out.empty() ? fs::path("runs") / ("sweep-" + timestamp()) : fs::path(c.out);

    JobFn fn = [&](const RunJob& job) {
        if (!debug_events) return run_job(base, job);
        const auto sub = dir / "runs" /
                         fmt::format("{}-n{}-s{}", config_name(job.protocol), job.n_vehicles, job.seed);
        return execute_run(job_config(base, job), sub).summary;
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto outcomes = jobs > 1 ? run_jobs_parallel(job_list, fn, jobs) : run_jobs_serial(job_list, fn);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_sweep_outputs(dir, base, outcomes);

    std::size_t failed = 0;
    for (const auto& o : outcomes)
        if (!o.summary) {
            ++failed;
            std::cerr << fmt::format("run failed: {} n={} seed={}: {}\n", to_string(o.job.protocol),
                                     o.job.n_vehicles, o.job.seed, o.error);
        }
    std::cout << fmt::format("{} runs ({} failed) in {:.1f} s -> {}\n", outcomes.size(), failed, secs,
                             dir.string());
    return failed ? kRunFailure : kOk;
}

int cmd_gen(const Common& c) {
    auto cfg = load(c);
    if (!cfg.grid) throw ConfigError("gen-scenario: needs a grid scenario");
    GridSpec spec = *cfg.grid;
    spec.horizon = cfg.sim.duration + cfg.sim.drain;
    const auto g = generate_grid_scenario(spec, cfg.sim.seed);
    const fs::path dir = c.out.empty() ? fs::path("scenario-" + timestamp()) : fs::path(c.out);
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "trace.csv", std::ios::binary);
        write_trace(out, g.samples);
    }
    ScenarioConfig t = cfg;
    t.grid.reset();
    t.trace_path = (dir / "trace.csv").string();
    t.obstacles = g.obstacles;
    t.obstacles.insert(t.obstacles.end(), cfg.obstacles.begin(), cfg.obstacles.end());
    t.rsus = g.rsus;
    t.rsus.insert(t.rsus.end(), cfg.rsus.begin(), cfg.rsus.end());
    std::ofstream(dir / "config.yaml", std::ios::binary) << serialize_config(t);
    std::cout << fmt::format("{} samples, {} buildings, {} RSUs -> {}\n", g.samples.size(),
                             g.obstacles.size(), g.rsus.size(), dir.string());
    return kOk;
}

int cmd_validate(const std::string& dir) {
    const auto report = validate_run_dir(dir);
    std::cout << (report.ok ? "PASS " : "FAIL ") << report.message << '\n';
    return report.ok ? kOk : kRunFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic VANET simulator with obstacle shadowing"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    Common common;
    bool trace = false;
    bool debug_events = false;
    int jobs = 1;
    std::string protocols = "hybrid,cmds,clbp,cloudvanet";
    std::string counts = "50,100,150,200,250,300,350,400,450";
    std::string seeds;
    std::string validate_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Scenario config (YAML)");
        sub->add_option("--set", common.sets, "Override key=value (repeatable)")->take_all();
        sub->add_option("--seed", common.seed, "Run seed");
        sub->add_option("--out", common.out, "Output directory");
    };

    auto* run = app.add_subcommand("run", "Single simulation run");
    add_common(run);
    run->add_flag("--trace", trace, "Write per-message hop traces");
    run->add_flag("--debug-events", debug_events, "Echo the event log to stderr");

    auto* sweep = app.add_subcommand("sweep", "Protocol comparison over vehicle counts and seeds");
    add_common(sweep);
    sweep->add_option("--protocols", protocols, "Comma-separated protocols");
    sweep->add_option("--counts", counts, "Comma-separated vehicle counts");
    sweep->add_option("--seeds", seeds, "Comma-separated seeds (default: run.seeds)");
    sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    sweep->add_flag("--debug-events", debug_events, "Keep a validatable run directory per run");

    auto* gen = app.add_subcommand("gen-scenario", "Write a grid scenario as trace + config");
    add_common(gen);

    auto* val = app.add_subcommand("validate", "Re-run a run directory and diff its outputs");
    val->add_option("dir", validate_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(common, trace, debug_events);
        if (*sweep) return cmd_sweep(common, protocols, counts, seeds, jobs, debug_events);
        if (*gen) return cmd_gen(common);
        if (*val) return cmd_validate(validate_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kRunFailure;
    }
    return kUsage;
}
