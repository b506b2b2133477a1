#include "vanet/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "vanet/errors.hpp"

namespace fs = std::filesystem;

namespace vanet {

std::vector<RunJob> sweep_jobs(std::span<const ProtocolKind> protocols,
                               std::span<const std::uint32_t> counts,
                               std::span<const std::uint64_t> seeds) {
    if (protocols.empty()) throw ConfigError("sweep: protocol list is empty");
    if (counts.empty()) throw ConfigError("sweep: vehicle count list is empty");
    if (seeds.empty()) throw ConfigError("sweep: seed list is empty");
    std::vector<RunJob> jobs;
    for (const auto p : protocols)
        for (const auto n : counts)
            for (const auto s : seeds) jobs.push_back({p, n, s});
    return jobs;
}

ScenarioConfig job_config(const ScenarioConfig& base, const RunJob& job) {
    ScenarioConfig c = base;
    c.sim.protocol.kind = job.protocol;
    c.sim.seed = job.seed;
    c.seeds = {job.seed};
    if (c.grid) c.grid->n_vehicles = job.n_vehicles;
    return c;
}

namespace {
JobOutcome guarded(const RunJob& job, const JobFn& fn) {
    JobOutcome out{job, std::nullopt, {}};
    try {
        out.summary = fn(job);
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}
}  // namespace

std::vector<JobOutcome> run_jobs_serial(std::span<const RunJob> jobs, const JobFn& fn) {
    std::vector<JobOutcome> out;
    out.reserve(jobs.size());
    for (const auto& j : jobs) out.push_back(guarded(j, fn));
    return out;
}

std::vector<JobOutcome> run_jobs_parallel(std::span<const RunJob> jobs, const JobFn& fn, int threads) {
    std::vector<JobOutcome> out(jobs.size());
    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads > 0 ? threads : 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = guarded(jobs[i], fn);
    return out;
}

RunSummary run_job(const ScenarioConfig& base, const RunJob& job) {
    const auto cfg = job_config(base, job);
    const auto scenario = build_scenario(cfg);
    return run_simulation(scenario, cfg.sim).summary;
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("file not found: " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvProvenance provenance(const ScenarioConfig& cfg, std::vector<std::uint64_t> seeds) {
    return {config_hash(cfg), std::move(seeds), std::string(kVersion), cfg.sim.duration};
}

std::map<std::string, std::string> render_tables(const ScenarioConfig& cfg,
                                                 std::span<const RunSummary> rows,
                                                 std::vector<std::uint64_t> seeds) {
    std::map<std::string, std::string> files;
    std::ostringstream summary;
    write_summary_csv(summary, rows);
    files["summary.csv"] = summary.str();
    const auto table = aggregate_sweep(rows);
    const auto prov = provenance(cfg, std::move(seeds));
    for (const auto m : kAllMetrics) {
        std::ostringstream fig;
        write_figure_csv(fig, table, m, prov);
        files[figure_filename(m)] = fig.str();
    }
    return files;
}

struct Rendered {
    RunResult result;
    std::string events;
    std::map<std::string, std::string> files;
};

Rendered render_run(const ScenarioConfig& cfg, const RunDirOptions& opt, bool keep_messages,
                    std::string* hop_trace) {
    const auto scenario = build_scenario(cfg);
    std::ostringstream log;
    RunOptions ro;
    ro.event_log = &log;
    ro.keep_messages = keep_messages;
    Rendered r;
    r.result = run_simulation(scenario, cfg.sim, ro);
    r.events = log.str();
    if (opt.echo_events) *opt.echo_events << r.events;
    const RunSummary rows[] = {r.result.summary};
    r.files = render_tables(cfg, rows, {cfg.sim.seed});
    r.files["config.yaml"] = serialize_config(cfg);
    if (hop_trace) {
        std::ostringstream ht;
        write_hop_trace(ht, scenario, r.result.message_detail);
        *hop_trace = ht.str();
    }
    return r;
}

std::string first_difference(const std::string& a, const std::string& b) {
    std::istringstream sa(a), sb(b);
    std::string la, lb;
    std::size_t line = 0;
    while (true) {
        ++line;
        const bool ga = static_cast<bool>(std::getline(sa, la));
        const bool gb = static_cast<bool>(std::getline(sb, lb));
        if (!ga && !gb) return "identical lines, different bytes";
        if (ga != gb || la != lb)
            return fmt::format("line {}: recorded '{}' vs replayed '{}'", line, ga ? la : "<eof>",
                               gb ? lb : "<eof>");
    }
}

}  // namespace

RunResult execute_run(const ScenarioConfig& cfg, const fs::path& dir, const RunDirOptions& opt) {
    std::string hop_trace;
    auto r = render_run(cfg, opt, opt.hop_trace, opt.hop_trace ? &hop_trace : nullptr);
    fs::create_directories(dir);
    for (const auto& [name, text] : r.files) write_text(dir / name, text);
    write_text(dir / "events.log", r.events);
    if (opt.hop_trace) write_text(dir / "hop_trace.txt", hop_trace);
    return std::move(r.result);
}

void write_sweep_outputs(const fs::path& dir, const ScenarioConfig& base,
                         std::span<const JobOutcome> outcomes) {
    fs::create_directories(dir);
    std::vector<RunSummary> rows;
    std::vector<std::uint64_t> seeds;
    std::string failures;
    for (const auto& o : outcomes) {
        if (std::find(seeds.begin(), seeds.end(), o.job.seed) == seeds.end()) seeds.push_back(o.job.seed);
        if (o.summary) rows.push_back(*o.summary);
        else
            failures += fmt::format("{} n={} seed={}: {}\n", to_string(o.job.protocol), o.job.n_vehicles,
                                    o.job.seed, o.error);
    }
    ScenarioConfig cfg = base;
    cfg.seeds = seeds;
    for (const auto& [name, text] : render_tables(cfg, rows, seeds)) write_text(dir / name, text);
    write_text(dir / "config.yaml", serialize_config(cfg));
    if (!failures.empty()) write_text(dir / "failures.txt", failures);
}

ValidationReport validate_run_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("not a run directory: " + dir.string());
    if (!fs::exists(dir / "config.yaml")) throw ConfigError("missing config.yaml in " + dir.string());
    if (!fs::exists(dir / "events.log")) throw ConfigError("missing events.log in " + dir.string());
    const auto cfg = load_config(dir / "config.yaml");

    const auto r = render_run(cfg, {}, false, nullptr);
    for (const auto& [name, text] : r.files) {
        const auto recorded = read_text(dir / name);
        if (recorded != text) return {false, fmt::format("{} differs: {}", name, first_difference(recorded, text))};
    }
    const auto recorded_log = read_text(dir / "events.log");
    if (recorded_log != r.events)
        return {false, "events.log differs: " + first_difference(recorded_log, r.events)};

    std::istringstream log(recorded_log);
    const auto replayed = replay_metrics(log);
    const RunSummary rows[] = {replayed};
    std::ostringstream s;
    write_summary_csv(s, rows);
    if (s.str() != read_text(dir / "summary.csv"))
        return {false, "summary.csv disagrees with the event log replay: " +
                           first_difference(read_text(dir / "summary.csv"), s.str())};
    return {true, "ok"};
}

}  // namespace vanet
