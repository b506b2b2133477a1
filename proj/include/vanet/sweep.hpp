#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vanet/config.hpp"
#include "vanet/metrics.hpp"
#include "vanet/modes.hpp"
#include "vanet/simulation.hpp"

namespace vanet {

struct RunJob {
    ProtocolKind protocol = ProtocolKind::HybridVehcloud;
    std::uint32_t n_vehicles = 0;   // ignored for trace scenarios
    std::uint64_t seed = 0;
};

struct JobOutcome {
    RunJob job;
    std::optional<RunSummary> summary;
    std::string error;   // set when the run threw
};

/// Cartesian product in (protocol, count, seed) order. Throws ConfigError on
/// an empty axis.
std::vector<RunJob> sweep_jobs(std::span<const ProtocolKind> protocols,
                               std::span<const std::uint32_t> counts,
                               std::span<const std::uint64_t> seeds);

/// Base config with the job's protocol, vehicle count and seed applied.
ScenarioConfig job_config(const ScenarioConfig& base, const RunJob& job);

using JobFn = std::function<RunSummary(const RunJob&)>;

/// Runs every job; a throwing job is recorded and the rest continue. Output
/// is in job order either way.
std::vector<JobOutcome> run_jobs_serial(std::span<const RunJob> jobs, const JobFn& fn);
std::vector<JobOutcome> run_jobs_parallel(std::span<const RunJob> jobs, const JobFn& fn, int threads);

/// Plain in-memory run of one job.
RunSummary run_job(const ScenarioConfig& base, const RunJob& job);

struct RunDirOptions {
    bool hop_trace = false;
    std::ostream* echo_events = nullptr;
};

/// Runs `cfg` and writes config.yaml, summary.csv, the four figure CSVs,
/// events.log and (optionally) hop_trace.txt into `dir`.
RunResult execute_run(const ScenarioConfig& cfg, const std::filesystem::path& dir,
                      const RunDirOptions& opt = {});

/// Aggregated sweep outputs: config.yaml, summary.csv, figure CSVs and,
/// when runs failed, failures.txt.
void write_sweep_outputs(const std::filesystem::path& dir, const ScenarioConfig& base,
                         std::span<const JobOutcome> outcomes);

struct ValidationReport {
    bool ok = false;
    std::string message;
};

/// Re-runs the recorded config and diffs summary.csv, the figure CSVs and
/// events.log byte-for-byte, then checks the summary against a replay of the
/// log. Throws ConfigError when the directory lacks config.yaml or events.log.
ValidationReport validate_run_dir(const std::filesystem::path& dir);

}  // namespace vanet
