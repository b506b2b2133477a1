#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vanet/channel.hpp"
#include "vanet/geometry.hpp"
#include "vanet/metrics.hpp"
#include "vanet/protocols.hpp"
#include "vanet/scenario.hpp"

namespace vanet {

struct ScriptedMessage {
    double time = 0.0;
    std::uint32_t source = 0;   // car index

    friend bool operator==(const ScriptedMessage&, const ScriptedMessage&) = default;
};

struct WorkloadParams {
    double rate_per_vehicle = 0.1;   // originations per car per second (Poisson)
    double target_radius = 1000.0;   // m; cars inside it at origination are targets
    std::vector<ScriptedMessage> script;   // when non-empty, replaces the Poisson process

    void validate() const;
};

struct SimParams {
    LinkModel link;
    double shadow_loss = 1.0;        // drop probability on Shadowed links
    MacParams mac;
    CloudModel cloud;
    ProtocolParams protocol;
    WorkloadParams workload;
    double beacon_interval = 0.1;    // s
    double duration = 200.0;         // originations happen in [0, duration)
    double drain = 10.0;             // extra time for in-flight messages
    std::uint64_t seed = 1;

    void validate() const;
};

struct RunOptions {
    std::ostream* event_log = nullptr;   // one line per event when set
    bool keep_records = false;
    bool keep_messages = false;          // per-message state, including hop traces
};

struct RunResult {
    RunSummary summary;
    ChannelTallies tallies;
    std::uint64_t messages = 0;
    std::uint64_t pairs = 0;
    std::uint64_t delivered = 0;
    std::uint64_t events = 0;
    std::uint64_t attempts = 0;
    std::uint64_t deferrals = 0;
    std::array<std::uint64_t, 3> initial_modes{};
    std::uint64_t escalations = 0;
    std::vector<MetricsRecord> records;
    std::vector<Message> message_detail;
};

/// One deterministic run of `params.protocol.kind` on `scenario`.
RunResult run_simulation(const Scenario& scenario, const SimParams& params,
                         const RunOptions& options = {});

/// Recomputes the summary metrics from an event log written by run_simulation.
/// Throws ParseError on malformed input.
RunSummary replay_metrics(std::istream& log);

/// Hop traces of every message, one block per message.
void write_hop_trace(std::ostream& out, const Scenario& scenario, std::span<const Message> messages);

}  // namespace vanet
