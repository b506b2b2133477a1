#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vanet/channel.hpp"
#include "vanet/geometry.hpp"
#include "vanet/modes.hpp"
#include "vanet/rng.hpp"
#include "vanet/scenario.hpp"
#include "vanet/simcore.hpp"

namespace vanet {

/// Latencies of the vehicular-cloud side. Uplink and downlink are drawn
/// uniformly from [delay - jitter, delay + jitter].
struct CloudModel {
    double uplink_delay = 0.020;
    double downlink_delay = 0.020;
    double delay_jitter = 0.0;
    double processing_delay = 0.010;
    double deploy_delay = 0.100;          // paid once per run, on first use
    double gateway_access_delay = 0.0;

    void validate() const;
};

struct ProtocolParams {
    ProtocolKind kind = ProtocolKind::HybridVehcloud;
    double mode_threshold = 0.5;    // shadow fraction at which the cloud path is chosen
    std::uint32_t ttl = 20;         // multi-hop hop limit
    double cloud_split = 0.5;       // CloudVANET-like: share of messages sent via the cloud
    std::uint32_t k_max = 3;        // gateways per cloud dissemination
    double retry_interval = 1.0;    // s
    std::uint32_t max_retries = 5;

    void validate() const;
};

struct GatewayInfo {
    std::uint32_t gateway_id = 0;
    Point pos;
    double access_delay = 0.0;
    double bandwidth = 2.0e6;
};

struct TargetInfo {
    std::uint32_t id = 0;
    Point pos;
};

/// One row of a node's neighbor table: an in-range node and the link class.
struct NeighborEntry {
    std::uint32_t node = 0;
    Point pos;
    RegionClass cls = RegionClass::Clear;
    NodeRole role = NodeRole::Car;
};

/// Shadow fraction of the table (vehicles and RSUs together) against the
/// threshold; below it, V2V if any vehicle link is Clear, else V2I.
DisseminationMode select_mode(std::span<const NeighborEntry> table, double threshold);

/// Same rule, classifying the links from raw positions.
DisseminationMode select_mode(Point source, std::span<const Point> vehicles,
                              std::span<const Point> rsus, const ObstacleMap& map,
                              const LinkModel& lm, double threshold);

/// Greedy maximum coverage. A gateway covers a target within t_base over a
/// Clear link. Picks the gateway adding the most uncovered targets, ties to
/// the lower access delay and then the lower id; stops at k_max, at full
/// coverage, or when no gateway adds anything. Empty optional when there are
/// targets but no candidates at all.
std::optional<std::vector<std::uint32_t>> select_gateways(std::span<const GatewayInfo> candidates,
                                                          std::span<const TargetInfo> targets,
                                                          const ObstacleMap& map,
                                                          const LinkModel& lm,
                                                          std::uint32_t k_max);

struct RelayCandidate {
    std::uint32_t node = 0;
    Point pos;
};

/// Target-directed greedy forwarding: walk the uncovered targets from the
/// farthest (from the holder) inwards and return the candidate closest to the
/// first target some candidate gets strictly closer to than the holder.
std::optional<std::uint32_t> targeted_relay(Point holder, std::span<const RelayCandidate> candidates,
                                            std::span<const Point> uncovered);

/// Distance-progress forwarding: the candidate farthest from the holder among
/// those farther from the origin than the holder (any candidate at the origin).
std::optional<std::uint32_t> progress_relay(Point holder, Point origin,
                                            std::span<const RelayCandidate> candidates,
                                            bool holder_is_origin);

// ---------------------------------------------------------------------------
// Dissemination state machine

enum class FrameKind : std::uint8_t { Relay, Uplink, Downlink };

std::string_view to_string(FrameKind k);

struct Frame {
    FrameKind kind = FrameKind::Relay;
    std::uint32_t message = 0;
    std::uint32_t sender = 0;
    std::uint32_t designated = kNoNode;   // intended next holder, if any
    std::uint16_t hop = 0;                // hops before this transmission
    std::uint8_t attempt = 0;             // retransmission count
    std::uint32_t cw = 31;
    DisseminationMode mode = DisseminationMode::MultiHopV2V;
};

enum class HopAction : std::uint8_t {
    Originate,
    Transmit,
    Retransmit,
    Reselect,
    Escalate,
    ModeSwitch,
    Uplink,
    CloudProcessed,
    Downlink,
    Retry,
    GiveUp
};

std::string_view to_string(HopAction a);

struct HopEntry {
    std::uint32_t node = kNoNode;
    double time = 0.0;
    HopAction action = HopAction::Originate;
    DisseminationMode mode = DisseminationMode::MultiHopV2V;
};

struct Message {
    std::uint32_t id = 0;
    std::uint32_t source = 0;
    std::uint32_t payload_size = 256;
    double created_at = 0.0;
    Point origin;
    std::vector<std::uint32_t> targets;       // car node ids, ascending
    std::vector<double> delivered_at;         // NaN until delivered
    std::vector<std::uint16_t> hops;
    std::vector<DisseminationMode> via;
    std::uint32_t n_delivered = 0;
    DisseminationMode initial_mode = DisseminationMode::MultiHopV2V;
    DisseminationMode chain_mode = DisseminationMode::MultiHopV2V;
    std::vector<HopEntry> hop_trace;

    // protocol bookkeeping
    std::vector<std::uint32_t> transmitted;   // nodes that broadcast it
    std::uint32_t cloud_retries = 0;
    std::uint16_t cloud_hop = 0;
    bool escalated = false;
    bool switched = false;

    bool complete() const { return n_delivered == targets.size(); }
    bool has_transmitted(std::uint32_t node) const;
};

/// Services the dissemination logic needs from the running simulation.
class Engine {
public:
    virtual double now() const = 0;
    /// Beacon-derived table of `node`: in-range nodes as of the last beacon tick.
    virtual std::span<const NeighborEntry> neighbors(std::uint32_t node) = 0;
    /// Position as of the last beacon tick.
    virtual std::optional<Point> known_position(std::uint32_t node) = 0;
    /// Ground-truth position now.
    virtual std::optional<Point> true_position(std::uint32_t node) = 0;
    virtual void send(const Frame& frame) = 0;
    virtual void schedule(double at, EventPayload payload) = 0;

protected:
    ~Engine() = default;
};

struct Reception {
    std::uint32_t node = 0;
    RxOutcome outcome = RxOutcome::OutOfRange;
};

/// Hybrid-Vehcloud and the three comparators over one shared engine.
///
///   Hybrid-Vehcloud  mode from select_mode at the source; a stuck multi-hop
///                    chain re-runs select_mode at its last holder and may
///                    escalate the remaining targets to the cloud.
///   CMDS-like        every message through the cloud pipeline.
///   CLBP-like        multi-hop with distance-progress relays, no fallback.
///   CloudVANET-like  static split between the two paths, no fallback.
class Disseminator {
public:
    Disseminator(Engine& engine, const Scenario& scenario, const ProtocolParams& params,
                 const CloudModel& cloud, const LinkModel& link, const MacParams& mac,
                 std::uint64_t seed);

    /// Takes a message whose id equals the number of messages seen so far.
    void originate(Message msg);

    /// Records deliveries and advances the message. Returns targets reached
    /// for the first time by this frame.
    std::vector<std::uint32_t> on_resolved(const Frame& frame, std::span<const Reception> outcomes);

    /// The frame never went on air (sender left the trace).
    void on_dropped(const Frame& frame);

    void on_cloud(const CloudLeg& leg);
    void on_retry(const RetryTimer& timer);

    const std::vector<Message>& messages() const { return messages_; }
    std::vector<Message> take_messages() { return std::move(messages_); }
    std::array<std::uint64_t, 3> initial_modes() const { return initial_modes_; }
    std::uint64_t escalations() const { return escalations_; }

private:
    void note(Message& m, std::uint32_t node, HopAction a, DisseminationMode mode);
    void relay_step(Message& m, std::uint32_t holder, std::uint16_t hop);
    std::optional<std::uint32_t> pick_relay(const Message& m, std::uint32_t holder);
    void chain_end(Message& m, std::uint32_t holder, std::uint16_t hop);
    void start_uplink(Message& m, std::uint32_t holder, std::uint16_t hop);
    void cloud_retry(Message& m, std::uint32_t holder);
    void cloud_process(Message& m);
    void retransmit(const Frame& frame);
    double jittered(double base);

    Engine& engine_;
    const Scenario& scenario_;
    ProtocolParams params_;
    CloudModel cloud_;
    LinkModel link_;
    MacParams mac_;
    Rng split_rng_;
    Rng cloud_rng_;
    std::vector<Message> messages_;
    bool cloud_deployed_ = false;
    double cloud_ready_at_ = 0.0;
    std::array<std::uint64_t, 3> initial_modes_{};
    std::uint64_t escalations_ = 0;
};

}  // namespace vanet
