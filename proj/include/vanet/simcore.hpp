#pragma once

#include <cstdint>
#include <queue>
#include <string_view>
#include <variant>
#include <vector>

namespace vanet {

inline constexpr std::uint32_t kNoNode = 0xffffffffu;

struct BeaconTick {};
struct TxStart {
    std::uint32_t node = 0;
    std::uint32_t generation = 0;  // stale contentions are ignored
};
struct TxEnd {
    std::uint32_t attempt = 0;
};
struct RxResolve {
    std::uint32_t attempt = 0;
};
enum class CloudStage : std::uint8_t { Arrive, Processed, DownlinkArrive };
struct CloudLeg {
    std::uint32_t message = 0;
    CloudStage stage = CloudStage::Arrive;
    std::uint32_t gateway = kNoNode;
};
struct RetryTimer {
    std::uint32_t message = 0;
    std::uint32_t holder = kNoNode;  // kNoNode: the cloud retries gateway selection
};
struct MessageOrigination {
    std::uint32_t message = 0;
};
struct SimEnd {};

using EventPayload = std::variant<BeaconTick, TxStart, TxEnd, RxResolve, CloudLeg, RetryTimer,
                                  MessageOrigination, SimEnd>;

enum class EventKind : std::uint8_t {
    BeaconTick,
    TxStart,
    TxEnd,
    RxResolve,
    CloudLeg,
    RetryTimer,
    MessageOrigination,
    SimEnd
};

std::string_view to_string(EventKind k);
std::string_view to_string(CloudStage s);

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventPayload payload;

    EventKind kind() const { return static_cast<EventKind>(payload.index()); }
};

/// Min-queue on (time, seq). seq is assigned at scheduling time, so events at
/// equal times pop in scheduling order.
class EventQueue {
public:
    /// Throws IntegrityError if `time` is before the current simulation time.
    std::uint64_t schedule(double time, EventPayload payload);

    /// Pops the next event and advances now() to its time.
    Event pop();

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    double now() const { return now_; }
    std::uint64_t scheduled() const { return next_seq_; }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
};

}  // namespace vanet
