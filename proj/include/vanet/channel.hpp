#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "vanet/geometry.hpp"
#include "vanet/rng.hpp"

namespace vanet {

/// 802.11p broadcast MAC/PHY parameters. Defaults follow the evaluation
/// table (2 Mbit/s, CW 31/1023, 256-byte messages) plus the standard 802.11p
/// slot and SIFS durations.
struct MacParams {
    double data_rate = 2.0e6;       // bit/s
    std::uint32_t cw_min = 31;
    std::uint32_t cw_max = 1023;
    double slot_time = 13.0e-6;     // s
    double sifs = 32.0e-6;          // s
    std::uint32_t msg_size = 256;   // bytes
    std::uint32_t unicast_retries = 2;
    bool zero_backoff = false;      // test mode: no AIFS, no backoff, no carrier sense

    void validate() const;
    double aifs() const { return sifs + 2.0 * slot_time; }
};

double tx_duration(const MacParams& p);

/// Uniform integer in [0, cw].
std::uint32_t draw_backoff(Rng& rng, std::uint32_t cw);

/// Contention window after a failed unicast attempt: 2(cw + 1) - 1, capped.
std::uint32_t next_cw(std::uint32_t cw, const MacParams& p);

struct TxAttempt {
    std::uint32_t sender = 0;
    std::uint32_t message_id = 0;
    double start = 0.0;
    double end = 0.0;
};

enum class RxOutcome : std::uint8_t { Delivered, Collided, ShadowBlocked, OutOfRange };

std::string_view to_string(RxOutcome o);

/// Loss applied to Shadowed links. probability 1 drops every shadowed
/// reception. Draws are keyed on (attempt, receiver) so the same link gets
/// the same verdict whether it carries the wanted signal or interference.
struct ShadowLoss {
    double probability = 1.0;
    std::uint64_t seed = 0;

    bool blocks(std::uint64_t attempt_key, std::uint32_t receiver) const {
        if (probability >= 1.0) return true;
        if (probability <= 0.0) return false;
        return hash_uniform(seed, attempt_key, receiver) < probability;
    }
};

struct ChannelTallies {
    std::uint64_t delivered = 0;
    std::uint64_t collided = 0;
    std::uint64_t shadow_blocked = 0;

    void add(RxOutcome o) {
        switch (o) {
            case RxOutcome::Delivered: ++delivered; break;
            case RxOutcome::Collided: ++collided; break;
            case RxOutcome::ShadowBlocked: ++shadow_blocked; break;
            case RxOutcome::OutOfRange: break;
        }
    }
    std::uint64_t opportunities() const { return delivered + collided + shadow_blocked; }

    friend bool operator==(const ChannelTallies&, const ChannelTallies&) = default;
};

/// An attempt as seen by the reception rule: sender position frozen at start.
struct AttemptView {
    std::uint64_t key = 0;
    std::uint32_t sender = 0;
    Point sender_pos;
    double start = 0.0;
    double end = 0.0;
};

inline bool overlaps(const AttemptView& a, const AttemptView& b) {
    return a.start < b.end && b.start < a.end;
}

/// Whether b's energy reaches `receiver` (in range and not shadow-dropped).
/// Used for both interference and carrier sense.
bool audible(const AttemptView& b, std::uint32_t receiver, Point rx_pos, const ObstacleMap& map,
             const LinkModel& lm, const ShadowLoss& loss);

/// Outcome of attempt `a` at one receiver. `others` must hold every other
/// attempt overlapping `a` in time (others may include non-overlapping
/// entries; they are ignored). No capture: any audible overlap collides.
RxOutcome reception_outcome(const AttemptView& a, std::uint32_t receiver, Point rx_pos,
                            std::span<const AttemptView> others, const ObstacleMap& map,
                            const LinkModel& lm, const ShadowLoss& loss);

using PositionFn = std::function<std::optional<Point>(std::uint32_t node, double t)>;
using ReceptionMap = std::map<std::pair<std::size_t, std::uint32_t>, RxOutcome>;

/// Batch form: one outcome per (attempt index, receiver) pair, receivers
/// other than the sender. Throws IntegrityError if a position is missing and
/// InvalidInput if attempts are not ordered by start time.
ReceptionMap resolve_receptions(std::span<const TxAttempt> attempts,
                                std::span<const std::uint32_t> receivers,
                                const PositionFn& positions, const ObstacleMap& map,
                                const LinkModel& lm, const ShadowLoss& loss);

}  // namespace vanet
