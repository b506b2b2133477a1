#include "vanet/channel.hpp"

#include <algorithm>
#include <vector>

#include <fmt/format.h>

#include "vanet/errors.hpp"
#include "vanet/link_kernels.hpp"

namespace vanet {

void MacParams::validate() const {
    if (!(data_rate > 0.0)) throw ConfigError("mac.data_rate: must be positive");
    if (cw_min == 0) throw ConfigError("mac.cw_min: must be positive");
    if (cw_min > cw_max) throw ConfigError("mac.cw_max: must be >= cw_min");
    if (!(slot_time > 0.0)) throw ConfigError("mac.slot_time: must be positive");
    if (!(sifs >= 0.0)) throw ConfigError("mac.sifs: must be non-negative");
    if (msg_size == 0) throw ConfigError("mac.msg_size: must be positive");
}

double tx_duration(const MacParams& p) { return p.msg_size * 8.0 / p.data_rate; }

std::uint32_t draw_backoff(Rng& rng, std::uint32_t cw) {
    return std::uniform_int_distribution<std::uint32_t>(0, cw)(rng);
}

std::uint32_t next_cw(std::uint32_t cw, const MacParams& p) {
    return std::min(2 * (cw + 1) - 1, p.cw_max);
}

std::string_view to_string(RxOutcome o) {
    switch (o) {
        case RxOutcome::Delivered: return "Delivered";
        case RxOutcome::Collided: return "Collided";
        case RxOutcome::ShadowBlocked: return "ShadowBlocked";
        case RxOutcome::OutOfRange: return "OutOfRange";
    }
    return "?";
}

bool audible(const AttemptView& b, std::uint32_t receiver, Point rx_pos, const ObstacleMap& map,
             const LinkModel& lm, const ShadowLoss& loss) {
    if (distance(b.sender_pos, rx_pos) > lm.t_base) return false;
    if (classify_pair(b.sender_pos, rx_pos, map, lm) == RegionClass::Shadowed)
        return !loss.blocks(b.key, receiver);
    return true;
}

RxOutcome reception_outcome(const AttemptView& a, std::uint32_t receiver, Point rx_pos,
                            std::span<const AttemptView> others, const ObstacleMap& map,
                            const LinkModel& lm, const ShadowLoss& loss) {
    if (distance(a.sender_pos, rx_pos) > lm.t_base) return RxOutcome::OutOfRange;
    if (classify_pair(a.sender_pos, rx_pos, map, lm) == RegionClass::Shadowed &&
        loss.blocks(a.key, receiver))
        return RxOutcome::ShadowBlocked;
    for (const auto& b : others) {
        if (b.key == a.key || !overlaps(a, b)) continue;
        if (b.sender == receiver) return RxOutcome::Collided;  // half duplex
        if (audible(b, receiver, rx_pos, map, lm, loss)) return RxOutcome::Collided;
    }
    return RxOutcome::Delivered;
}

ReceptionMap resolve_receptions(std::span<const TxAttempt> attempts,
                                std::span<const std::uint32_t> receivers,
                                const PositionFn& positions, const ObstacleMap& map,
                                const LinkModel& lm, const ShadowLoss& loss) {
    std::vector<AttemptView> views;
    views.reserve(attempts.size());
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        const auto& a = attempts[i];
        if (i > 0 && a.start < attempts[i - 1].start)
            throw InvalidInput("attempts must be ordered by start time");
        if (!(a.end > a.start)) throw InvalidInput("attempt must have end > start");
        const auto pos = positions(a.sender, a.start);
        if (!pos)
            throw IntegrityError(fmt::format("no position for sender {} at t={}", a.sender, a.start));
        views.push_back(AttemptView{i, a.sender, *pos, a.start, a.end});
    }

    ReceptionMap out;
    for (std::size_t i = 0; i < views.size(); ++i) {
        const auto& a = views[i];
        for (const std::uint32_t r : receivers) {
            if (r == a.sender) continue;
            const auto pos = positions(r, a.start);
            if (!pos)
                throw IntegrityError(fmt::format("no position for receiver {} at t={}", r, a.start));
            out[{i, r}] = reception_outcome(a, r, *pos, views, map, lm, loss);
        }
    }
    return out;
}

}  // namespace vanet
