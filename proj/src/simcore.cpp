#include "vanet/simcore.hpp"

#include <cmath>

#include <fmt/format.h>

#include "vanet/errors.hpp"

namespace vanet {

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::BeaconTick: return "BeaconTick";
        case EventKind::TxStart: return "TxStart";
        case EventKind::TxEnd: return "TxEnd";
        case EventKind::RxResolve: return "RxResolve";
        case EventKind::CloudLeg: return "CloudLeg";
        case EventKind::RetryTimer: return "RetryTimer";
        case EventKind::MessageOrigination: return "MessageOrigination";
        case EventKind::SimEnd: return "SimEnd";
    }
    return "?";
}

std::string_view to_string(CloudStage s) {
    switch (s) {
        case CloudStage::Arrive: return "Arrive";
        case CloudStage::Processed: return "Processed";
        case CloudStage::DownlinkArrive: return "DownlinkArrive";
    }
    return "?";
}

std::uint64_t EventQueue::schedule(double time, EventPayload payload) {
    if (!std::isfinite(time) || time < now_)
        throw IntegrityError(fmt::format("event scheduled in the past: t={} < now={}", time, now_));
    const std::uint64_t seq = next_seq_++;
    heap_.push(Event{time, seq, std::move(payload)});
    return seq;
}

Event EventQueue::pop() {
    if (heap_.empty()) throw IntegrityError("pop from an empty event queue");
    Event e = heap_.top();
    heap_.pop();
    now_ = e.time;
    return e;
}

}  // namespace vanet
