#include "vanet/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "vanet/errors.hpp"

namespace vanet {

void CloudModel::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError(fmt::format("cloud.{}: must be finite and >= 0", name));
    };
    nonneg(uplink_delay, "uplink_delay");
    nonneg(downlink_delay, "downlink_delay");
    nonneg(delay_jitter, "delay_jitter");
    nonneg(processing_delay, "processing_delay");
    nonneg(deploy_delay, "deploy_delay");
    nonneg(gateway_access_delay, "gateway_access_delay");
    if (delay_jitter > uplink_delay || delay_jitter > downlink_delay)
        throw ConfigError("cloud.delay_jitter: must not exceed the uplink or downlink delay");
}

void ProtocolParams::validate() const {
    if (!(mode_threshold >= 0.0 && mode_threshold <= 1.0))
        throw ConfigError("protocol.mode_threshold: must be in [0, 1]");
    if (ttl == 0) throw ConfigError("protocol.ttl: must be >= 1");
    if (!(cloud_split >= 0.0 && cloud_split <= 1.0))
        throw ConfigError("protocol.cloud_split: must be in [0, 1]");
    if (k_max == 0) throw ConfigError("protocol.k_max: must be >= 1");
    if (!(retry_interval > 0.0) || !std::isfinite(retry_interval))
        throw ConfigError("protocol.retry_interval: must be > 0");
}

DisseminationMode select_mode(std::span<const NeighborEntry> table, double threshold) {
    std::size_t in_range = 0;
    std::size_t shadowed = 0;
    bool clear_vehicle = false;
    for (const auto& e : table) {
        if (e.cls == RegionClass::OutOfRange) continue;
        ++in_range;
        if (e.cls == RegionClass::Shadowed) ++shadowed;
        else if (e.role != NodeRole::Rsu) clear_vehicle = true;
    }
    const double frac =
        in_range == 0 ? 1.0 : static_cast<double>(shadowed) / static_cast<double>(in_range);
    if (frac >= threshold) return DisseminationMode::CloudGateway;
    return clear_vehicle ? DisseminationMode::MultiHopV2V : DisseminationMode::MultiHopV2I;
}

DisseminationMode select_mode(Point source, std::span<const Point> vehicles,
                              std::span<const Point> rsus, const ObstacleMap& map,
                              const LinkModel& lm, double threshold) {
    std::vector<NeighborEntry> table;
    auto add = [&](Point p, NodeRole role) {
        const RegionClass c = p == source ? RegionClass::Clear : map.classify(source, p, lm);
        if (c != RegionClass::OutOfRange) table.push_back({0, p, c, role});
    };
    for (const auto& p : vehicles) add(p, NodeRole::Car);
    for (const auto& p : rsus) add(p, NodeRole::Rsu);
    return select_mode(table, threshold);
}

std::optional<std::vector<std::uint32_t>> select_gateways(std::span<const GatewayInfo> candidates,
                                                          std::span<const TargetInfo> targets,
                                                          const ObstacleMap& map,
                                                          const LinkModel& lm,
                                                          std::uint32_t k_max) {
    std::vector<std::uint32_t> chosen;
    if (targets.empty()) return chosen;
    if (candidates.empty()) return std::nullopt;

    std::vector<std::vector<std::size_t>> covers(candidates.size());
    for (std::size_t g = 0; g < candidates.size(); ++g)
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const Point a = candidates[g].pos;
            const Point b = targets[t].pos;
            if (a == b || map.classify(a, b, lm) == RegionClass::Clear) covers[g].push_back(t);
        }

    std::vector<bool> covered(targets.size(), false);
    std::vector<bool> used(candidates.size(), false);
    std::size_t n_covered = 0;
    while (chosen.size() < k_max && n_covered < targets.size()) {
        std::optional<std::size_t> best;
        std::size_t best_gain = 0;
        for (std::size_t g = 0; g < candidates.size(); ++g) {
            if (used[g]) continue;
            std::size_t gain = 0;
            for (const auto t : covers[g]) gain += covered[t] ? 0 : 1;
            if (gain == 0) continue;
            bool better = !best || gain > best_gain;
            if (best && gain == best_gain) {
                const auto& c = candidates[g];
                const auto& b = candidates[*best];
                better = c.access_delay < b.access_delay ||
                         (c.access_delay == b.access_delay && c.gateway_id < b.gateway_id);
            }
            if (better) {
                best = g;
                best_gain = gain;
            }
        }
        if (!best) break;
        used[*best] = true;
        chosen.push_back(candidates[*best].gateway_id);
        for (const auto t : covers[*best])
            if (!covered[t]) {
                covered[t] = true;
                ++n_covered;
            }
    }
    return chosen;
}

std::optional<std::uint32_t> targeted_relay(Point holder, std::span<const RelayCandidate> candidates,
                                            std::span<const Point> uncovered) {
    if (candidates.empty() || uncovered.empty()) return std::nullopt;
    // The farthest target some candidate improves on; equal distances keep
    // the earlier target.
    std::optional<std::uint32_t> pick;
    double pick_own = -1.0;
    for (const Point t : uncovered) {
        const double own = distance_sq(holder, t);
        if (own <= pick_own) continue;
        const RelayCandidate* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& c : candidates) {
            const double d = distance_sq(c.pos, t);
            if (d < best_d || (d == best_d && best && c.node < best->node)) {
                best = &c;
                best_d = d;
            }
        }
        if (best && best_d < own) {
            pick = best->node;
            pick_own = own;
        }
    }
    return pick;
}

std::optional<std::uint32_t> progress_relay(Point holder, Point origin,
                                            std::span<const RelayCandidate> candidates,
                                            bool holder_is_origin) {
    const double own = distance_sq(holder, origin);
    const RelayCandidate* best = nullptr;
    double best_d = -1.0;
    for (const auto& c : candidates) {
        if (!holder_is_origin && !(distance_sq(c.pos, origin) > own)) continue;
        const double d = distance_sq(c.pos, holder);
        if (d > best_d || (d == best_d && best && c.node < best->node)) {
            best = &c;
            best_d = d;
        }
    }
    if (!best) return std::nullopt;
    return best->node;
}

// ---------------------------------------------------------------------------

std::string_view to_string(FrameKind k) {
    switch (k) {
        case FrameKind::Relay: return "Relay";
        case FrameKind::Uplink: return "Uplink";
        case FrameKind::Downlink: return "Downlink";
    }
    return "?";
}

std::string_view to_string(HopAction a) {
    switch (a) {
        case HopAction::Originate: return "originate";
        case HopAction::Transmit: return "transmit";
        case HopAction::Retransmit: return "retransmit";
        case HopAction::Reselect: return "reselect";
        case HopAction::Escalate: return "escalate";
        case HopAction::ModeSwitch: return "mode-switch";
        case HopAction::Uplink: return "uplink";
        case HopAction::CloudProcessed: return "cloud-processed";
        case HopAction::Downlink: return "downlink";
        case HopAction::Retry: return "retry";
        case HopAction::GiveUp: return "give-up";
    }
    return "?";
}

bool Message::has_transmitted(std::uint32_t node) const {
    return std::find(transmitted.begin(), transmitted.end(), node) != transmitted.end();
}

Disseminator::Disseminator(Engine& engine, const Scenario& scenario, const ProtocolParams& params,
                           const CloudModel& cloud, const LinkModel& link, const MacParams& mac,
                           std::uint64_t seed)
    : engine_(engine),
      scenario_(scenario),
      params_(params),
      cloud_(cloud),
      link_(link),
      mac_(mac),
      split_rng_(substream(seed, "split")),
      cloud_rng_(substream(seed, "cloud")) {}

void Disseminator::note(Message& m, std::uint32_t node, HopAction a, DisseminationMode mode) {
    m.hop_trace.push_back({node, engine_.now(), a, mode});
}

double Disseminator::jittered(double base) {
    if (cloud_.delay_jitter <= 0.0) return base;
    std::uniform_real_distribution<double> u(base - cloud_.delay_jitter, base + cloud_.delay_jitter);
    return u(cloud_rng_);
}

void Disseminator::originate(Message msg) {
    if (msg.id != messages_.size())
        throw IntegrityError(fmt::format("message id {} out of sequence", msg.id));
    const auto n = msg.targets.size();
    msg.delivered_at.assign(n, std::numeric_limits<double>::quiet_NaN());
    msg.hops.assign(n, 0);
    msg.via.assign(n, DisseminationMode::MultiHopV2V);
    msg.n_delivered = 0;

    DisseminationMode mode = DisseminationMode::MultiHopV2V;
    switch (params_.kind) {
        case ProtocolKind::HybridVehcloud:
            mode = select_mode(engine_.neighbors(msg.source), params_.mode_threshold);
            break;
        case ProtocolKind::CmdsLike: mode = DisseminationMode::CloudGateway; break;
        case ProtocolKind::ClbpLike: mode = DisseminationMode::MultiHopV2V; break;
        case ProtocolKind::CloudVanetLike: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            mode = u(split_rng_) < params_.cloud_split ? DisseminationMode::CloudGateway
                                                       : DisseminationMode::MultiHopV2V;
            break;
        }
    }
    msg.initial_mode = msg.chain_mode = mode;
    ++initial_modes_[static_cast<std::size_t>(mode)];
    messages_.push_back(std::move(msg));
    Message& m = messages_.back();
    note(m, m.source, HopAction::Originate, mode);
    if (m.targets.empty()) return;
    if (mode == DisseminationMode::CloudGateway) start_uplink(m, m.source, 0);
    else relay_step(m, m.source, 0);
}

std::optional<std::uint32_t> Disseminator::pick_relay(const Message& m, std::uint32_t holder) {
    const auto hpos = engine_.known_position(holder);
    if (!hpos) return std::nullopt;
    const auto table = engine_.neighbors(holder);

    auto gather = [&](NodeRole role) {
        std::vector<RelayCandidate> out;
        for (const auto& e : table)
            if (e.cls == RegionClass::Clear && e.role == role && !m.has_transmitted(e.node))
                out.push_back({e.node, e.pos});
        return out;
    };

    auto choose = [&](std::span<const RelayCandidate> cands) -> std::optional<std::uint32_t> {
        if (cands.empty()) return std::nullopt;
        if (params_.kind == ProtocolKind::ClbpLike)
            return progress_relay(*hpos, m.origin, cands, holder == m.source);
        std::vector<Point> uncovered;
        for (std::size_t i = 0; i < m.targets.size(); ++i) {
            if (!std::isnan(m.delivered_at[i])) continue;
            if (const auto p = engine_.known_position(m.targets[i])) uncovered.push_back(*p);
        }
        return targeted_relay(*hpos, cands, uncovered);
    };

    if (m.chain_mode == DisseminationMode::MultiHopV2I) {
        const auto rsus = gather(NodeRole::Rsu);
        if (const auto r = choose(rsus)) return r;
    }
    const auto cars = gather(NodeRole::Car);
    return choose(cars);
}

void Disseminator::relay_step(Message& m, std::uint32_t holder, std::uint16_t hop) {
    if (m.complete()) return;
    if (hop >= params_.ttl || m.has_transmitted(holder)) {
        chain_end(m, holder, hop);
        return;
    }
    const auto relay = pick_relay(m, holder);
    if (!relay) {
        chain_end(m, holder, hop);
        return;
    }
    m.transmitted.push_back(holder);
    note(m, holder, HopAction::Transmit, m.chain_mode);
    engine_.send(Frame{FrameKind::Relay, m.id, holder, *relay, hop, 0, mac_.cw_min, m.chain_mode});
}

void Disseminator::chain_end(Message& m, std::uint32_t holder, std::uint16_t hop) {
    if (m.complete()) return;
    if (params_.kind == ProtocolKind::HybridVehcloud) {
        const auto mode = select_mode(engine_.neighbors(holder), params_.mode_threshold);
        note(m, holder, HopAction::Reselect, mode);
        if (mode == DisseminationMode::CloudGateway && !m.escalated) {
            m.escalated = true;
            ++escalations_;
            note(m, holder, HopAction::Escalate, mode);
            start_uplink(m, holder, hop);
            return;
        }
        if (mode != DisseminationMode::CloudGateway && mode != m.chain_mode && !m.switched &&
            hop < params_.ttl) {
            m.switched = true;
            m.chain_mode = mode;
            note(m, holder, HopAction::ModeSwitch, mode);
            // the holder may relay again under the new mode
            m.transmitted.erase(std::remove(m.transmitted.begin(), m.transmitted.end(), holder),
                                m.transmitted.end());
            relay_step(m, holder, hop);
            return;
        }
    }
    note(m, holder, HopAction::GiveUp, m.chain_mode);
}

void Disseminator::start_uplink(Message& m, std::uint32_t holder, std::uint16_t hop) {
    m.cloud_hop = hop;
    const auto hpos = engine_.known_position(holder);
    std::optional<std::uint32_t> bus;
    double best = std::numeric_limits<double>::infinity();
    if (hpos)
        for (const auto& e : engine_.neighbors(holder)) {
            if (e.role != NodeRole::Bus || e.cls != RegionClass::Clear) continue;
            const double d = distance_sq(*hpos, e.pos);
            if (d < best) {
                best = d;
                bus = e.node;
            }
        }
    if (!bus) {
        cloud_retry(m, holder);
        return;
    }
    note(m, holder, HopAction::Uplink, DisseminationMode::CloudGateway);
    engine_.send(Frame{FrameKind::Uplink, m.id, holder, *bus, hop, 0, mac_.cw_min,
                       DisseminationMode::CloudGateway});
}

void Disseminator::cloud_retry(Message& m, std::uint32_t holder) {
    if (m.cloud_retries >= params_.max_retries) {
        note(m, holder, HopAction::GiveUp, DisseminationMode::CloudGateway);
        return;
    }
    ++m.cloud_retries;
    note(m, holder, HopAction::Retry, DisseminationMode::CloudGateway);
    engine_.schedule(engine_.now() + params_.retry_interval, RetryTimer{m.id, holder});
}

void Disseminator::cloud_process(Message& m) {
    if (m.complete()) return;
    std::vector<TargetInfo> targets;
    for (std::size_t i = 0; i < m.targets.size(); ++i) {
        if (!std::isnan(m.delivered_at[i])) continue;
        if (const auto p = engine_.true_position(m.targets[i])) targets.push_back({m.targets[i], *p});
    }
    if (targets.empty()) {
        note(m, kNoNode, HopAction::GiveUp, DisseminationMode::CloudGateway);
        return;
    }
    std::vector<GatewayInfo> gws;
    for (std::uint32_t b = scenario_.first_bus(); b < scenario_.first_rsu(); ++b)
        if (const auto p = engine_.true_position(b))
            gws.push_back({b, *p, cloud_.gateway_access_delay, mac_.data_rate});
    const auto sel = select_gateways(gws, targets, scenario_.obstacles(), link_, params_.k_max);
    if (!sel || sel->empty()) {
        cloud_retry(m, kNoNode);
        return;
    }
    note(m, kNoNode, HopAction::CloudProcessed, DisseminationMode::CloudGateway);
    for (const auto g : *sel)
        engine_.schedule(engine_.now() + jittered(cloud_.downlink_delay) + cloud_.gateway_access_delay,
                         CloudLeg{m.id, CloudStage::DownlinkArrive, g});
}

void Disseminator::on_cloud(const CloudLeg& leg) {
    Message& m = messages_.at(leg.message);
    switch (leg.stage) {
        case CloudStage::Arrive: {
            const double t = engine_.now();
            if (!cloud_deployed_) {
                cloud_deployed_ = true;
                cloud_ready_at_ = t + cloud_.deploy_delay;
            }
            engine_.schedule(std::max(t, cloud_ready_at_) + cloud_.processing_delay,
                             CloudLeg{m.id, CloudStage::Processed, kNoNode});
            break;
        }
        case CloudStage::Processed: cloud_process(m); break;
        case CloudStage::DownlinkArrive:
            if (m.complete()) break;
            note(m, leg.gateway, HopAction::Downlink, DisseminationMode::CloudGateway);
            engine_.send(Frame{FrameKind::Downlink, m.id, leg.gateway, kNoNode,
                               static_cast<std::uint16_t>(m.cloud_hop + 1), 0, mac_.cw_min,
                               DisseminationMode::CloudGateway});
            break;
    }
}

void Disseminator::on_retry(const RetryTimer& timer) {
    Message& m = messages_.at(timer.message);
    if (m.complete()) return;
    if (timer.holder == kNoNode) cloud_process(m);
    else start_uplink(m, timer.holder, m.cloud_hop);
}

void Disseminator::retransmit(const Frame& frame) {
    Frame f = frame;
    ++f.attempt;
    f.cw = next_cw(f.cw, mac_);
    note(messages_.at(f.message), f.sender, HopAction::Retransmit, f.mode);
    engine_.send(f);
}

std::vector<std::uint32_t> Disseminator::on_resolved(const Frame& frame,
                                                     std::span<const Reception> outcomes) {
    Message& m = messages_.at(frame.message);
    std::vector<std::uint32_t> fresh;
    bool designated_ok = false;
    const double t = engine_.now();
    for (const auto& r : outcomes) {
        if (r.outcome != RxOutcome::Delivered) continue;
        if (r.node == frame.designated) designated_ok = true;
        const auto it = std::lower_bound(m.targets.begin(), m.targets.end(), r.node);
        if (it == m.targets.end() || *it != r.node) continue;
        const auto i = static_cast<std::size_t>(it - m.targets.begin());
        if (!std::isnan(m.delivered_at[i])) continue;
        m.delivered_at[i] = t;
        m.hops[i] = static_cast<std::uint16_t>(frame.hop + 1);
        m.via[i] = frame.mode;
        ++m.n_delivered;
        fresh.push_back(r.node);
    }

    switch (frame.kind) {
        case FrameKind::Relay:
            if (m.complete()) break;
            if (designated_ok) relay_step(m, frame.designated, static_cast<std::uint16_t>(frame.hop + 1));
            else if (frame.attempt < mac_.unicast_retries) retransmit(frame);
            else chain_end(m, frame.sender, frame.hop);
            break;
        case FrameKind::Uplink:
            if (designated_ok)
                engine_.schedule(t + jittered(cloud_.uplink_delay),
                                 CloudLeg{m.id, CloudStage::Arrive, frame.designated});
            else if (frame.attempt < mac_.unicast_retries) retransmit(frame);
            else cloud_retry(m, frame.sender);
            break;
        case FrameKind::Downlink: break;
    }
    return fresh;
}

void Disseminator::on_dropped(const Frame& frame) {
    on_resolved(frame, {});
}

}  // namespace vanet
