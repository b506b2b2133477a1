#include "vanet/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "vanet/errors.hpp"
#include "vanet/rng.hpp"
#include "vanet/simcore.hpp"

namespace vanet {

void WorkloadParams::validate() const {
    if (!(rate_per_vehicle >= 0.0) || !std::isfinite(rate_per_vehicle))
        throw ConfigError("workload.rate_per_vehicle: must be finite and >= 0");
    if (!(target_radius > 0.0) || !std::isfinite(target_radius))
        throw ConfigError("workload.target_radius: must be > 0");
    for (std::size_t i = 0; i < script.size(); ++i) {
        if (!(script[i].time >= 0.0) || !std::isfinite(script[i].time))
            throw ConfigError(fmt::format("workload.script[{}]: time must be finite and >= 0", i));
        if (i && script[i].time < script[i - 1].time)
            throw ConfigError(fmt::format("workload.script[{}]: times must be non-decreasing", i));
    }
}

void SimParams::validate() const {
    link.validate();
    mac.validate();
    cloud.validate();
    protocol.validate();
    workload.validate();
    if (!(shadow_loss >= 0.0 && shadow_loss <= 1.0))
        throw ConfigError("link.shadow_loss: must be in [0, 1]");
    if (!(beacon_interval > 0.0) || !std::isfinite(beacon_interval))
        throw ConfigError("run.beacon_interval: must be > 0");
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw ConfigError("run.duration: must be > 0");
    if (!(drain >= 0.0) || !std::isfinite(drain)) throw ConfigError("run.drain: must be >= 0");
}

namespace {

struct Origination {
    double time = 0.0;
    std::uint32_t source = 0;
};

struct AttemptRec {
    AttemptView view;
    Frame frame;
};

struct NodeMac {
    std::deque<Frame> queue;
    bool active = false;   // contending or on air
    std::uint32_t gen = 0;
};

class Simulation final : public Engine {
public:
    Simulation(const Scenario& sc, const SimParams& p, const RunOptions& opt)
        : sc_(sc),
          p_(p),
          opt_(opt),
          dis_(*this, sc, p.protocol, p.cloud, p.link, p.mac, p.seed),
          backoff_rng_(substream(p.seed, "mac-backoff")),
          loss_{p.shadow_loss, substream_seed(p.seed, "shadow")},
          dur_(tx_duration(p.mac)),
          end_(p.duration + p.drain),
          hints_(sc.node_count(), 0),
          tick_pos_(sc.node_count()),
          nb_(sc.node_count()),
          nb_tick_(sc.node_count(), std::numeric_limits<std::uint64_t>::max()),
          mac_(sc.node_count()),
          max_speed_(sc.trace().max_speed()) {}

    RunResult run();

    double now() const override { return q_.now(); }

    std::span<const NeighborEntry> neighbors(std::uint32_t node) override {
        if (nb_tick_[node] == tick_) return nb_[node];
        nb_tick_[node] = tick_;
        auto& out = nb_[node];
        out.clear();
        const auto self = tick_pos_[node];
        if (!self) return out;
        const double r2 = p_.link.t_base * p_.link.t_base;
        for (std::uint32_t m = 0; m < tick_pos_.size(); ++m) {
            if (m == node || !tick_pos_[m]) continue;
            const Point q = *tick_pos_[m];
            if (distance_sq(*self, q) > r2) continue;
            const RegionClass c =
                q == *self ? RegionClass::Clear : sc_.obstacles().classify(*self, q, p_.link);
            if (c == RegionClass::OutOfRange) continue;
            out.push_back({m, q, c, sc_.role(m)});
        }
        return out;
    }

    std::optional<Point> known_position(std::uint32_t node) override { return tick_pos_[node]; }

    std::optional<Point> true_position(std::uint32_t node) override {
        return sc_.position(node, now(), hints_[node]);
    }

    void send(const Frame& frame) override {
        auto& m = mac_[frame.sender];
        m.queue.push_back(frame);
        if (!m.active) begin_contention(frame.sender);
    }

    void schedule(double at, EventPayload payload) override { q_.schedule(at, std::move(payload)); }

private:
    void plan_workload();
    void begin_contention(std::uint32_t node);
    double sensed_busy_until(std::uint32_t node, Point pos);
    void prune(double horizon);

    std::string handle(const Event& ev);
    std::string on_beacon();
    std::string on_origination(const MessageOrigination& e);
    std::string on_tx_start(const TxStart& e);
    std::string on_tx_end(const TxEnd& e);
    std::string on_rx_resolve(const RxResolve& e);

    const Scenario& sc_;
    SimParams p_;
    RunOptions opt_;
    EventQueue q_;
    Disseminator dis_;
    Rng backoff_rng_;
    ShadowLoss loss_;
    double dur_;
    double end_;

    std::vector<std::size_t> hints_;
    std::uint64_t tick_ = 0;
    std::vector<std::optional<Point>> tick_pos_;
    std::vector<std::vector<NeighborEntry>> nb_;
    std::vector<std::uint64_t> nb_tick_;

    std::vector<NodeMac> mac_;
    std::vector<AttemptRec> attempts_;
    std::deque<std::uint32_t> recent_;
    std::vector<std::size_t> pos_hints_ = std::vector<std::size_t>(sc_.node_count(), 0);
    double max_speed_ = 0.0;

    std::vector<Origination> plan_;
    ChannelTallies tallies_;
    std::uint64_t events_ = 0;
    std::uint64_t deferrals_ = 0;
};

void Simulation::plan_workload() {
    if (!p_.workload.script.empty()) {
        for (const auto& m : p_.workload.script) {
            if (m.source >= sc_.n_cars())
                throw ConfigError(fmt::format("workload.script: source {} is not a car", m.source));
            if (m.time < p_.duration && sc_.position(m.source, m.time)) plan_.push_back({m.time, m.source});
        }
        return;
    }
    Rng rng = substream(p_.seed, "workload");
    const double total = p_.workload.rate_per_vehicle * sc_.n_cars();
    if (!(total > 0.0)) return;
    std::exponential_distribution<double> gap(total);
    std::vector<std::uint32_t> present;
    double t = 0.0;
    for (;;) {
        t += gap(rng);
        if (t >= p_.duration) break;
        present.clear();
        for (std::uint32_t c = 0; c < sc_.n_cars(); ++c)
            if (sc_.position(c, t)) present.push_back(c);
        if (present.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, present.size() - 1);
        plan_.push_back({t, present[pick(rng)]});
    }
}

void Simulation::begin_contention(std::uint32_t node) {
    auto& m = mac_[node];
    m.active = true;
    ++m.gen;
    double delay = 0.0;
    if (!p_.mac.zero_backoff)
        delay = p_.mac.aifs() + draw_backoff(backoff_rng_, m.queue.front().cw) * p_.mac.slot_time;
    q_.schedule(now() + delay, TxStart{node, m.gen});
}

void Simulation::prune(double horizon) {
    while (!recent_.empty() && attempts_[recent_.front()].view.end <= horizon) recent_.pop_front();
}

double Simulation::sensed_busy_until(std::uint32_t node, Point pos) {
    const double t = now();
    double until = t;
    for (const auto b : recent_) {
        const auto& v = attempts_[b].view;
        if (v.sender == node || v.start + p_.mac.slot_time > t || v.end <= t) continue;
        if (v.end > until && audible(v, node, pos, sc_.obstacles(), p_.link, loss_)) until = v.end;
    }
    return until;
}

std::string Simulation::on_beacon() {
    tick_ = static_cast<std::uint64_t>(std::llround(now() / p_.beacon_interval));
    for (std::uint32_t n = 0; n < tick_pos_.size(); ++n) tick_pos_[n] = true_position(n);
    const double next = static_cast<double>(tick_ + 1) * p_.beacon_interval;
    if (next < end_) q_.schedule(next, BeaconTick{});
    return fmt::format(" tick={}", tick_);
}

std::string Simulation::on_origination(const MessageOrigination& e) {
    const auto& o = plan_.at(e.message);
    Message msg;
    msg.id = e.message;
    msg.source = o.source;
    msg.payload_size = p_.mac.msg_size;
    msg.created_at = now();
    const auto src = true_position(o.source);
    if (!src) throw IntegrityError("message source outside its trace span");
    msg.origin = *src;
    const double r2 = p_.workload.target_radius * p_.workload.target_radius;
    for (std::uint32_t c = 0; c < sc_.n_cars(); ++c) {
        if (c == o.source) continue;
        const auto p = true_position(c);
        if (p && distance_sq(*p, *src) <= r2) msg.targets.push_back(c);
    }
    const auto n_targets = msg.targets.size();
    dis_.originate(std::move(msg));
    const auto& m = dis_.messages().back();
    return fmt::format(" msg={} src={} targets={} mode={}", m.id, m.source, n_targets,
                       short_name(m.initial_mode));
}

std::string Simulation::on_tx_start(const TxStart& e) {
    auto& m = mac_[e.node];
    if (e.generation != m.gen || m.queue.empty()) return fmt::format(" node={} stale", e.node);
    const Frame frame = m.queue.front();
    const auto pos = true_position(e.node);
    if (!pos) {
        m.queue.pop_front();
        m.active = false;
        dis_.on_dropped(frame);
        if (!m.active && !m.queue.empty()) begin_contention(e.node);
        return fmt::format(" node={} dropped msg={}", e.node, frame.message);
    }
    if (!p_.mac.zero_backoff) {
        prune(now() - dur_);
        const double until = sensed_busy_until(e.node, *pos);
        if (until > now()) {
            ++deferrals_;
            ++m.gen;
            const double at = until + p_.mac.aifs() +
                              draw_backoff(backoff_rng_, frame.cw) * p_.mac.slot_time;
            q_.schedule(at, TxStart{e.node, m.gen});
            return fmt::format(" node={} defer until={}", e.node, format_double(at));
        }
    }
    const auto id = static_cast<std::uint32_t>(attempts_.size());
    attempts_.push_back({AttemptView{id, e.node, *pos, now(), now() + dur_}, frame});
    recent_.push_back(id);
    q_.schedule(now() + dur_, TxEnd{id});
    std::string to = frame.designated == kNoNode ? "-" : std::to_string(frame.designated);
    return fmt::format(" node={} attempt={} msg={} kind={} to={} try={}", e.node, id, frame.message,
                       to_string(frame.kind), to, frame.attempt);
}

std::string Simulation::on_tx_end(const TxEnd& e) {
    const auto& a = attempts_.at(e.attempt);
    auto& m = mac_[a.view.sender];
    m.queue.pop_front();
    m.active = false;
    q_.schedule(now(), RxResolve{e.attempt});
    if (!m.queue.empty()) begin_contention(a.view.sender);
    return fmt::format(" attempt={} node={}", e.attempt, a.view.sender);
}

std::string Simulation::on_rx_resolve(const RxResolve& e) {
    const AttemptRec rec = attempts_.at(e.attempt);
    const AttemptView& v = rec.view;
    prune(v.start);
    std::vector<AttemptView> others;
    for (const auto b : recent_)
        if (b != e.attempt && overlaps(attempts_[b].view, v)) others.push_back(attempts_[b].view);

    // Tick positions bound where a node can be at v.start; skip nodes that
    // cannot be in range before interpolating.
    const double tick_time = static_cast<double>(tick_) * p_.beacon_interval;
    const double reach = p_.link.t_base + max_speed_ * (std::abs(v.start - tick_time) + 1e-9) + 1e-6;
    const double reach2 = reach * reach;
    std::vector<Reception> rx;
    ChannelTallies local;
    for (std::uint32_t r = 0; r < tick_pos_.size(); ++r) {
        if (r == v.sender) continue;
        if (tick_pos_[r] && distance_sq(*tick_pos_[r], v.sender_pos) > reach2) continue;
        const auto pos = sc_.position(r, v.start, pos_hints_[r]);
        if (!pos) continue;
        const auto o = reception_outcome(v, r, *pos, others, sc_.obstacles(), p_.link, loss_);
        if (o == RxOutcome::OutOfRange) continue;
        local.add(o);
        rx.push_back({r, o});
    }
    tallies_.delivered += local.delivered;
    tallies_.collided += local.collided;
    tallies_.shadow_blocked += local.shadow_blocked;

    const auto fresh = dis_.on_resolved(rec.frame, rx);
    std::string line = fmt::format(" attempt={} msg={} d={} c={} s={} hops={} mode={} new=", e.attempt,
                                   rec.frame.message, local.delivered, local.collided,
                                   local.shadow_blocked, rec.frame.hop + 1, short_name(rec.frame.mode));
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        if (i) line += ',';
        line += std::to_string(fresh[i]);
    }
    return line;
}

std::string Simulation::handle(const Event& ev) {
    return std::visit(
        [&](const auto& e) -> std::string {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, BeaconTick>) return on_beacon();
            else if constexpr (std::is_same_v<T, MessageOrigination>) return on_origination(e);
            else if constexpr (std::is_same_v<T, TxStart>) return on_tx_start(e);
            else if constexpr (std::is_same_v<T, TxEnd>) return on_tx_end(e);
            else if constexpr (std::is_same_v<T, RxResolve>) return on_rx_resolve(e);
            else if constexpr (std::is_same_v<T, CloudLeg>) {
                dis_.on_cloud(e);
                return fmt::format(" msg={} stage={} gw={}", e.message, to_string(e.stage),
                                   e.gateway == kNoNode ? std::string("-") : std::to_string(e.gateway));
            } else if constexpr (std::is_same_v<T, RetryTimer>) {
                dis_.on_retry(e);
                return fmt::format(" msg={} holder={}", e.message,
                                   e.holder == kNoNode ? std::string("-") : std::to_string(e.holder));
            } else {
                return {};
            }
        },
        ev.payload);
}

RunResult Simulation::run() {
    std::ostream* log = opt_.event_log;
    if (log) {
        *log << "# vanetsim event log v1\n";
        *log << fmt::format("# protocol={} n_vehicles={} seed={} duration={} msg_size={}\n",
                            config_name(p_.protocol.kind), sc_.n_cars(), p_.seed,
                            format_double(p_.duration), p_.mac.msg_size);
    }
    plan_workload();
    q_.schedule(0.0, BeaconTick{});
    for (std::uint32_t i = 0; i < plan_.size(); ++i) q_.schedule(plan_[i].time, MessageOrigination{i});
    q_.schedule(end_, SimEnd{});

    while (!q_.empty()) {
        const Event ev = q_.pop();
        ++events_;
        std::string detail = handle(ev);
        if (log)
            *log << format_double(ev.time) << ' ' << ev.seq << ' ' << to_string(ev.kind()) << detail
                 << '\n';
        if (ev.kind() == EventKind::SimEnd) break;
    }

    RunResult res;
    MetricsAccumulator acc;
    for (const auto& m : dis_.messages()) {
        for (std::size_t i = 0; i < m.targets.size(); ++i) {
            MetricsRecord r;
            r.message_id = m.id;
            r.source = m.source;
            r.target = m.targets[i];
            r.created_at = m.created_at;
            if (!std::isnan(m.delivered_at[i])) {
                r.outcome = Outcome::Delivered;
                r.delivered_at = m.delivered_at[i];
                r.hops = m.hops[i];
                r.mode_used = m.via[i];
            }
            acc.add(r);
            if (opt_.keep_records) res.records.push_back(r);
        }
    }
    res.summary.n_vehicles = sc_.n_cars();
    res.summary.protocol = p_.protocol.kind;
    res.summary.seed = p_.seed;
    res.summary.mean_e2e_delay = acc.end_to_end_delay();
    res.summary.delivery_probability = acc.delivery_probability();
    res.summary.collision_ratio = collision_ratio(tallies_);
    res.summary.avg_throughput = acc.avg_throughput(p_.duration, p_.mac.msg_size);
    res.tallies = tallies_;
    res.messages = dis_.messages().size();
    res.pairs = acc.pairs();
    res.delivered = acc.delivered();
    res.events = events_;
    res.attempts = attempts_.size();
    res.deferrals = deferrals_;
    res.initial_modes = dis_.initial_modes();
    res.escalations = dis_.escalations();
    if (opt_.keep_messages) res.message_detail = dis_.take_messages();
    return res;
}

// ---------------------------------------------------------------------------
// log replay

std::map<std::string, std::string> fields_of(std::string_view rest) {
    std::map<std::string, std::string> out;
    std::size_t i = 0;
    while (i < rest.size()) {
        while (i < rest.size() && rest[i] == ' ') ++i;
        const auto j = rest.find(' ', i);
        const auto tok = rest.substr(i, j == std::string_view::npos ? rest.size() - i : j - i);
        const auto eq = tok.find('=');
        if (eq != std::string_view::npos)
            out.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
        if (j == std::string_view::npos) break;
        i = j + 1;
    }
    return out;
}

template <typename T>
T num(const std::map<std::string, std::string>& f, const std::string& key, std::size_t line) {
    const auto it = f.find(key);
    if (it == f.end()) throw ParseError(line, "missing field " + key);
    T v{};
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(line, fmt::format("bad value for {}: '{}'", key, s));
    return v;
}

}  // namespace

RunResult run_simulation(const Scenario& scenario, const SimParams& params, const RunOptions& options) {
    params.validate();
    Simulation sim(scenario, params, options);
    return sim.run();
}

RunSummary replay_metrics(std::istream& log) {
    struct Msg {
        double created = 0.0;
        std::uint64_t n_targets = 0;
        std::map<std::uint32_t, double> delivered;
    };
    std::vector<Msg> msgs;
    ChannelTallies tallies;
    RunSummary s;
    double duration = 0.0;
    std::uint32_t msg_size = 0;
    bool header = false;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(log, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# protocol=", 0) == 0) {
                const auto f = fields_of(std::string_view(line).substr(2));
                const auto p = parse_protocol(f.at("protocol"));
                if (!p) throw ParseError(lineno, "unknown protocol");
                s.protocol = *p;
                s.n_vehicles = num<std::uint32_t>(f, "n_vehicles", lineno);
                s.seed = num<std::uint64_t>(f, "seed", lineno);
                duration = num<double>(f, "duration", lineno);
                msg_size = num<std::uint32_t>(f, "msg_size", lineno);
                header = true;
            }
            continue;
        }
        std::istringstream ls(line);
        std::string ts, seq, kind;
        if (!(ls >> ts >> seq >> kind)) throw ParseError(lineno, "truncated event line");
        double t = 0.0;
        {
            const auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
            if (ec != std::errc{} || ptr != ts.data() + ts.size()) throw ParseError(lineno, "bad time");
        }
        std::string rest;
        std::getline(ls, rest);
        if (kind == "MessageOrigination") {
            const auto f = fields_of(rest);
            const auto id = num<std::uint32_t>(f, "msg", lineno);
            if (id != msgs.size()) throw ParseError(lineno, "message ids out of sequence");
            msgs.push_back({t, num<std::uint64_t>(f, "targets", lineno), {}});
        } else if (kind == "RxResolve") {
            const auto f = fields_of(rest);
            tallies.delivered += num<std::uint64_t>(f, "d", lineno);
            tallies.collided += num<std::uint64_t>(f, "c", lineno);
            tallies.shadow_blocked += num<std::uint64_t>(f, "s", lineno);
            const auto id = num<std::uint32_t>(f, "msg", lineno);
            if (id >= msgs.size()) throw ParseError(lineno, "delivery for unknown message");
            const auto it = f.find("new");
            if (it == f.end()) throw ParseError(lineno, "missing field new");
            std::string_view nv = it->second;
            while (!nv.empty()) {
                const auto c = nv.find(',');
                const auto tok = nv.substr(0, c);
                std::uint32_t target = 0;
                const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), target);
                if (ec != std::errc{} || ptr != tok.data() + tok.size())
                    throw ParseError(lineno, "bad target id");
                if (!msgs[id].delivered.emplace(target, t).second)
                    throw ParseError(lineno, "target delivered twice");
                nv = c == std::string_view::npos ? std::string_view{} : nv.substr(c + 1);
            }
        }
    }
    if (!header) throw ParseError(lineno, "missing log header");

    MetricsAccumulator acc;
    for (std::uint32_t i = 0; i < msgs.size(); ++i) {
        const auto& m = msgs[i];
        if (m.delivered.size() > m.n_targets) throw ParseError(0, "more deliveries than targets");
        for (const auto& [target, at] : m.delivered) {
            MetricsRecord r;
            r.message_id = i;
            r.target = target;
            r.outcome = Outcome::Delivered;
            r.created_at = m.created;
            r.delivered_at = at;
            acc.add(r);
        }
        MetricsRecord miss;
        miss.created_at = m.created;
        for (std::uint64_t k = m.delivered.size(); k < m.n_targets; ++k) acc.add(miss);
    }
    s.mean_e2e_delay = acc.end_to_end_delay();
    s.delivery_probability = acc.delivery_probability();
    s.collision_ratio = collision_ratio(tallies);
    s.avg_throughput = acc.avg_throughput(duration, msg_size);
    return s;
}

void write_hop_trace(std::ostream& out, const Scenario& scenario, std::span<const Message> messages) {
    for (const auto& m : messages) {
        out << fmt::format("message {} source={} created={} targets={} delivered={} mode={}\n", m.id,
                           scenario.node_id(m.source), format_double(m.created_at), m.targets.size(),
                           m.n_delivered, to_string(m.initial_mode));
        for (const auto& h : m.hop_trace)
            out << fmt::format("  {} {} {} {}\n", format_double(h.time),
                               h.node == kNoNode ? std::string("cloud") : scenario.node_id(h.node),
                               to_string(h.action), short_name(h.mode));
    }
}

}  // namespace vanet
