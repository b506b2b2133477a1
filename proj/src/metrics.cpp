#include "vanet/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "vanet/errors.hpp"

namespace vanet {

void MetricsAccumulator::add(const MetricsRecord& r) {
    ++pairs_;
    if (r.outcome != Outcome::Delivered) return;
    if (!r.delivered_at) throw InvalidInput("delivered record without delivered_at");
    ++delivered_;
    delay_sum_ += *r.delivered_at - r.created_at;
}

std::optional<double> MetricsAccumulator::end_to_end_delay() const {
    if (delivered_ == 0) return std::nullopt;
    return delay_sum_ / static_cast<double>(delivered_);
}

std::optional<double> MetricsAccumulator::delivery_probability() const {
    if (pairs_ == 0) return std::nullopt;
    return static_cast<double>(delivered_) / static_cast<double>(pairs_);
}

double MetricsAccumulator::avg_throughput(double duration, std::uint32_t msg_size_bytes) const {
    if (!(duration > 0.0)) throw InvalidInput("duration must be positive");
    return static_cast<double>(delivered_) * msg_size_bytes * 8.0 / duration;
}

namespace {
MetricsAccumulator accumulate(std::span<const MetricsRecord> records) {
    MetricsAccumulator acc;
    for (const auto& r : records) acc.add(r);
    return acc;
}
}  // namespace

std::optional<double> end_to_end_delay(std::span<const MetricsRecord> records) {
    return accumulate(records).end_to_end_delay();
}

std::optional<double> delivery_probability(std::span<const MetricsRecord> records) {
    return accumulate(records).delivery_probability();
}

double collision_ratio(const ChannelTallies& t) {
    const auto denom = t.opportunities();
    if (denom == 0) return 0.0;
    return static_cast<double>(t.collided) / static_cast<double>(denom);
}

double avg_throughput(std::span<const MetricsRecord> records, double duration,
                      std::uint32_t msg_size_bytes) {
    return accumulate(records).avg_throughput(duration, msg_size_bytes);
}

// ---------------------------------------------------------------------------

std::string figure_filename(Metric m) {
    switch (m) {
        case Metric::Delay: return "figure3_delay.csv";
        case Metric::Delivery: return "figure4_delivery.csv";
        case Metric::Collision: return "figure5_collision.csv";
        case Metric::Throughput: return "figure6_throughput.csv";
    }
    return "unknown.csv";
}

std::string metric_label(Metric m) {
    switch (m) {
        case Metric::Delay: return "end_to_end_delay_s";
        case Metric::Delivery: return "delivery_probability";
        case Metric::Collision: return "collision_ratio";
        case Metric::Throughput: return "avg_throughput_bps";
    }
    return "unknown";
}

std::optional<double> metric_value(const RunSummary& s, Metric m) {
    switch (m) {
        case Metric::Delay: return s.mean_e2e_delay;
        case Metric::Delivery: return s.delivery_probability;
        case Metric::Collision: return s.collision_ratio;
        case Metric::Throughput: return s.avg_throughput;
    }
    return std::nullopt;
}

const CellStats& SweepTable::at(ProtocolKind p, std::uint32_t n, Metric m) const {
    const auto it = cells.find({p, n});
    if (it == cells.end())
        throw InvalidInput(fmt::format("no cell for {} at n={}", to_string(p), n));
    return it->second[static_cast<std::size_t>(m)];
}

namespace {

CellStats stats_of(const std::vector<double>& xs) {
    CellStats c;
    c.n = xs.size();
    if (xs.empty()) return c;
    double sum = 0.0;
    for (const double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    c.mean = mean;
    if (xs.size() < 2) return c;
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    c.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    const boost::math::students_t dist(static_cast<double>(xs.size() - 1));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    c.ci95 = t * c.stddev / std::sqrt(static_cast<double>(xs.size()));
    return c;
}

}  // namespace

SweepTable aggregate_sweep(std::span<const RunSummary> summaries) {
    SweepTable table;
    std::set<ProtocolKind> protos;
    std::set<std::uint32_t> counts;
    std::map<std::pair<ProtocolKind, std::uint32_t>, std::vector<const RunSummary*>> groups;
    for (const auto& s : summaries) {
        protos.insert(s.protocol);
        counts.insert(s.n_vehicles);
        groups[{s.protocol, s.n_vehicles}].push_back(&s);
    }
    table.protocols.assign(protos.begin(), protos.end());
    table.counts.assign(counts.begin(), counts.end());
    for (const auto& [key, runs] : groups) table.expected_seeds = std::max(table.expected_seeds, runs.size());

    for (const auto p : table.protocols) {
        for (const auto n : table.counts) {
            const auto it = groups.find({p, n});
            const std::size_t have = it == groups.end() ? 0 : it->second.size();
            table.runs[{p, n}] = have;
            if (have < table.expected_seeds)
                table.warnings.push_back(fmt::format("cell {} n={} has {} of {} seeds", to_string(p),
                                                     n, have, table.expected_seeds));
            std::array<CellStats, 4> cell{};
            for (const auto m : kAllMetrics) {
                std::vector<double> xs;
                if (it != groups.end())
                    for (const auto* s : it->second)
                        if (const auto v = metric_value(*s, m)) xs.push_back(*v);
                cell[static_cast<std::size_t>(m)] = stats_of(xs);
            }
            table.cells[{p, n}] = cell;
        }
    }
    return table;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw InvalidInput("double formatting failed");
    return std::string(buf.data(), ptr);
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("NA");
}

void write_figure_csv(std::ostream& out, const SweepTable& table, Metric m,
                      const CsvProvenance& prov) {
    out << "# metric: " << metric_label(m) << '\n';
    out << "# config_hash: " << prov.config_hash << '\n';
    out << "# version: " << prov.version << '\n';
    out << "# duration_s: " << format_double(prov.duration) << '\n';
    out << "# seeds:";
    for (const auto s : prov.seeds) out << ' ' << s;
    out << '\n';
    if (m == Metric::Collision)
        out << "# collision_ratio = collided / (delivered + collided + shadow_blocked) receptions\n";
    out << "# ci95: Student-t half-width over seeds; 0 when n < 2\n";
    for (const auto& w : table.warnings) out << "# warning: " << w << '\n';

    out << "n_vehicles";
    for (const auto p : table.protocols)
        out << ',' << to_string(p) << ',' << to_string(p) << "_ci95," << to_string(p) << "_n";
    out << '\n';
    for (const auto n : table.counts) {
        out << n;
        for (const auto p : table.protocols) {
            const auto& c = table.at(p, n, m);
            out << ',' << format_optional(c.mean) << ',' << format_double(c.ci95) << ',' << c.n;
        }
        out << '\n';
    }
}

namespace {
constexpr std::string_view kSummaryHeader =
    "n_vehicles,protocol,seed,mean_e2e_delay_s,delivery_probability,collision_ratio,avg_throughput_bps";

std::optional<double> parse_opt(std::string_view s) {
    if (s == "NA") return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(0, fmt::format("bad number '{}'", s));
    return v;
}
}  // namespace

void write_summary_csv(std::ostream& out, std::span<const RunSummary> rows) {
    out << kSummaryHeader << '\n';
    for (const auto& r : rows) {
        out << r.n_vehicles << ',' << to_string(r.protocol) << ',' << r.seed << ','
            << format_optional(r.mean_e2e_delay) << ',' << format_optional(r.delivery_probability)
            << ',' << format_double(r.collision_ratio) << ',' << format_double(r.avg_throughput)
            << '\n';
    }
}

std::vector<RunSummary> parse_summary_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != kSummaryHeader) throw ParseError(1, "bad summary header");
    std::vector<RunSummary> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw ParseError(lineno, "expected 7 fields");
        RunSummary r;
        try {
            r.n_vehicles = static_cast<std::uint32_t>(std::stoul(f[0]));
            const auto p = parse_protocol(f[1]);
            if (!p) throw ParseError(lineno, "unknown protocol " + f[1]);
            r.protocol = *p;
            r.seed = std::stoull(f[2]);
            r.mean_e2e_delay = parse_opt(f[3]);
            r.delivery_probability = parse_opt(f[4]);
            r.collision_ratio = parse_opt(f[5]).value_or(0.0);
            r.avg_throughput = parse_opt(f[6]).value_or(0.0);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace vanet
