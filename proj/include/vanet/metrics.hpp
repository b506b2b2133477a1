#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vanet/channel.hpp"
#include "vanet/modes.hpp"

namespace vanet {

enum class Outcome : std::uint8_t { Delivered, Undelivered };

/// One (message, target) pair.
struct MetricsRecord {
    std::uint32_t message_id = 0;
    std::uint32_t source = 0;
    std::uint32_t target = 0;
    Outcome outcome = Outcome::Undelivered;
    double created_at = 0.0;
    std::optional<double> delivered_at;
    std::uint32_t hops = 0;
    DisseminationMode mode_used = DisseminationMode::MultiHopV2V;
};

struct RunSummary {
    std::uint32_t n_vehicles = 0;
    ProtocolKind protocol = ProtocolKind::HybridVehcloud;
    std::uint64_t seed = 0;
    std::optional<double> mean_e2e_delay;        // s; empty when nothing was delivered
    std::optional<double> delivery_probability;  // empty when no pair was intended
    double collision_ratio = 0.0;
    double avg_throughput = 0.0;                 // bit/s
};

/// Streaming form of the metric functions below. Feeding the same records in
/// the same order gives bit-identical results to the span overloads.
class MetricsAccumulator {
public:
    void add(const MetricsRecord& r);

    std::optional<double> end_to_end_delay() const;
    std::optional<double> delivery_probability() const;
    double avg_throughput(double duration, std::uint32_t msg_size_bytes) const;

    std::uint64_t pairs() const { return pairs_; }
    std::uint64_t delivered() const { return delivered_; }

private:
    std::uint64_t pairs_ = 0;
    std::uint64_t delivered_ = 0;
    double delay_sum_ = 0.0;
};

std::optional<double> end_to_end_delay(std::span<const MetricsRecord> records);
std::optional<double> delivery_probability(std::span<const MetricsRecord> records);
/// Collided / (Delivered + Collided + ShadowBlocked); 0 with no opportunities.
double collision_ratio(const ChannelTallies& tallies);
/// Payload bits over delivered pairs per second. Throws InvalidInput for duration <= 0.
double avg_throughput(std::span<const MetricsRecord> records, double duration,
                      std::uint32_t msg_size_bytes);

// ---------------------------------------------------------------------------
// Sweep aggregation

enum class Metric : std::uint8_t { Delay, Delivery, Collision, Throughput };

inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Delay, Metric::Delivery,
                                                   Metric::Collision, Metric::Throughput};

std::string figure_filename(Metric m);
std::string metric_label(Metric m);
std::optional<double> metric_value(const RunSummary& s, Metric m);

struct CellStats {
    std::optional<double> mean;
    double ci95 = 0.0;   // half-width of the Student-t interval; 0 for n < 2
    double stddev = 0.0;
    std::size_t n = 0;   // summaries in the cell with a defined value
};

struct SweepTable {
    std::vector<ProtocolKind> protocols;
    std::vector<std::uint32_t> counts;
    std::map<std::pair<ProtocolKind, std::uint32_t>, std::array<CellStats, 4>> cells;
    std::map<std::pair<ProtocolKind, std::uint32_t>, std::size_t> runs;
    std::size_t expected_seeds = 0;
    std::vector<std::string> warnings;

    const CellStats& at(ProtocolKind p, std::uint32_t n, Metric m) const;
};

/// Mean and 95% CI per (protocol, vehicle count) cell over seeds. Cells with
/// fewer runs than the fullest cell are kept and reported in `warnings`.
SweepTable aggregate_sweep(std::span<const RunSummary> summaries);

struct CsvProvenance {
    std::string config_hash;
    std::vector<std::uint64_t> seeds;
    std::string version;
    double duration = 0.0;
};

/// Figure-shaped CSV: x = vehicle count, three columns (mean, ci95, n) per protocol.
void write_figure_csv(std::ostream& out, const SweepTable& table, Metric m,
                      const CsvProvenance& prov);

void write_summary_csv(std::ostream& out, std::span<const RunSummary> rows);
std::vector<RunSummary> parse_summary_csv(std::istream& in);

/// Shortest round-trip decimal form; "NA" for empty.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

}  // namespace vanet
