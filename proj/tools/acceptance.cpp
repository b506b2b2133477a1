// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit code is
// non-zero only when the checks themselves could not run.
//
//   acceptance [--seeds N] [--counts 50,100,...] [--jobs J] [--out DIR] [--keep-runs]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "support.hpp"
#include "vanet/config.hpp"
#include "vanet/sweep.hpp"

namespace fs = std::filesystem;
using namespace vanet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int passed = 0;
int failed = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    (ok ? passed : failed)++;
    std::cout << fmt::format("{} criterion {:>2} {}: {}\n", ok ? "PASS" : "FAIL", id, name, detail)
              << std::flush;
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

// Pearson correlation of the ranks; 0 when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::string join(const std::vector<double>& v, const char* f = "{:.4g}") {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt::format(fmt::runtime(f), v[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Criteria 1-5 and 8: the protocol sweep

struct SweepData {
    std::vector<std::uint32_t> counts;
    std::vector<std::uint64_t> seeds;
    std::vector<JobOutcome> outcomes;
    std::vector<char> validated;
    std::vector<std::string> validation_errors;
    SweepTable table;

    std::optional<double> value(ProtocolKind p, std::uint32_t n, std::uint64_t seed, Metric m) const {
        for (const auto& o : outcomes)
            if (o.summary && o.job.protocol == p && o.job.n_vehicles == n && o.job.seed == seed)
                return metric_value(*o.summary, m);
        return std::nullopt;
    }
    double mean(ProtocolKind p, std::uint32_t n, Metric m) const {
        const auto& c = table.at(p, n, m);
        return c.mean ? *c.mean : std::numeric_limits<double>::quiet_NaN();
    }
    std::vector<double> curve(ProtocolKind p, Metric m) const {
        std::vector<double> out;
        for (const auto n : counts) out.push_back(mean(p, n, m));
        return out;
    }
};

SweepData run_sweep(const ScenarioConfig& base, std::vector<std::uint32_t> counts, std::vector<std::uint64_t> seeds,
                    int jobs, const fs::path& out, bool keep) {
    SweepData d;
    d.counts = std::move(counts);
    d.seeds = std::move(seeds);
    const std::vector<ProtocolKind> protos(kAllProtocols.begin(), kAllProtocols.end());
    const auto list = sweep_jobs(protos, d.counts, d.seeds);
    d.outcomes.resize(list.size());
    d.validated.assign(list.size(), 0);
    d.validation_errors.resize(list.size());
    const auto n = static_cast<std::ptrdiff_t>(list.size());
    std::size_t done = 0;
    const auto t0 = Clock::now();
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& job = list[static_cast<std::size_t>(i)];
        auto& o = d.outcomes[static_cast<std::size_t>(i)];
        o.job = job;
        const fs::path dir = out / "runs" / fmt::format("{}-n{}-s{}", config_name(job.protocol), job.n_vehicles, job.seed);
        try {
            o.summary = execute_run(job_config(base, job), dir).summary;
            const auto v = validate_run_dir(dir);
            d.validated[static_cast<std::size_t>(i)] = v.ok;
            if (!v.ok) d.validation_errors[static_cast<std::size_t>(i)] = v.message;
        } catch (const std::exception& e) {
            o.error = e.what();
        }
        if (!keep) fs::remove_all(dir);
#pragma omp critical
        {
            ++done;
            if (done % 40 == 0 || done == list.size())
                std::cerr << fmt::format("  sweep {}/{} runs, {:.0f} s\n", done, list.size(), seconds_since(t0));
        }
    }
    write_sweep_outputs(out, base, d.outcomes);
    std::vector<RunSummary> rows;
    for (const auto& o : d.outcomes)
        if (o.summary) rows.push_back(*o.summary);
    d.table = aggregate_sweep(rows);
    return d;
}

const ProtocolKind kHybrid = ProtocolKind::HybridVehcloud;
const std::array<ProtocolKind, 3> kBaselines{ProtocolKind::CmdsLike, ProtocolKind::ClbpLike,
                                             ProtocolKind::CloudVanetLike};

void criterion_1(const SweepData& d) {
    const std::uint32_t top = d.counts.back();
    std::string detail = fmt::format("n={} seeds={};", top, d.seeds.size());
    bool ok = true;
    double weakest = std::numeric_limits<double>::infinity();
    for (const auto b : kBaselines) {
        std::size_t wins = 0, n = 0;
        for (const auto s : d.seeds) {
            const auto h = d.value(kHybrid, top, s, Metric::Delivery);
            const auto v = d.value(b, top, s, Metric::Delivery);
            if (!h || !v) continue;
            ++n;
            wins += *h > *v;
        }
        const double frac = n ? static_cast<double>(wins) / static_cast<double>(n) : 0.0;
        ok = ok && frac >= 0.9;
        weakest = std::min(weakest, d.mean(b, top, Metric::Delivery));
        detail += fmt::format(" beats {} in {}/{} seeds;", to_string(b), wins, n);
    }
    const double h = d.mean(kHybrid, top, Metric::Delivery);
    const double gain = h / weakest - 1.0;
    ok = ok && gain >= 0.10;
    detail += fmt::format(" mean {:.4f} vs weakest baseline {:.4f} (+{:.1f}%, need +10%)", h, weakest, 100 * gain);
    report(1, "headline delivery at high density", ok, detail);
}

void criterion_2(const SweepData& d) {
    bool ok = true;
    std::string detail;
    for (const auto p : kAllProtocols) {
        const auto c = d.curve(p, Metric::Delay);
        bool mono = true;
        for (std::size_t i = 0; i + 1 < c.size(); ++i) mono = mono && c[i + 1] >= c[i] * 0.95;
        ok = ok && mono;
        detail += fmt::format("{} [{}] {}; ", to_string(p), join(c), mono ? "non-decreasing" : "DECREASES");
    }
    const std::uint32_t top = d.counts.back();
    const double h = d.mean(kHybrid, top, Metric::Delay);
    for (const auto b : kBaselines) {
        const double v = d.mean(b, top, Metric::Delay);
        const bool le = h <= v;
        ok = ok && le;
        detail += fmt::format("Hybrid {} {} at {}: {:.4g} vs {:.4g}; ", le ? "<=" : ">", to_string(b), top, h, v);
    }
    report(2, "delay grows with density, Hybrid lowest at the top", ok, detail);
}

void criterion_3(const SweepData& d) {
    const auto c = d.curve(kHybrid, Metric::Delivery);
    const double rel = std::abs(c.back() - c.front()) / c.front();
    std::vector<double> x(d.counts.begin(), d.counts.end());
    const double rho = spearman(x, c);
    const bool ok = rel <= 0.15 && rho <= 0.0;
    report(3, "Hybrid delivery flat or falling", ok,
           fmt::format("[{}]; change {:+.1f}% (limit 15%), spearman {:.3f} (need <= 0)", join(c),
                       100 * (c.back() - c.front()) / c.front(), rho));
}

void criterion_4(const SweepData& d) {
    bool ok = true;
    std::string detail;
    std::vector<double> x(d.counts.begin(), d.counts.end());
    for (const auto p : kAllProtocols) {
        const auto c = d.curve(p, Metric::Collision);
        const double rho = spearman(x, c);
        ok = ok && rho >= 0.0;
        detail += fmt::format("{} spearman {:.3f}; ", to_string(p), rho);
    }
    const std::uint32_t top = d.counts.back();
    const double h = d.mean(kHybrid, top, Metric::Collision);
    const double c = d.mean(ProtocolKind::ClbpLike, top, Metric::Collision);
    ok = ok && h <= c;
    detail += fmt::format("at {}: Hybrid {:.4g} vs CLBP-like {:.4g}", top, h, c);
    report(4, "collision ratio trend", ok, detail);
}

void criterion_5(const SweepData& d) {
    const auto c = d.curve(kHybrid, Metric::Throughput);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) ok = ok && c[i + 1] > c[i];
    std::string detail = fmt::format("Hybrid [{}] {}; ", join(c, "{:.4g}"), ok ? "strictly increasing" : "NOT increasing");
    std::size_t misses = 0;
    for (const auto n : d.counts) {
        const auto& h = d.table.at(kHybrid, n, Metric::Throughput);
        for (const auto b : kBaselines) {
            const auto& v = d.table.at(b, n, Metric::Throughput);
            const double se = std::sqrt(h.stddev * h.stddev / std::max<std::size_t>(h.n, 1) +
                                        v.stddev * v.stddev / std::max<std::size_t>(v.n, 1));
            if (*h.mean + se < *v.mean) {
                ++misses;
                detail += fmt::format("below {} at {} ({:.4g} vs {:.4g}, se {:.3g}); ", to_string(b), n, *h.mean,
                                      *v.mean, se);
            }
        }
    }
    ok = ok && misses == 0;
    if (!misses) detail += "Hybrid >= every baseline at every count within one pooled SE";
    report(5, "throughput trend", ok, detail);
}

void criterion_8(const SweepData& d) {
    std::size_t ok = 0, runs = 0;
    std::string first;
    for (std::size_t i = 0; i < d.outcomes.size(); ++i) {
        ++runs;
        if (d.validated[i]) ++ok;
        else if (first.empty())
            first = d.outcomes[i].error.empty() ? d.validation_errors[i] : d.outcomes[i].error;
    }
    report(8, "replay determinism", ok == runs,
           fmt::format("{}/{} run directories validated{}", ok, runs, first.empty() ? "" : "; first failure: " + first));
}

// ---------------------------------------------------------------------------
// Criterion 6: geometry against dense sampling

void criterion_6() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> pos(0.0, 500.0), len(1.0, 350.0), ang(0.0, 2 * M_PI),
        size(1.0, 80.0), delta(0.0, 20.0);
    std::size_t disagree = 0, banded = 0;
    std::array<std::size_t, 3> seen{};
    for (int i = 0; i < 1000; ++i) {
        const Point tx{pos(rng), pos(rng)};
        const double r = len(rng), a = ang(rng);
        const Point rx{tx.x + r * std::cos(a), tx.y + r * std::sin(a)};
        std::vector<Obstacle> obs;
        const int k = 1 + static_cast<int>(rng() % 4);
        for (int j = 0; j < k; ++j) {
            // half the rectangles are dropped near the link so blockage is common
            const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const Point c = j % 2 ? Point{pos(rng), pos(rng)}
                                  : Point{tx.x + t * (rx.x - tx.x) + pos(rng) / 10 - 25, tx.y + t * (rx.y - tx.y) + pos(rng) / 10 - 25};
            const double w = size(rng), h = size(rng);
            obs.emplace_back(Point{c.x - w / 2, c.y - h / 2}, Point{c.x + w / 2, c.y + h / 2});
        }
        const LinkModel lm{300.0, i % 3 == 0 ? 5.0 : delta(rng)};

        const double dist = std::sqrt((tx.x - rx.x) * (tx.x - rx.x) + (tx.y - rx.y) * (tx.y - rx.y));
        RegionClass oracle = RegionClass::OutOfRange;
        bool band = std::abs(dist - lm.t_base) <= 1e-6;
        if (dist <= lm.t_base) {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& o : obs)
                m = std::min(m, testing::sampled_signed_clearance(tx, rx, o.min_corner(), o.max_corner()));
            band = band || std::abs(m - lm.clearance_delta) <= 1e-6 || std::abs(m) <= 1e-6;
            oracle = m < lm.clearance_delta || m <= 0.0 ? RegionClass::Shadowed : RegionClass::Clear;
        }
        if (band) {
            ++banded;
            continue;
        }
        ++seen[static_cast<std::size_t>(oracle)];
        if (classify_link(tx, rx, obs, lm) != oracle) ++disagree;
    }
    const double secs = seconds_since(t0);
    report(6, "geometry oracle", disagree == 0 && secs < 5.0,
           fmt::format("{} disagreements over {} decided cases ({} in the boundary band; {} shadowed, {} clear, {} out of "
                       "range) in {:.2f} s",
                       disagree, 1000 - banded, banded, seen[0], seen[1], seen[2], secs));
}

// ---------------------------------------------------------------------------
// Criterion 7: greedy coverage

void criterion_7() {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0.0, 800.0);
    const double bound = 1.0 - 1.0 / std::exp(1.0);
    const LinkModel lm;
    int meets = 0, optimal = 0;
    constexpr int kInstances = 200;
    for (int inst = 0; inst < kInstances; ++inst) {
        std::vector<Obstacle> obs;
        for (int k = 0; k < 5; ++k) {
            const double x = u(rng), y = u(rng);
            obs.emplace_back(Point{x, y}, Point{x + 40.0 + u(rng) / 10, y + 40.0 + u(rng) / 10});
        }
        const ObstacleMap map(obs);
        const std::size_t ng = 2 + rng() % 11, nt = 5 + rng() % 40;
        const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng() % 4);
        std::vector<GatewayInfo> gws;
        std::vector<TargetInfo> tgs;
        for (std::size_t g = 0; g < ng; ++g) gws.push_back({static_cast<std::uint32_t>(g), {u(rng), u(rng)}});
        for (std::size_t t = 0; t < nt; ++t) tgs.push_back({static_cast<std::uint32_t>(t), {u(rng), u(rng)}});
        std::vector<std::vector<bool>> covers(ng, std::vector<bool>(nt));
        for (std::size_t g = 0; g < ng; ++g)
            for (std::size_t t = 0; t < nt; ++t)
                covers[g][t] = classify_link(gws[g].pos, tgs[t].pos, obs, lm) == RegionClass::Clear;
        const auto sel = select_gateways(gws, tgs, map, lm, k);
        std::size_t got = 0;
        if (sel)
            for (std::size_t t = 0; t < nt; ++t)
                for (const auto g : *sel)
                    if (covers[g][t]) {
                        ++got;
                        break;
                    }
        const auto best = testing::best_coverage(covers, k);
        meets += static_cast<double>(got) >= bound * static_cast<double>(best);
        optimal += got == best;
    }
    report(7, "greedy coverage bound", meets == kInstances,
           fmt::format("{}/{} instances within (1-1/e) of the exhaustive optimum; optimal on {}/{} ({:.0f}%, "
                       "reported only)",
                       meets, kInstances, optimal, kInstances, 100.0 * optimal / kInstances));
}

// ---------------------------------------------------------------------------
// Criterion 9: cloud leg sums

void criterion_9() {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    int checked = 0, missing = 0;
    for (int sc = 0; sc < 50; ++sc) {
        const double bx = 80.0 + 200.0 * unit(rng);
        Point target;
        do {
            const double r = 20.0 + 270.0 * unit(rng), a = 2 * M_PI * unit(rng);
            target = {bx + r * std::cos(a), r * std::sin(a)};
        } while (std::hypot(target.x, target.y) <= 310.0);
        const std::vector<Point> cars{{0, 0}, target};
        const std::vector<Point> buses{{bx, 0}};
        const auto scenario = testing::static_scenario(cars, buses);

        auto p = testing::quiet_params(ProtocolKind::CmdsLike, {{1.0 + unit(rng), 0}, {6.0 + unit(rng), 0}});
        p.cloud.uplink_delay = 0.05 * unit(rng);
        p.cloud.downlink_delay = 0.05 * unit(rng);
        p.cloud.processing_delay = 0.02 * unit(rng);
        p.cloud.deploy_delay = 0.5 * unit(rng);
        p.cloud.gateway_access_delay = 0.01 * unit(rng);
        p.mac.msg_size = sc % 2 ? 256 : 512;
        RunOptions o;
        o.keep_messages = true;
        const auto r = run_simulation(scenario, p, o);
        const double tx = tx_duration(p.mac);
        const double legs = 2 * tx + p.cloud.uplink_delay + p.cloud.processing_delay + p.cloud.downlink_delay +
                            p.cloud.gateway_access_delay;
        for (std::size_t k = 0; k < r.message_detail.size(); ++k) {
            const auto& m = r.message_detail[k];
            if (m.targets.size() != 1 || std::isnan(m.delivered_at[0])) {
                ++missing;
                continue;
            }
            const double expect = legs + (k == 0 ? p.cloud.deploy_delay : 0.0);
            worst = std::max(worst, std::abs(m.delivered_at[0] - m.created_at - expect));
            ++checked;
        }
    }
    report(9, "cloud delay additivity", missing == 0 && checked == 100 && worst <= 1e-9,
           fmt::format("{} messages over 50 scenarios, {} undelivered, worst |measured - leg sum| = {:.3g} s", checked,
                       missing, worst));
}

// ---------------------------------------------------------------------------
// Criterion 10: degenerate maps

void criterion_10(int seeds) {
    // A row of cubicles: walls between neighbours, each car parked next to its own bus.
    std::vector<Point> cars, buses;
    std::vector<Obstacle> walls;
    constexpr int kCells = 20;
    for (int i = 0; i < kCells; ++i) {
        cars.push_back({i * 100.0, 0.0});
        buses.push_back({i * 100.0, 40.0});
        if (i + 1 < kCells) walls.emplace_back(Point{i * 100.0 + 48.0, -100.0}, Point{i * 100.0 + 52.0, 100.0});
    }
    const auto dark = testing::static_scenario(cars, buses, walls, {}, 250.0);
    std::size_t clear_pairs = 0;
    for (int i = 0; i < kCells; ++i)
        for (int j = i + 1; j < kCells; ++j)
            clear_pairs += classify_link(cars[i], cars[j], walls, LinkModel{}) != RegionClass::Shadowed &&
                           classify_link(cars[i], cars[j], walls, LinkModel{}) != RegionClass::OutOfRange;
    double clbp = 0.0, hybrid = 0.0;
    for (int s = 1; s <= seeds; ++s) {
        SimParams p;
        p.seed = static_cast<std::uint64_t>(s);
        p.workload.target_radius = 150.0;  // each car's targets sit next to it, so gateways can cover them all
        p.protocol.kind = ProtocolKind::ClbpLike;
        clbp += *run_simulation(dark, p).summary.delivery_probability;
        p.protocol.kind = ProtocolKind::HybridVehcloud;
        hybrid += *run_simulation(dark, p).summary.delivery_probability;
    }
    clbp /= seeds;
    hybrid /= seeds;

    ScenarioConfig open = parse_config("");
    open.grid->building_fraction = 0.0;
    std::uint64_t multihop = 0, total = 0;
    for (int s = 1; s <= seeds; ++s) {
        open.sim.seed = static_cast<std::uint64_t>(s);
        const auto r = run_simulation(build_scenario(open), open.sim);
        multihop += r.initial_modes[1] + r.initial_modes[2];
        total += r.messages;
    }
    const double share = static_cast<double>(multihop) / static_cast<double>(total);
    report(10, "degenerate maps", clear_pairs == 0 && clbp < 0.05 && hybrid > 0.8 && share >= 0.99,
           fmt::format("all-shadowed row ({} clear car pairs): CLBP-like {:.4f} (< 0.05), Hybrid {:.4f} (> 0.8); "
                       "obstacle-free grid: multi-hop for {}/{} originations ({:.2f}%, need 99%)",
                       clear_pairs, clbp, hybrid, multihop, total, 100 * share));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    int n_seeds = 20;
    std::string counts_arg = "50,100,150,200,250,300,350,400,450";
    int jobs = 1;
#ifdef _OPENMP
    jobs = omp_get_num_procs();
#endif
    std::string out = "acceptance-out";
    bool keep = false;
    app.add_option("--seeds", n_seeds, "Seeds per sweep cell (1..N)")->check(CLI::PositiveNumber);
    app.add_option("--counts", counts_arg, "Vehicle counts for the sweep");
    app.add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Directory for sweep outputs");
    app.add_flag("--keep-runs", keep, "Keep every per-run directory");
    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<std::uint32_t> counts;
        std::stringstream ss(counts_arg);
        for (std::string tok; std::getline(ss, tok, ',');)
            if (!tok.empty()) counts.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
        if (counts.size() < 2) throw std::runtime_error("--counts needs at least two values");
        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
        std::iota(seeds.begin(), seeds.end(), 1);

        const auto t0 = Clock::now();
        criterion_6();
        criterion_7();
        criterion_9();
        criterion_10(3);

        const ScenarioConfig base = parse_config("");
        std::cerr << fmt::format("sweep: 4 protocols x {} counts x {} seeds, {} jobs\n", counts.size(), seeds.size(), jobs);
        const auto d = run_sweep(base, counts, seeds, jobs, out, keep);
        std::size_t errors = 0;
        for (const auto& o : d.outcomes) errors += !o.summary;
        if (errors) std::cerr << fmt::format("{} runs failed\n", errors);
        criterion_1(d);
        criterion_2(d);
        criterion_3(d);
        criterion_4(d);
        criterion_5(d);
        criterion_8(d);
        std::cout << fmt::format("{} passed, {} failed ({:.0f} s); sweep tables in {}\n", passed, failed,
                                 seconds_since(t0), out);
    } catch (const std::exception& e) {
        std::cerr << "acceptance: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
