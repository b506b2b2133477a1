// Serial vs OpenMP timings for the link kernels and for a small sweep.
//
//   bench_kernels [n_points] [repeats]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "vanet/config.hpp"
#include "vanet/link_kernels.hpp"
#include "vanet/mobility.hpp"
#include "vanet/sweep.hpp"

using namespace vanet;

namespace {

template <typename F>
double best_of(int repeats, F&& f) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 500;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::cout << fmt::format("threads={} points={} repeats={}\n", threads, n, repeats);

    GridSpec spec;
    const auto world = generate_grid_scenario(spec, 7);
    const ObstacleMap map(world.obstacles);
    const LinkModel lm;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, spec.extent());
    std::vector<Point> pts;
    while (pts.size() < n) {
        const Point p{u(rng), u(rng)};
        if (!map.inside_any(p)) pts.push_back(p);
    }

    std::vector<RegionClass> a, b;
    const double ts = best_of(repeats, [&] { a = link_matrix_serial(pts, map, lm); });
    const double tp = best_of(repeats, [&] { b = link_matrix_omp(pts, map, lm); });
    std::cout << fmt::format("link_matrix  serial {:.4f} s  omp {:.4f} s  speedup {:.2f}  identical={}\n", ts,
                             tp, ts / tp, a == b);

    std::vector<RegionClass> ra(n), rb(n);
    const double rs = best_of(repeats * 20, [&] { classify_row_serial(0, pts[0], pts, map, lm, ra); });
    const double rp = best_of(repeats * 20, [&] { classify_row_omp(0, pts[0], pts, map, lm, rb); });
    std::cout << fmt::format("classify_row serial {:.6f} s  omp {:.6f} s  speedup {:.2f}  identical={}\n", rs,
                             rp, rs / rp, ra == rb);

    ScenarioConfig base = parse_config("");
    base.sim.duration = 20.0;
    base.sim.drain = 2.0;
    const std::vector<ProtocolKind> protos{ProtocolKind::HybridVehcloud, ProtocolKind::ClbpLike};
    const std::vector<std::uint32_t> counts{100, 200};
    const std::vector<std::uint64_t> seeds{1, 2};
    const auto jobs = sweep_jobs(protos, counts, seeds);
    const JobFn fn = [&](const RunJob& j) { return run_job(base, j); };
    std::vector<JobOutcome> sa, sb;
    const double ss = best_of(1, [&] { sa = run_jobs_serial(jobs, fn); });
    const double sp = best_of(1, [&] { sb = run_jobs_parallel(jobs, fn, threads); });
    bool same = sa.size() == sb.size();
    for (std::size_t i = 0; same && i < sa.size(); ++i)
        same = sa[i].summary && sb[i].summary && sa[i].summary->avg_throughput == sb[i].summary->avg_throughput &&
               sa[i].summary->collision_ratio == sb[i].summary->collision_ratio;
    std::cout << fmt::format("sweep ({} runs) serial {:.3f} s  omp {:.3f} s  speedup {:.2f}  identical={}\n",
                             jobs.size(), ss, sp, ss / sp, same);
    return 0;
}
