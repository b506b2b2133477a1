#include <random>

#include <doctest.h>

#include "support.hpp"
#include "vanet/errors.hpp"
#include "vanet/link_kernels.hpp"

using namespace vanet;
using testing::sampled_signed_clearance;

namespace {

const LinkModel kLm{};

Obstacle rect(double x0, double y0, double x1, double y1) { return Obstacle({x0, y0}, {x1, y1}); }

RegionClass classify(Point a, Point b, std::initializer_list<Obstacle> obs, LinkModel lm = kLm) {
    const std::vector<Obstacle> v(obs);
    return classify_link(a, b, v, lm);
}

Obstacle random_rect(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(0.0, 400.0), size(1.0, 80.0);
    const double x = pos(rng), y = pos(rng);
    return rect(x, y, x + size(rng), y + size(rng));
}

}  // namespace

TEST_CASE("segment_blocked examples") {
    CHECK(segment_blocked({0, 0}, {100, 0}, rect(40, -10, 60, 10)));
    CHECK_FALSE(segment_blocked({0, 0}, {100, 0}, rect(200, 200, 210, 210)));
    CHECK_FALSE(segment_blocked({0, 0}, {0, 100}, rect(10, 10, 20, 20)));
    CHECK_THROWS_AS(segment_blocked({1, 1}, {1, 1}, rect(0, 0, 2, 2)), InvalidInput);
}

TEST_CASE("min_clearance examples") {
    CHECK(min_clearance({0, 0}, {100, 0}, rect(40, 5, 60, 15)) == doctest::Approx(5.0));
    CHECK(min_clearance({0, 0}, {100, 0}, rect(40, 100, 60, 110)) == doctest::Approx(100.0));
    CHECK(min_clearance({0, 0}, {1, 0}, rect(1000, 1000, 1001, 1001)) >= 1000.0);
    CHECK(min_clearance({0, 0}, {100, 0}, rect(40, -10, 60, 10)) == 0.0);
}

TEST_CASE("min_clearance matches the sampled distance oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (int i = 0; i < 300; ++i) {
        const Obstacle o = random_rect(rng);
        const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const double oracle = std::max(0.0, sampled_signed_clearance(a, b, o.min_corner(), o.max_corner()));
        CHECK(min_clearance(a, b, o) == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("classify_link examples") {
    CHECK(classify({0, 0}, {400, 0}, {}) == RegionClass::OutOfRange);
    CHECK(classify({0, 0}, {100, 0}, {}) == RegionClass::Clear);
    for (const double d : {0.0, 1.0, 5.0, 20.0})
        CHECK(classify({0, 0}, {100, 0}, {rect(40, -10, 60, 10)}, {300.0, d}) == RegionClass::Shadowed);
    CHECK(classify({0, 0}, {100, 0}, {rect(40, 3, 60, 13)}, {300.0, 5.0}) == RegionClass::Shadowed);
    CHECK(classify({0, 0}, {100, 0}, {rect(40, 6, 60, 13)}, {300.0, 5.0}) == RegionClass::Clear);
    // an endpoint inside a building
    CHECK(classify({50, 0}, {100, 50}, {rect(40, -10, 60, 10)}) == RegionClass::Shadowed);
}

TEST_CASE("shadow_fraction examples") {
    const std::vector<Obstacle> none;
    CHECK(shadow_fraction({0, 0}, {}, none, kLm) == 1.0);
    const std::vector<Point> four{{100, 0}, {-100, 0}, {0, 100}, {0, -100}};
    CHECK(shadow_fraction({0, 0}, four, none, kLm) == 0.0);
    const std::vector<Obstacle> three{rect(40, -10, 60, 10), rect(-60, -10, -40, 10), rect(-10, 40, 10, 60)};
    CHECK(shadow_fraction({0, 0}, four, three, kLm) == 0.75);
    // out-of-range neighbors do not count
    const std::vector<Point> far{{1000, 0}};
    CHECK(shadow_fraction({0, 0}, far, none, kLm) == 1.0);
}

TEST_CASE("classify_link is symmetric") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (int i = 0; i < 2000; ++i) {
        std::vector<Obstacle> obs;
        for (int k = 0; k < 3; ++k) obs.push_back(random_rect(rng));
        const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
        CHECK(classify_link(a, b, obs, kLm) == classify_link(b, a, obs, kLm));
    }
}

TEST_CASE("adding obstacles or widening delta never clears a shadowed link") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 500.0), d(0.0, 20.0);
    for (int i = 0; i < 2000; ++i) {
        std::vector<Obstacle> obs{random_rect(rng)};
        const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const LinkModel lm{300.0, d(rng)};
        const auto before = classify_link(a, b, obs, lm);
        obs.push_back(random_rect(rng));
        const auto more = classify_link(a, b, obs, lm);
        const auto wider = classify_link(a, b, obs, LinkModel{300.0, lm.clearance_delta + d(rng)});
        if (before == RegionClass::Shadowed) CHECK(more == RegionClass::Shadowed);
        if (more == RegionClass::Shadowed) CHECK(wider == RegionClass::Shadowed);
    }
}

TEST_CASE("empty obstacle set is exactly the disk test") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-400.0, 400.0);
    const std::vector<Obstacle> none;
    for (int i = 0; i < 5000; ++i) {
        const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const bool in = std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)) <= kLm.t_base;
        CHECK(classify_link(a, b, none, kLm) == (in ? RegionClass::Clear : RegionClass::OutOfRange));
    }
    CHECK(classify_link({0, 0}, {300, 0}, none, kLm) == RegionClass::Clear);
}

TEST_CASE("segment_blocked agrees with the dense-sampling oracle") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    int decided = 0;
    for (int i = 0; i < 1000; ++i) {
        const Obstacle o = random_rect(rng);
        const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const double m = sampled_signed_clearance(a, b, o.min_corner(), o.max_corner());
        if (std::abs(m) <= 1e-6) continue;
        ++decided;
        CHECK(segment_blocked(a, b, o) == (m < 0.0));
    }
    CHECK(decided > 950);
}

TEST_CASE("ObstacleMap::classify equals the full scan") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    for (const std::size_t n : {std::size_t{10}, std::size_t{200}}) {
        std::vector<Obstacle> obs;
        for (std::size_t k = 0; k < n; ++k) {
            const double x = u(rng), y = u(rng);
            obs.push_back(rect(x, y, x + 30.0, y + 20.0));
        }
        const ObstacleMap map(obs);
        for (int i = 0; i < 3000; ++i) {
            const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
            CHECK(map.classify(a, b, kLm) == classify_link(a, b, obs, kLm));
        }
    }
}

TEST_CASE("OpenMP kernels match their serial references") {
    GridSpec spec;
    const auto world = generate_grid_scenario(spec, 3);
    const ObstacleMap map(world.obstacles);
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(0.0, spec.extent());
    std::vector<Point> pts;
    while (pts.size() < 300) {
        const Point p{u(rng), u(rng)};
        if (!map.inside_any(p)) pts.push_back(p);
    }
    pts.push_back(pts[0]);  // co-located pair
    const auto a = link_matrix_serial(pts, map, kLm);
    const auto b = link_matrix_omp(pts, map, kLm);
    CHECK(a == b);
    const std::size_t n = pts.size();
    CHECK(a[0 * n + (n - 1)] == RegionClass::Clear);
    CHECK(a[0] == RegionClass::OutOfRange);
    for (std::size_t i = 0; i < n; i += 37)
        for (std::size_t j = 0; j < n; ++j) CHECK(a[i * n + j] == a[j * n + i]);

    std::vector<RegionClass> ra(n), rb(n);
    classify_row_serial(5, pts[5], pts, map, kLm, ra);
    classify_row_omp(5, pts[5], pts, map, kLm, rb);
    CHECK(ra == rb);
    for (std::size_t j = 0; j < n; ++j) CHECK(ra[j] == a[5 * n + j]);
    const auto f = shadow_fractions(a, n);
    for (const double x : f) CHECK((x >= 0.0 && x <= 1.0));
}
