#include "vanet/link_kernels.hpp"

#include <cstdint>

#include "vanet/errors.hpp"

namespace vanet {

RegionClass classify_pair(Point a, Point b, const ObstacleMap& map, const LinkModel& lm) {
    if (a == b) return RegionClass::Clear;
    return map.classify(a, b, lm);
}

void classify_row_serial(std::size_t self, Point src, std::span<const Point> points,
                         const ObstacleMap& map, const LinkModel& lm, std::span<RegionClass> out) {
    if (out.size() != points.size()) throw InvalidInput("row output size mismatch");
    for (std::size_t j = 0; j < points.size(); ++j)
        out[j] = j == self ? RegionClass::OutOfRange : classify_pair(src, points[j], map, lm);
}

void classify_row_omp(std::size_t self, Point src, std::span<const Point> points,
                      const ObstacleMap& map, const LinkModel& lm, std::span<RegionClass> out) {
    if (out.size() != points.size()) throw InvalidInput("row output size mismatch");
    const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < n; ++j) {
        const auto u = static_cast<std::size_t>(j);
        out[u] = u == self ? RegionClass::OutOfRange : classify_pair(src, points[u], map, lm);
    }
}

std::vector<RegionClass> link_matrix_serial(std::span<const Point> points, const ObstacleMap& map,
                                            const LinkModel& lm) {
    const std::size_t n = points.size();
    std::vector<RegionClass> m(n * n, RegionClass::OutOfRange);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const RegionClass c = classify_pair(points[i], points[j], map, lm);
            m[i * n + j] = c;
            m[j * n + i] = c;
        }
    }
    return m;
}

std::vector<RegionClass> link_matrix_omp(std::span<const Point> points, const ObstacleMap& map,
                                         const LinkModel& lm) {
    const std::size_t n = points.size();
    std::vector<RegionClass> m(n * n, RegionClass::OutOfRange);
    const auto rows = static_cast<std::int64_t>(n);
    // Triangular work per row; dynamic scheduling evens it out.
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t r = 0; r < rows; ++r) {
        const auto i = static_cast<std::size_t>(r);
        for (std::size_t j = i + 1; j < n; ++j) {
            const RegionClass c = classify_pair(points[i], points[j], map, lm);
            m[i * n + j] = c;
            m[j * n + i] = c;
        }
    }
    return m;
}

std::vector<double> shadow_fractions(std::span<const RegionClass> matrix, std::size_t n) {
    if (matrix.size() != n * n) throw InvalidInput("matrix size mismatch");
    std::vector<double> out(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t in_range = 0, shadowed = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const RegionClass c = matrix[i * n + j];
            if (c == RegionClass::OutOfRange) continue;
            ++in_range;
            if (c == RegionClass::Shadowed) ++shadowed;
        }
        if (in_range > 0) out[i] = static_cast<double>(shadowed) / static_cast<double>(in_range);
    }
    return out;
}

}  // namespace vanet
