#pragma once

// Batch link classification. Each kernel has a serial reference and an
// OpenMP variant; the two must produce identical output for any input.
//
// Conventions shared by all kernels:
//   - a node never links to itself: diagonal entries are OutOfRange;
//   - two distinct nodes at the same coordinates are Clear (co-located).

#include <span>
#include <vector>

#include "vanet/geometry.hpp"

namespace vanet {

RegionClass classify_pair(Point a, Point b, const ObstacleMap& map, const LinkModel& lm);

/// out[j] = class of link src -> points[j]. `self` (if < points.size()) gets OutOfRange.
void classify_row_serial(std::size_t self, Point src, std::span<const Point> points,
                         const ObstacleMap& map, const LinkModel& lm, std::span<RegionClass> out);
void classify_row_omp(std::size_t self, Point src, std::span<const Point> points,
                      const ObstacleMap& map, const LinkModel& lm, std::span<RegionClass> out);

/// Dense row-major n x n matrix of link classes (symmetric).
std::vector<RegionClass> link_matrix_serial(std::span<const Point> points, const ObstacleMap& map,
                                            const LinkModel& lm);
std::vector<RegionClass> link_matrix_omp(std::span<const Point> points, const ObstacleMap& map,
                                         const LinkModel& lm);

/// Per-node shadow fraction over every other node, using the matrix.
std::vector<double> shadow_fractions(std::span<const RegionClass> matrix, std::size_t n);

}  // namespace vanet
