#pragma once

#include <cstddef>
#include <vector>

#include "smn/matrix.hpp"

namespace smn {

// Exact brute-force k nearest rows of `points` to `query`, ascending by
// (squared distance, row index). k is clamped to the available row count.
// `exclude` (>= 0) skips that row, for self-queries.
std::vector<std::size_t> knn_indices(const Matrix& points, const double* query, std::size_t k,
                                     std::ptrdiff_t exclude = -1);

double min_squared_distance(const Matrix& points, const double* query);

}  // namespace smn
