#include "smn/knn.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "smn/kernels.hpp"

namespace smn {

std::vector<std::size_t> knn_indices(const Matrix& points, const double* query, std::size_t k,
                                     std::ptrdiff_t exclude) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(points.rows);
  for (std::size_t i = 0; i < points.rows; ++i) {
    if (exclude >= 0 && i == static_cast<std::size_t>(exclude)) continue;
    scored.emplace_back(kern::squared_distance(points.row(i), query, points.cols), i);
  }
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

double min_squared_distance(const Matrix& points, const double* query) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.rows; ++i)
    best = std::min(best, kern::squared_distance(points.row(i), query, points.cols));
  return best;
}

}  // namespace smn
