#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "smn/dataset.hpp"
#include "smn/matrix.hpp"

namespace smn {

/// Segment-count equalization target; nullopt = max S over training clips.
struct EqualizationConfig {
  std::optional<std::size_t> target_segments;
};

// Resolves the target against the training split. A fixed target below the
// observed training maximum is rejected (repetition only, no truncation).
std::size_t resolve_target(const Dataset& ds, const EqualizationConfig& cfg);

// Cyclic whole-row repetition up to `target` rows, flattened row-major.
std::vector<double> equalize(const ClipRecord& clip, std::size_t target);

struct PcaModel {
  std::vector<double> mean;               // length D
  Matrix components;                      // p' x D, rows orthonormal
  std::vector<double> explained_variance; // p', non-increasing

  std::size_t num_components() const { return components.rows; }
  std::size_t input_dim() const { return mean.size(); }
};

// Exact dense factorization of the training covariance (Gram-matrix route when
// samples < dimensions). Keeps min(requested, rank) components. Deterministic
// sign convention: each component's largest-magnitude entry is positive.
PcaModel fit_pca(const Matrix& train_vectors, std::size_t requested_components);

std::vector<double> project(const PcaModel& model, std::span<const double> v);

// SMNP codec (float64 LE payload).
void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace smn
