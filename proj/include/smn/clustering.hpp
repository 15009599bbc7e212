#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "smn/dataset.hpp"
#include "smn/matrix.hpp"

namespace smn {

struct KmeansConfig {
  std::size_t k = 1;
  std::size_t max_iter = 300;
  double tol = 1e-6;  // max centroid movement convergence threshold
  std::uint64_t seed = 0;
  double subsample_fraction = 1.0;
  enum class Init { KmeansPlusPlus, Random } init = Init::KmeansPlusPlus;
};

struct KmeansResult {
  std::vector<int> labels;  // per input row
  Matrix centroids;         // k x p
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::vector<double> inertia_trace;  // SSE at each assignment step (non-increasing)
};

// Lloyd iterations from seeded k-means++ (or random) init. Ties to the lowest
// centroid id; empty clusters re-seeded from the point farthest from its
// centroid. Deterministic given (points, cfg).
KmeansResult run_kmeans(const Matrix& points, const KmeansConfig& cfg);

/// Clip-keyed clustering output.
struct ClusterAssignment {
  std::map<std::string, int> labels;       // clip_id -> cluster
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::vector<std::string> included_clips; // the subsampled clips actually clustered
  std::vector<double> inertia_trace;
};

ClusterAssignment assign_clusters(const Matrix& points, const std::vector<std::string>& clip_ids,
                                  const KmeansConfig& cfg);

// floor(M/N); the leftover classes are absorbed downstream by the dealing step.
std::size_t default_k(std::size_t num_classes, std::size_t num_streams);

// Per class, ceil(fraction * train count) clips chosen by seeded shuffle;
// returns indices into ds.clips, ascending.
std::vector<std::size_t> subsample_per_class(const Dataset& ds, double fraction,
                                             std::uint64_t seed);

// clip_id,cluster_id rows plus a centroid blob (magic SMNC, float64 payload).
void save_cluster_csv(const ClusterAssignment& ca, const std::filesystem::path& path);
void save_centroids(const Matrix& centroids, const std::filesystem::path& path);
Matrix load_centroids(const std::filesystem::path& path);

}  // namespace smn
