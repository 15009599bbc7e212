#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smn/classify.hpp"
#include "smn/clustering.hpp"
#include "smn/dataset.hpp"
#include "smn/eval.hpp"
#include "smn/fusion.hpp"
#include "smn/partition.hpp"
#include "smn/preprocess.hpp"

namespace smn {

/// One reproducible run: every stage derives its seed from `seed` by a fixed
/// stage tag, so stages can be re-run in isolation.
struct RunConfig {
  std::size_t num_streams = 4;
  std::size_t pca_components = 1000;
  std::optional<std::size_t> kmeans_k;        // default floor(M/N)
  std::size_t kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  KmeansConfig::Init kmeans_init = KmeansConfig::Init::KmeansPlusPlus;
  double subsample_fraction = 1.0;
  std::size_t knn_k = 100;
  std::optional<std::size_t> target_segments;  // nullopt = auto
  AssignmentMode assignment = AssignmentMode::CvDp;
  ClassifierConfig classifier;
  std::vector<FusionMode> fusion_modes;        // empty = raw, mean, min
  FusionRule primary_rule = FusionRule::MeanWeighted;
  VideoAgg video_agg = VideoAgg::Majority;
  bool with_baseline = false;
  std::size_t workers = 1;
  std::size_t bench_repetitions = 3;
  std::uint64_t seed = 0;
};

struct PlanArtifacts {
  std::size_t eq_target = 0;
  PcaModel pca;
  ClusterAssignment clusters;
  StreamPlan plan;
  std::map<std::string, std::vector<double>> reduced;  // all clips, train + test
};

// equalize -> fit PCA on the training split -> project -> subsample ->
// k-means -> consensus voting + dealing.
PlanArtifacts run_plan(const Dataset& ds, const RunConfig& cfg);

// Trains the N streams (fan-out bounded by cfg.workers); deterministic
// regardless of worker count.
std::vector<TrainedStream> run_train(const Dataset& ds, const PlanArtifacts& art,
                                     const RunConfig& cfg);

EvalReport run_eval(const Dataset& ds, const PlanArtifacts& art,
                    const std::vector<TrainedStream>& streams, const RunConfig& cfg);

// Artifact layout inside a run directory: plan.json, pca.smnp, meta.json,
// clusters.csv, centroids.smnc, models/.
void save_plan_artifacts(const PlanArtifacts& art, const RunConfig& cfg,
                         const std::filesystem::path& dir);
PlanArtifacts load_plan_artifacts(const Dataset& ds, const std::filesystem::path& dir,
                                  RunConfig& cfg);

void save_streams(const std::vector<TrainedStream>& streams, const std::filesystem::path& dir);
std::vector<TrainedStream> load_streams(const std::filesystem::path& dir,
                                        std::size_t num_streams);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace smn
