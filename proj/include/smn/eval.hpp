#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smn/classify.hpp"
#include "smn/dataset.hpp"
#include "smn/fusion.hpp"
#include "smn/partition.hpp"
#include "smn/preprocess.hpp"

namespace smn {

enum class VideoAgg { Majority, ScoreSum };

struct EvalOptions {
  std::vector<FusionMode> modes;            // defaults to raw, mean, min
  FusionRule confusion_rule = FusionRule::MeanWeighted;
  VideoAgg video_agg = VideoAgg::Majority;
  std::size_t workers = 1;
};

struct ModeAccuracy {
  double clip = 0.0;
  double video = 0.0;
};

struct EvalReport {
  std::vector<double> per_stream_accuracy;
  std::map<std::string, ModeAccuracy> fused;   // keyed by fusion rule name
  std::string confusion_rule;
  std::vector<std::vector<std::size_t>> confusion;  // true x predicted
  std::optional<double> baseline_monolithic_accuracy;
  // per-clip decisions for the audit CSV: (clip_id, rule, predicted, true)
  std::vector<std::tuple<std::string, std::string, int, int>> decisions;
  std::map<std::string, std::string> metadata;

  std::string to_json() const;
  std::string to_table() const;
};

struct BenchReport {
  std::int64_t total_frames = 0;
  double online_seconds = 0.0;
  double fps = 0.0;
  std::map<std::string, double> stage_seconds;  // equalize/project/predict/fuse
  std::map<std::string, double> stage_shares;
  std::size_t repetitions = 0;
  std::size_t workers = 1;
  std::string fusion;
  std::string note;

  std::string to_json() const;
};

// Clip-level fused accuracy per mode, per-stream roster-restricted accuracies,
// a confusion matrix for the chosen rule, and video-level accuracies
// aggregated by clip majority (summed-score tie-break) or score sum.
EvalReport evaluate(const Dataset& ds, const StreamPlan& plan,
                    const std::vector<TrainedStream>& streams, const PcaModel& pca,
                    std::size_t eq_target, const EvalOptions& opts = {});

// Per-class mean share (percent) of same-class neighbors among each member's
// knn_k nearest training neighbors.
std::map<int, double> ann_quality(const Dataset& ds, const PcaModel& pca, std::size_t eq_target,
                                  const std::vector<int>& class_ids, std::size_t knn_k);

// Times the online path (equalize -> project -> N predicts -> fuse) over the
// test split, best of `repetitions`. Feature extraction is outside the
// measured path by construction.
BenchReport bench(const Dataset& ds, const StreamPlan& plan,
                  const std::vector<TrainedStream>& streams, const PcaModel& pca,
                  std::size_t eq_target, const FusionMode& mode, std::size_t repetitions = 3,
                  std::size_t workers = 1);

// One classifier over all classes, evaluated through the same fusion path via
// a single-stream plan. cfg.seed is used as-is.
double baseline_monolithic(const Dataset& ds, const PcaModel& pca, std::size_t eq_target,
                           const ClassifierConfig& cfg, const FusionMode& mode);

void write_confusion_csv(const EvalReport& report, const std::filesystem::path& path);
void write_decisions_csv(const EvalReport& report, const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace smn
