#pragma once

#include <span>
#include <string>
#include <vector>

#include "smn/classify.hpp"
#include "smn/partition.hpp"

namespace smn {

enum class FusionRule { RawMax, MeanWeighted, MinWeighted };
enum class MinVariant { WeightedProduct, PureMinDistance };

const char* fusion_rule_name(FusionRule r);
FusionRule parse_fusion_rule(const std::string& name);

struct FusionMode {
  FusionRule rule = FusionRule::MeanWeighted;
  MinVariant w_min_variant = MinVariant::WeightedProduct;
  double epsilon = 1e-9;  // floor for inverse-distance weights
};

struct ScoreEntry {
  int class_id = 0;
  double raw_prob = 0.0;
  double weight = 1.0;
  double score = 0.0;
};

struct FusionDecision {
  int predicted_class = -1;
  std::vector<std::pair<int, double>> per_stream_winner;  // (class, deciding score)
  std::vector<ScoreEntry> breakdown;
};

// Winner = the class with the maximum raw probability over all streams' own
// maxima; ties to the lowest class id.
FusionDecision fuse_raw(const std::vector<std::vector<double>>& stream_probs,
                        const StreamPlan& plan);

// Every roster class scored as prob / max(eps, ||test - class_mean||); global
// maximum wins.
FusionDecision fuse_mean_weighted(const std::vector<std::vector<double>>& stream_probs,
                                  const StreamPlan& plan,
                                  const std::vector<TrainedStream>& streams,
                                  std::span<const double> test_vector, double epsilon = 1e-9);

// Per-stream winners by raw probability, then re-scored by the minimum
// distance to any banked training member: prob / max(eps, d) for the weighted
// product variant, or plain argmin d for the pure variant (its deciding score
// is recorded as -d so larger is still better).
FusionDecision fuse_min_weighted(const std::vector<std::vector<double>>& stream_probs,
                                 const StreamPlan& plan,
                                 const std::vector<TrainedStream>& streams,
                                 std::span<const double> test_vector,
                                 MinVariant variant = MinVariant::WeightedProduct,
                                 double epsilon = 1e-9);

FusionDecision fuse(const FusionMode& mode, const std::vector<std::vector<double>>& stream_probs,
                    const StreamPlan& plan, const std::vector<TrainedStream>& streams,
                    std::span<const double> test_vector);

}  // namespace smn
