#include "smn/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "smn/error.hpp"
#include "smn/kernels.hpp"
#include "smn/knn.hpp"

namespace smn {

const char* fusion_rule_name(FusionRule r) {
  switch (r) {
    case FusionRule::RawMax: return "raw";
    case FusionRule::MeanWeighted: return "mean";
    case FusionRule::MinWeighted: return "min";
  }
  return "?";
}

FusionRule parse_fusion_rule(const std::string& name) {
  if (name == "raw") return FusionRule::RawMax;
  if (name == "mean") return FusionRule::MeanWeighted;
  if (name == "min") return FusionRule::MinWeighted;
  fail(Err::InvalidSpec, "unknown fusion rule '" + name + "'");
}

namespace {

void check_rosters(const std::vector<std::vector<double>>& probs, const StreamPlan& plan) {
  if (probs.size() != plan.num_streams)
    fail(Err::RosterMismatch, "expected " + std::to_string(plan.num_streams) +
                                  " probability vectors, got " + std::to_string(probs.size()));
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (probs[s].size() != plan.stream_rosters[s].size())
      fail(Err::RosterMismatch, "stream " + std::to_string(s) + " probability length mismatch");
  }
}

// argmax within one stream; ties keep the lowest roster index
std::size_t roster_argmax(const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j)
    if (probs[j] > probs[best]) best = j;
  return best;
}

// global winner among scored entries; ties to the lowest class id
int pick_global(const std::vector<ScoreEntry>& entries) {
  int best_class = -1;
  double best_score = 0.0;
  for (const auto& e : entries) {
    if (best_class < 0 || e.score > best_score ||
        (e.score == best_score && e.class_id < best_class)) {
      best_class = e.class_id;
      best_score = e.score;
    }
  }
  return best_class;
}

}  // namespace

FusionDecision fuse_raw(const std::vector<std::vector<double>>& stream_probs,
                        const StreamPlan& plan) {
  check_rosters(stream_probs, plan);
  FusionDecision d;
  for (std::size_t s = 0; s < stream_probs.size(); ++s) {
    if (stream_probs[s].empty()) fail(Err::RosterMismatch, "empty stream probabilities");
    for (std::size_t j = 0; j < stream_probs[s].size(); ++j) {
      d.breakdown.push_back(
          {plan.stream_rosters[s][j], stream_probs[s][j], 1.0, stream_probs[s][j]});
    }
    const std::size_t w = roster_argmax(stream_probs[s]);
    d.per_stream_winner.emplace_back(plan.stream_rosters[s][w], stream_probs[s][w]);
  }
  d.predicted_class = pick_global(d.breakdown);
  return d;
}

FusionDecision fuse_mean_weighted(const std::vector<std::vector<double>>& stream_probs,
                                  const StreamPlan& plan,
                                  const std::vector<TrainedStream>& streams,
                                  std::span<const double> test_vector, double epsilon) {
  check_rosters(stream_probs, plan);
  if (streams.size() != plan.num_streams) fail(Err::UntrainedStream, "missing trained streams");
  FusionDecision d;
  for (std::size_t s = 0; s < stream_probs.size(); ++s) {
    const auto& ts = streams[s];
    if (ts.class_means.size() != plan.stream_rosters[s].size())
      fail(Err::MissingClassMean, "stream " + std::to_string(s) + " lacks class means");
    int stream_best = -1;
    double stream_best_score = 0.0;
    for (std::size_t j = 0; j < stream_probs[s].size(); ++j) {
      const auto& mean = ts.class_means[j];
      if (mean.size() != test_vector.size())
        fail(Err::DimensionMismatch, "class mean dimension mismatch");
      const double dist =
          std::sqrt(kern::squared_distance(mean.data(), test_vector.data(), mean.size()));
      const double w = 1.0 / std::max(epsilon, dist);
      const double score = stream_probs[s][j] * w;
      d.breakdown.push_back({plan.stream_rosters[s][j], stream_probs[s][j], w, score});
      if (stream_best < 0 || score > stream_best_score) {
        stream_best = static_cast<int>(j);
        stream_best_score = score;
      }
    }
    d.per_stream_winner.emplace_back(plan.stream_rosters[s][static_cast<std::size_t>(stream_best)],
                                     stream_best_score);
  }
  d.predicted_class = pick_global(d.breakdown);
  return d;
}

FusionDecision fuse_min_weighted(const std::vector<std::vector<double>>& stream_probs,
                                 const StreamPlan& plan,
                                 const std::vector<TrainedStream>& streams,
                                 std::span<const double> test_vector, MinVariant variant,
                                 double epsilon) {
  check_rosters(stream_probs, plan);
  if (streams.size() != plan.num_streams) fail(Err::UntrainedStream, "missing trained streams");
  FusionDecision d;
  for (std::size_t s = 0; s < stream_probs.size(); ++s) {
    const auto& ts = streams[s];
    const std::size_t w = roster_argmax(stream_probs[s]);  // winners by raw probability
    if (ts.member_bank.size() != plan.stream_rosters[s].size() || ts.member_bank[w].empty())
      fail(Err::MissingMemberBank, "stream " + std::to_string(s) + " lacks a member bank");
    if (ts.member_bank[w].cols != test_vector.size())
      fail(Err::DimensionMismatch, "member bank dimension mismatch");
    const double dist =
        std::sqrt(min_squared_distance(ts.member_bank[w], test_vector.data()));
    const double weight = 1.0 / std::max(epsilon, dist);
    const double prob = stream_probs[s][w];
    const double score = variant == MinVariant::WeightedProduct ? prob * weight : -dist;
    d.breakdown.push_back({plan.stream_rosters[s][w], prob, weight, score});
    d.per_stream_winner.emplace_back(plan.stream_rosters[s][w], score);
  }
  d.predicted_class = pick_global(d.breakdown);
  return d;
}

FusionDecision fuse(const FusionMode& mode, const std::vector<std::vector<double>>& stream_probs,
                    const StreamPlan& plan, const std::vector<TrainedStream>& streams,
                    std::span<const double> test_vector) {
  switch (mode.rule) {
    case FusionRule::RawMax:
      return fuse_raw(stream_probs, plan);
    case FusionRule::MeanWeighted:
      return fuse_mean_weighted(stream_probs, plan, streams, test_vector, mode.epsilon);
    case FusionRule::MinWeighted:
      return fuse_min_weighted(stream_probs, plan, streams, test_vector, mode.w_min_variant,
                               mode.epsilon);
  }
  fail(Err::InvalidSpec, "unreachable fusion rule");
}

}  // namespace smn
