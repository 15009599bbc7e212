#include "smn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "smn/error.hpp"
#include "smn/knn.hpp"

namespace smn {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kBenchNote =
    "feature extraction is excluded from the measured path; in end-to-end systems "
    "it typically dominates online time (85-95%), so these fps figures are not "
    "comparable to full-pipeline throughput";

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::size_t> test_indices(const Dataset& ds) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.clips.size(); ++i)
    if (ds.clips[i].split == Split::Test) idx.push_back(i);
  return idx;
}

struct ClipResult {
  std::map<std::string, FusionDecision> by_rule;
};

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["per_stream_accuracy"] = per_stream_accuracy;
  json fused_j;
  for (const auto& [rule, acc] : fused)
    fused_j[rule] = {{"clip", acc.clip}, {"video", acc.video}};
  j["fused"] = fused_j;
  j["confusion_rule"] = confusion_rule;
  j["confusion"] = confusion;
  if (baseline_monolithic_accuracy)
    j["baseline_monolithic_accuracy"] = *baseline_monolithic_accuracy;
  else
    j["baseline_monolithic_accuracy"] = nullptr;
  j["metadata"] = metadata;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << "per-stream accuracy:";
  for (std::size_t s = 0; s < per_stream_accuracy.size(); ++s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " s%zu=%.4f", s, per_stream_accuracy[s]);
    os << buf;
  }
  os << "\nfusion   clip-acc  video-acc\n";
  for (const auto& [rule, acc] : fused) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s %.4f    %.4f\n", rule.c_str(), acc.clip, acc.video);
    os << buf;
  }
  if (baseline_monolithic_accuracy) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "baseline monolithic: %.4f\n", *baseline_monolithic_accuracy);
    os << buf;
  }
  return os.str();
}

std::string BenchReport::to_json() const {
  json j;
  j["total_frames"] = total_frames;
  j["online_seconds"] = online_seconds;
  j["fps"] = fps;
  j["stage_seconds"] = stage_seconds;
  j["stage_shares"] = stage_shares;
  j["repetitions"] = repetitions;
  j["workers"] = workers;
  j["fusion"] = fusion;
  j["note"] = note;
  return j.dump(2) + "\n";
}

EvalReport evaluate(const Dataset& ds, const StreamPlan& plan,
                    const std::vector<TrainedStream>& streams, const PcaModel& pca,
                    std::size_t eq_target, const EvalOptions& opts) {
  if (streams.size() != plan.num_streams)
    fail(Err::UntrainedStream, "expected " + std::to_string(plan.num_streams) + " trained streams");
  for (const auto& ts : streams)
    if (ts.params.empty()) fail(Err::UntrainedStream, "stream has no parameters");
  const auto tests = test_indices(ds);
  if (tests.empty()) fail(Err::EmptyTestSet, "dataset has no test clips");

  std::vector<FusionMode> modes = opts.modes;
  if (modes.empty()) {
    modes = {{FusionRule::RawMax}, {FusionRule::MeanWeighted}, {FusionRule::MinWeighted}};
  }

  // reduced vectors + fused decisions per test clip (index-addressed so a
  // worker split stays deterministic)
  std::vector<ClipResult> results(tests.size());
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      const auto& clip = ds.clips[tests[t]];
      const auto reduced = project(pca, equalize(clip, eq_target));
      std::vector<std::vector<double>> probs(streams.size());
      for (std::size_t s = 0; s < streams.size(); ++s)
        probs[s] = predict_proba(streams[s], reduced);
      for (const auto& mode : modes)
        results[t].by_rule[fusion_rule_name(mode.rule)] =
            fuse(mode, probs, plan, streams, reduced);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, opts.workers);
  if (workers == 1 || tests.size() < 2 * workers) {
    run_range(0, tests.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (tests.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(tests.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  EvalReport report;
  report.confusion_rule = fusion_rule_name(opts.confusion_rule);
  const std::size_t m = ds.num_classes();
  report.confusion.assign(m, std::vector<std::size_t>(m, 0));

  for (const auto& mode : modes) {
    const std::string rule = fusion_rule_name(mode.rule);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const auto& clip = ds.clips[tests[t]];
      const auto& decision = results[t].by_rule.at(rule);
      if (decision.predicted_class == clip.class_id) ++hits;
      if (mode.rule == opts.confusion_rule)
        report.confusion[static_cast<std::size_t>(clip.class_id)]
                        [static_cast<std::size_t>(decision.predicted_class)]++;
      report.decisions.emplace_back(clip.clip_id, rule, decision.predicted_class, clip.class_id);
    }
    ModeAccuracy acc;
    acc.clip = static_cast<double>(hits) / static_cast<double>(tests.size());

    // video level: aggregate clip decisions per video_id
    std::map<std::string, std::vector<std::size_t>> videos;
    for (std::size_t t = 0; t < tests.size(); ++t)
      videos[ds.clips[tests[t]].video_id].push_back(t);
    std::size_t video_hits = 0;
    for (const auto& [video_id, members] : videos) {
      std::map<int, std::size_t> tallies;
      std::map<int, double> scores;
      for (std::size_t t : members) {
        const auto& decision = results[t].by_rule.at(rule);
        tallies[decision.predicted_class]++;
        if (opts.video_agg == VideoAgg::Majority) {
          // summed winning score as the tie-break signal
          for (const auto& [cls, sc] : decision.per_stream_winner)
            if (cls == decision.predicted_class) scores[cls] += sc;
        } else {
          for (const auto& e : decision.breakdown) scores[e.class_id] += e.score;
        }
      }
      int chosen = -1;
      if (opts.video_agg == VideoAgg::Majority) {
        std::size_t best_count = 0;
        double best_score = 0.0;
        for (const auto& [cls, count] : tallies) {  // ascending class id
          const double sc = scores.count(cls) ? scores.at(cls) : 0.0;
          if (chosen < 0 || count > best_count || (count == best_count && sc > best_score)) {
            chosen = cls;
            best_count = count;
            best_score = sc;
          }
        }
      } else {
        double best_score = 0.0;
        for (const auto& [cls, sc] : scores) {
          if (chosen < 0 || sc > best_score) {
            chosen = cls;
            best_score = sc;
          }
        }
      }
      const int truth = ds.clips[tests[members.front()]].class_id;
      if (chosen == truth) ++video_hits;
    }
    acc.video = static_cast<double>(video_hits) / static_cast<double>(videos.size());
    report.fused[rule] = acc;
  }

  // per-stream accuracy on roster-restricted test subsets
  for (std::size_t s = 0; s < streams.size(); ++s) {
    std::vector<std::size_t> subset;
    for (std::size_t t : tests) {
      if (std::binary_search(streams[s].roster.begin(), streams[s].roster.end(),
                             ds.clips[t].class_id))
        subset.push_back(t);
    }
    if (subset.empty()) fail(Err::EmptyTestSet, "stream " + std::to_string(s) + " has no test clips");
    Matrix x(subset.size(), pca.num_components());
    std::vector<int> labels(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const auto reduced = project(pca, equalize(ds.clips[subset[i]], eq_target));
      std::copy(reduced.begin(), reduced.end(), x.row(i));
      labels[i] = ds.clips[subset[i]].class_id;
    }
    report.per_stream_accuracy.push_back(stream_accuracy(streams[s], x, labels));
  }

  report.metadata["video_agg"] = opts.video_agg == VideoAgg::Majority ? "majority" : "score_sum";
  report.metadata["num_streams"] = std::to_string(plan.num_streams);
  report.metadata["assignment"] = plan.assignment_mode;
  return report;
}

std::map<int, double> ann_quality(const Dataset& ds, const PcaModel& pca, std::size_t eq_target,
                                  const std::vector<int>& class_ids, std::size_t knn_k) {
  if (knn_k < 1) fail(Err::InvalidSpec, "knn_k must be >= 1");
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < ds.clips.size(); ++i)
    if (ds.clips[i].split == Split::Train) train.push_back(i);
  if (train.empty()) fail(Err::EmptyTestSet, "no training clips");

  Matrix x(train.size(), pca.num_components());
  std::vector<int> labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto reduced = project(pca, equalize(ds.clips[train[i]], eq_target));
    std::copy(reduced.begin(), reduced.end(), x.row(i));
    labels[i] = ds.clips[train[i]].class_id;
  }

  std::map<int, double> out;
  for (int cls : class_ids) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    if (members.size() < 2)
      fail(Err::ClassTooSmall, "class " + std::to_string(cls) + " has fewer than 2 members");
    double acc = 0.0;
    for (std::size_t i : members) {
      const auto nn = knn_indices(x, x.row(i), knn_k, static_cast<std::ptrdiff_t>(i));
      std::size_t same = 0;
      for (std::size_t idx : nn)
        if (labels[idx] == cls) ++same;
      acc += static_cast<double>(same) / static_cast<double>(nn.size());
    }
    out[cls] = 100.0 * acc / static_cast<double>(members.size());
  }
  return out;
}

BenchReport bench(const Dataset& ds, const StreamPlan& plan,
                  const std::vector<TrainedStream>& streams, const PcaModel& pca,
                  std::size_t eq_target, const FusionMode& mode, std::size_t repetitions,
                  std::size_t workers) {
  const auto tests = test_indices(ds);
  if (tests.empty()) fail(Err::EmptyTestSet, "dataset has no test clips");
  repetitions = std::max<std::size_t>(1, repetitions);

  BenchReport report;
  report.repetitions = repetitions;
  report.workers = std::max<std::size_t>(1, workers);
  report.fusion = fusion_rule_name(mode.rule);
  report.note = kBenchNote;
  for (std::size_t t : tests) report.total_frames += ds.clips[t].frame_count;

  double best_total = std::numeric_limits<double>::infinity();
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    double t_eq = 0, t_proj = 0, t_pred = 0, t_fuse = 0;
    for (std::size_t t : tests) {
      const auto& clip = ds.clips[t];
      auto t0 = Clock::now();
      const auto flat = equalize(clip, eq_target);
      t_eq += seconds_since(t0);

      t0 = Clock::now();
      const auto reduced = project(pca, flat);
      t_proj += seconds_since(t0);

      t0 = Clock::now();
      std::vector<std::vector<double>> probs(streams.size());
      for (std::size_t s = 0; s < streams.size(); ++s)
        probs[s] = predict_proba(streams[s], reduced);
      t_pred += seconds_since(t0);

      t0 = Clock::now();
      (void)fuse(mode, probs, plan, streams, reduced);
      t_fuse += seconds_since(t0);
    }
    const double total = t_eq + t_proj + t_pred + t_fuse;
    if (total < best_total) {
      best_total = total;
      report.stage_seconds = {{"equalize", t_eq}, {"project", t_proj},
                              {"predict", t_pred}, {"fuse", t_fuse}};
    }
  }

  report.online_seconds = std::max(best_total, 1e-12);
  report.fps = static_cast<double>(report.total_frames) / report.online_seconds;
  for (const auto& [stage, secs] : report.stage_seconds)
    report.stage_shares[stage] = secs / report.online_seconds;
  return report;
}

double baseline_monolithic(const Dataset& ds, const PcaModel& pca, std::size_t eq_target,
                           const ClassifierConfig& cfg, const FusionMode& mode) {
  StreamPlan plan;
  plan.num_streams = 1;
  plan.assignment_mode = "monolithic";
  const std::size_t m = ds.num_classes();
  plan.class_to_stream.assign(m, 0);
  plan.class_to_cluster.assign(m, 0);
  plan.stream_rosters.resize(1);
  for (std::size_t c = 0; c < m; ++c) plan.stream_rosters[0].push_back(static_cast<int>(c));

  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < ds.clips.size(); ++i)
    if (ds.clips[i].split == Split::Train) train.push_back(i);
  Matrix x(train.size(), pca.num_components());
  std::vector<int> labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto reduced = project(pca, equalize(ds.clips[train[i]], eq_target));
    std::copy(reduced.begin(), reduced.end(), x.row(i));
    labels[i] = ds.clips[train[i]].class_id;
  }
  std::vector<TrainedStream> streams;
  streams.push_back(train_stream(plan, 0, x, labels, cfg));

  EvalOptions opts;
  opts.modes = {mode};
  opts.confusion_rule = mode.rule;
  const EvalReport report = evaluate(ds, plan, streams, pca, eq_target, opts);
  return report.fused.at(fusion_rule_name(mode.rule)).clip;
}

void write_confusion_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  const std::size_t m = report.confusion.size();
  f << "true_class";
  for (std::size_t j = 0; j < m; ++j) f << ",pred_" << j;
  f << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    f << i;
    for (std::size_t j = 0; j < m; ++j) f << ',' << report.confusion[i][j];
    f << '\n';
  }
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

void write_decisions_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  f << "clip_id,mode,predicted_class,true_class\n";
  for (const auto& [clip, rule, predicted, truth] : report.decisions)
    f << clip << ',' << rule << ',' << predicted << ',' << truth << '\n';
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

}  // namespace smn
