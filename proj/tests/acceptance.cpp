// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Everything runs on synthetic data at desk scale; oracles are
// naive reimplementations kept independent of the library's compute paths.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "smn/classify.hpp"
#include "smn/clustering.hpp"
#include "smn/error.hpp"
#include "smn/eval.hpp"
#include "smn/fusion.hpp"
#include "smn/kernels.hpp"
#include "smn/pipeline.hpp"
#include "smn/preprocess.hpp"
#include "smn/rng.hpp"
#include "support.hpp"

using namespace smn;
using namespace smn_test;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %02d %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  if (!pass) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- benchmarks

SynthSpec separable_benchmark(std::uint64_t seed) {
  SynthSpec spec;
  spec.num_groups = 4;
  spec.classes_per_group = 2;
  spec.clips_per_class = 10;
  spec.dim = 12;
  spec.group_separation = 14.0;
  spec.within_group_spread = 3.0;
  spec.noise_sigma = 0.5;
  spec.segments_min = 1;
  spec.segments_max = 2;
  spec.seed = seed;
  return spec;
}

// within-group class confusability: same-group means a couple of noise units
// apart, groups far apart
SynthSpec overlapping_benchmark(std::uint64_t seed) {
  SynthSpec spec;
  spec.num_groups = 5;
  spec.classes_per_group = 4;
  spec.clips_per_class = 20;
  spec.dim = 16;
  spec.group_separation = 21.0;
  spec.within_group_spread = 2.5;
  spec.noise_sigma = 1.5;
  spec.segments_min = 1;
  spec.segments_max = 2;
  spec.seed = seed;
  return spec;
}

RunConfig overlap_config(std::uint64_t seed, AssignmentMode mode) {
  RunConfig cfg;
  cfg.num_streams = 4;
  cfg.pca_components = 24;
  cfg.knn_k = 10;
  cfg.seed = seed;
  cfg.assignment = mode;
  cfg.classifier.max_epochs = 300;
  return cfg;
}

// --------------------------------------------------------------- criterion 1

void criterion_stream_sizes() {
  const auto t0 = std::chrono::steady_clock::now();
  SynthSpec spec;
  spec.num_groups = 101;
  spec.classes_per_group = 1;
  spec.clips_per_class = 5;
  spec.dim = 104;
  spec.group_separation = 12.0;
  spec.within_group_spread = 1.0;
  spec.noise_sigma = 1.0;
  spec.seed = 404;
  const Dataset ds = generate_synthetic(spec);

  RunConfig cfg;
  cfg.num_streams = 4;
  cfg.pca_components = 32;
  cfg.knn_k = 10;
  cfg.seed = 404;
  const PlanArtifacts art = run_plan(ds, cfg);
  std::multiset<std::size_t> sizes;
  for (const auto& roster : art.plan.stream_rosters) sizes.insert(roster.size());
  const bool exact = sizes == std::multiset<std::size_t>{25, 25, 25, 26};
  const double secs = elapsed_s(t0);
  char detail[128];
  std::snprintf(detail, sizeof detail, "101 classes over 4 streams -> {%zu,%zu,%zu,%zu} in %.1fs",
                art.plan.stream_rosters[0].size(), art.plan.stream_rosters[1].size(),
                art.plan.stream_rosters[2].size(), art.plan.stream_rosters[3].size(), secs);
  report(1, "stream-size-structure", exact && secs < 5.0, detail);
}

// --------------------------------------------------------------- criterion 2

void criterion_top_n_distinct() {
  std::size_t violations = 0, runs_with_votes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthSpec spec;
    spec.num_groups = 3;
    spec.classes_per_group = 4;
    spec.clips_per_class = 6;
    spec.dim = 10;
    spec.group_separation = 8.0;
    spec.within_group_spread = 2.5;
    spec.noise_sigma = 2.0;
    spec.seed = seed;
    const Dataset ds = generate_synthetic(spec);
    RunConfig cfg;
    cfg.num_streams = 4;
    cfg.pca_components = 10;
    cfg.knn_k = 5;
    cfg.seed = seed;
    const PlanArtifacts art = run_plan(ds, cfg);
    runs_with_votes += art.plan.votes.empty() ? 0 : 1;
    for (const auto& [cluster_id, members] : art.plan.cluster_orderings) {
      const std::size_t top = std::min<std::size_t>(art.plan.num_streams, members.size());
      std::set<int> streams;
      for (std::size_t i = 0; i < top; ++i)
        streams.insert(art.plan.class_to_stream[static_cast<std::size_t>(members[i].first)]);
      if (streams.size() != top) ++violations;
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "100 seeded runs, %zu violations (%zu runs exercised voting)", violations,
                runs_with_votes);
  report(2, "top-n-distinctness", violations == 0, detail);
}

// --------------------------------------------------------------- criterion 3

struct FusionInstance {
  StreamPlan plan;
  std::vector<TrainedStream> streams;
  std::vector<std::vector<double>> probs;
  std::vector<double> query;
};

FusionInstance random_fusion_instance(Rng& rng, std::size_t n_streams, std::size_t m,
                                      std::size_t dim, std::size_t bank_rows) {
  FusionInstance inst;
  inst.plan.num_streams = n_streams;
  inst.plan.class_to_stream.assign(m, -1);
  inst.plan.class_to_cluster.assign(m, 0);
  inst.plan.stream_rosters.resize(n_streams);
  std::vector<int> order(m);
  for (std::size_t c = 0; c < m; ++c) order[c] = static_cast<int>(c);
  rng.shuffle(order);
  for (std::size_t i = 0; i < m; ++i)
    inst.plan.stream_rosters[i % n_streams].push_back(order[i]);
  for (auto& roster : inst.plan.stream_rosters) std::sort(roster.begin(), roster.end());
  for (std::size_t s = 0; s < n_streams; ++s)
    for (int c : inst.plan.stream_rosters[s])
      inst.plan.class_to_stream[static_cast<std::size_t>(c)] = static_cast<int>(s);

  inst.streams.resize(n_streams);
  inst.probs.resize(n_streams);
  for (std::size_t s = 0; s < n_streams; ++s) {
    auto& ts = inst.streams[s];
    ts.roster = inst.plan.stream_rosters[s];
    double total = 0.0;
    for (std::size_t j = 0; j < ts.roster.size(); ++j) {
      const double e = -std::log(rng.uniform01() + 1e-12);
      inst.probs[s].push_back(e);
      total += e;
    }
    for (auto& p : inst.probs[s]) p /= total;
    for (std::size_t j = 0; j < ts.roster.size(); ++j) {
      std::vector<double> mean(dim);
      for (auto& v : mean) v = rng.normal();
      ts.class_means.push_back(mean);
      Matrix bank(bank_rows, dim);
      for (auto& v : bank.data) v = rng.normal();
      ts.member_bank.push_back(bank);
    }
  }
  inst.query.resize(dim);
  for (auto& v : inst.query) v = rng.normal();
  return inst;
}

void criterion_fusion_oracles() {
  Rng rng(33);
  std::size_t raw_ok = 0, mean_ok = 0, min_ok = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const FusionInstance inst = random_fusion_instance(rng, 3, 8, 3, 3);

    // raw: global argmax over the concatenation
    {
      int best = -1;
      double best_p = -1;
      for (std::size_t s = 0; s < inst.probs.size(); ++s)
        for (std::size_t j = 0; j < inst.probs[s].size(); ++j) {
          const int cls = inst.plan.stream_rosters[s][j];
          if (inst.probs[s][j] > best_p || (inst.probs[s][j] == best_p && cls < best)) {
            best_p = inst.probs[s][j];
            best = cls;
          }
        }
      raw_ok += fuse_raw(inst.probs, inst.plan).predicted_class == best;
    }
    // mean: brute-force max over prob x inverse distance
    {
      int best = -1;
      double best_score = -1;
      for (std::size_t s = 0; s < inst.probs.size(); ++s)
        for (std::size_t j = 0; j < inst.probs[s].size(); ++j) {
          const int cls = inst.plan.stream_rosters[s][j];
          double d2 = 0;
          for (std::size_t i = 0; i < inst.query.size(); ++i) {
            const double diff = inst.streams[s].class_means[j][i] - inst.query[i];
            d2 += diff * diff;
          }
          const double score = inst.probs[s][j] / std::max(1e-9, std::sqrt(d2));
          if (score > best_score || (score == best_score && cls < best)) {
            best_score = score;
            best = cls;
          }
        }
      mean_ok += fuse_mean_weighted(inst.probs, inst.plan, inst.streams, inst.query)
                     .predicted_class == best;
    }
    // min (pure): argmin banked distance over the per-stream winners
    {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < inst.probs.size(); ++s) {
        std::size_t w = 0;
        for (std::size_t j = 1; j < inst.probs[s].size(); ++j)
          if (inst.probs[s][j] > inst.probs[s][w]) w = j;
        const auto& bank = inst.streams[s].member_bank[w];
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < bank.rows; ++r) {
          double acc = 0;
          for (std::size_t c2 = 0; c2 < bank.cols; ++c2) {
            const double diff = bank.at(r, c2) - inst.query[c2];
            acc += diff * diff;
          }
          d = std::min(d, std::sqrt(acc));
        }
        const int cls = inst.plan.stream_rosters[s][w];
        if (d < best_d || (d == best_d && cls < best)) {
          best_d = d;
          best = cls;
        }
      }
      min_ok += fuse_min_weighted(inst.probs, inst.plan, inst.streams, inst.query,
                                  MinVariant::PureMinDistance)
                    .predicted_class == best;
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof detail, "raw %zu/%d, mean %zu/%d, min %zu/%d exact", raw_ok,
                trials, mean_ok, trials, min_ok, trials);
  report(3, "fusion-oracle-equivalence",
         raw_ok == trials && mean_ok == trials && min_ok == trials, detail);
}

// --------------------------------------------------------------- criterion 4

void criterion_kmeans_blobs() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t perfect = 0;
  bool monotone = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed * 7 + 1);
    const std::size_t per_blob = 50, dim = 8;
    Matrix x(4 * per_blob, dim);
    std::vector<int> truth;
    const double scale = 10.0 / std::sqrt(2.0);  // 10 sigma apart, sigma = 1
    std::size_t row = 0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t i = 0; i < per_blob; ++i, ++row) {
        for (std::size_t j = 0; j < dim; ++j) x.at(row, j) = rng.normal();
        x.at(row, b) += scale;
        truth.push_back(static_cast<int>(b));
      }
    KmeansConfig cfg;
    cfg.k = 4;
    cfg.seed = seed;
    const KmeansResult res = run_kmeans(x, cfg);  // throws if inertia ever rises
    for (std::size_t i = 1; i < res.inertia_trace.size(); ++i)
      monotone = monotone && res.inertia_trace[i] <= res.inertia_trace[i - 1] * (1 + 1e-12) + 1e-9;
    if (adjusted_rand_index(truth, res.labels) == 1.0) ++perfect;
  }
  const double secs = elapsed_s(t0);
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "ARI=1.0 in %zu/100 seeds, inertia non-increasing, %.1fs", perfect, secs);
  report(4, "kmeans-blob-recovery", perfect >= 95 && monotone && secs < 30.0, detail);
}

// --------------------------------------------------------------- criterion 5

void criterion_pca() {
  Rng rng(55);
  Matrix x(30, 8);
  for (auto& v : x.data) v = rng.normal();
  const PcaModel model = fit_pca(x, 8);

  double ortho = 0.0;
  for (std::size_t i = 0; i < model.num_components(); ++i)
    for (std::size_t j = 0; j < model.num_components(); ++j) {
      const double g = kern::dot(model.components.row(i), model.components.row(j), 8);
      ortho = std::max(ortho, std::abs(g - (i == j ? 1.0 : 0.0)));
    }

  double dist_err = 0.0;
  std::vector<std::vector<double>> projected;
  for (std::size_t i = 0; i < x.rows; ++i) projected.push_back(project(model, x.row_span(i)));
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = i + 1; j < x.rows; ++j) {
      const double orig = kern::squared_distance(x.row(i), x.row(j), 8);
      const double red = kern::squared_distance(projected[i].data(), projected[j].data(),
                                                projected[i].size());
      dist_err = std::max(dist_err, std::abs(orig - red) / std::max(1.0, orig));
    }

  double rec_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    std::vector<double> v(8);
    for (auto& e : v) e = rng.normal();
    const auto z = project(model, v);
    std::vector<double> rec = model.mean;
    for (std::size_t i = 0; i < z.size(); ++i)
      kern::axpy(z[i], model.components.row(i), rec.data(), rec.size());
    const double err = std::sqrt(kern::squared_distance(rec.data(), v.data(), 8));
    const double norm = std::sqrt(kern::dot(v.data(), v.data(), 8));
    rec_err = std::max(rec_err, err / std::max(1.0, norm));
  }

  char detail[160];
  std::snprintf(detail, sizeof detail,
                "orthonormality %.2e (<=1e-8), distance %.2e (<=1e-6), reconstruction %.2e "
                "(<=1e-6)",
                ortho, dist_err, rec_err);
  report(5, "pca-exactness", ortho <= 1e-8 && dist_err <= 1e-6 && rec_err <= 1e-6, detail);
}

// --------------------------------------------------------------- criterion 6

double fd_max_rel_error(const ModelShape& shape, const Matrix& x, const std::vector<int>& y,
                        std::vector<double> params) {
  std::vector<double> grad(params.size());
  model_loss_grad(shape, params, x, y, 1e-3, grad);
  const double h = 1e-6;
  double worst = 0.0;
  std::vector<double> scratch(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto plus = params, minus = params;
    plus[i] += h;
    minus[i] -= h;
    const double fp = model_loss_grad(shape, plus, x, y, 1e-3, scratch);
    const double fm = model_loss_grad(shape, minus, x, y, 1e-3, scratch);
    const double numeric = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
    worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
  }
  return worst;
}

void criterion_gradients() {
  Rng rng(66);
  Matrix x(5, 4);
  for (auto& v : x.data) v = rng.normal();
  const std::vector<int> y{0, 1, 2, 1, 0};

  ModelShape soft{ClassifierKind::Softmax, 4, 3, 0};
  std::vector<double> ps(soft.param_count());
  for (auto& p : ps) p = 0.3 * rng.normal();
  const double soft_err = fd_max_rel_error(soft, x, y, ps);

  ModelShape mlp{ClassifierKind::Mlp1, 4, 3, 6};
  std::vector<double> pm(mlp.param_count());
  for (auto& p : pm) p = 0.3 * rng.normal();
  const double mlp_err = fd_max_rel_error(mlp, x, y, pm);

  char detail[128];
  std::snprintf(detail, sizeof detail, "softmax %.2e, mlp1 %.2e (<=1e-5)", soft_err, mlp_err);
  report(6, "classifier-gradients", soft_err <= 1e-5 && mlp_err <= 1e-5, detail);
}

// ------------------------------------------------------- criteria 7, 8, 9

struct OverlapOutcome {
  double cvdp_mean_clip = 0;
  double random_mean_clip = 0;
  double cvdp_mean_video = 0;
  double cvdp_raw_video = 0;
};

OverlapOutcome run_overlap_seed(std::uint64_t seed) {
  const Dataset ds = generate_synthetic(overlapping_benchmark(seed));
  OverlapOutcome out;
  {
    const RunConfig cfg = overlap_config(seed, AssignmentMode::CvDp);
    const PlanArtifacts art = run_plan(ds, cfg);
    const auto streams = run_train(ds, art, cfg);
    const EvalReport evr = run_eval(ds, art, streams, cfg);
    out.cvdp_mean_clip = evr.fused.at("mean").clip;
    out.cvdp_mean_video = evr.fused.at("mean").video;
    out.cvdp_raw_video = evr.fused.at("raw").video;
  }
  {
    const RunConfig cfg = overlap_config(seed, AssignmentMode::Random);
    const PlanArtifacts art = run_plan(ds, cfg);
    const auto streams = run_train(ds, art, cfg);
    const EvalReport evr = run_eval(ds, art, streams, cfg);
    out.random_mean_clip = evr.fused.at("mean").clip;
  }
  return out;
}

void criteria_overlap_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  double cvdp_sum = 0, random_sum = 0;
  std::size_t mean_ge_raw = 0;
  const std::size_t seeds = 20;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const OverlapOutcome out = run_overlap_seed(seed);
    cvdp_sum += out.cvdp_mean_clip;
    random_sum += out.random_mean_clip;
    if (out.cvdp_mean_video >= out.cvdp_raw_video) ++mean_ge_raw;
  }
  const double cvdp_acc = cvdp_sum / seeds;
  const double random_acc = random_sum / seeds;
  const double secs = elapsed_s(t0);

  char detail[160];
  std::snprintf(detail, sizeof detail,
                "mean W_mean accuracy: cvdp %.4f vs random %.4f over 20 seeds, %.0fs", cvdp_acc,
                random_acc, secs);
  report(7, "cvdp-beats-random", cvdp_acc >= random_acc && secs < 300.0, detail);

  char detail9[128];
  std::snprintf(detail9, sizeof detail9, "W_mean >= W_raw video-level in %zu/20 seeds",
                mean_ge_raw);
  report(9, "fusion-ordering-sanity", mean_ge_raw >= 15, detail9);
}

void criterion_partition_vs_monolithic() {
  const Dataset ds = generate_synthetic(separable_benchmark(31));
  RunConfig cfg;
  cfg.num_streams = 4;
  cfg.pca_components = 16;
  cfg.knn_k = 5;
  cfg.seed = 31;
  cfg.classifier.max_epochs = 200;
  const PlanArtifacts art = run_plan(ds, cfg);
  const auto streams = run_train(ds, art, cfg);
  const EvalReport evr = run_eval(ds, art, streams, cfg);
  const double fused = evr.fused.at("mean").clip;

  ClassifierConfig bcfg = cfg.classifier;
  bcfg.seed = derive_seed(cfg.seed, stage::kTrain + 0);
  FusionMode mode;
  mode.rule = FusionRule::MeanWeighted;
  const double mono = baseline_monolithic(ds, art.pca, art.eq_target, bcfg, mode);

  // N=1 plan through the full pipeline reproduces the monolithic result
  RunConfig one = cfg;
  one.num_streams = 1;
  const PlanArtifacts art1 = run_plan(ds, one);
  const auto streams1 = run_train(ds, art1, one);
  const EvalReport report1 = run_eval(ds, art1, streams1, one);
  const bool exact_reduction = report1.fused.at("mean").clip == mono;

  char detail[160];
  std::snprintf(detail, sizeof detail,
                "fused %.4f vs monolithic %.4f (gap %.2f pts), N=1 reduction %s", fused, mono,
                100.0 * std::abs(fused - mono), exact_reduction ? "exact" : "mismatch");
  report(8, "partition-vs-monolithic",
         std::abs(fused - mono) <= 0.02 + 1e-12 && exact_reduction, detail);
}

// -------------------------------------------------------------- criterion 10

void criterion_determinism() {
  const Dataset ds = generate_synthetic(separable_benchmark(47));
  RunConfig cfg;
  cfg.num_streams = 2;
  cfg.pca_components = 16;
  cfg.knn_k = 5;
  cfg.seed = 47;
  cfg.classifier.max_epochs = 80;

  TempDir d1, d2;
  auto run_into = [&](const std::filesystem::path& dir) {
    const PlanArtifacts art = run_plan(ds, cfg);
    save_plan_artifacts(art, cfg, dir);
    const auto streams = run_train(ds, art, cfg);
    save_streams(streams, dir / "models");
    const EvalReport evr = run_eval(ds, art, streams, cfg);
    write_file(dir / "eval_report.json", evr.to_json());
  };
  run_into(d1.path());
  run_into(d2.path());

  const bool plan_same =
      read_file(d1.path() / "plan.json") == read_file(d2.path() / "plan.json");
  bool models_same = true;
  for (int s = 0; s < 2; ++s) {
    const std::string tag = "stream_" + std::to_string(s) + ".params.bin";
    models_same = models_same && read_file(d1.path() / "models" / tag) ==
                                     read_file(d2.path() / "models" / tag);
  }
  const bool report_same =
      read_file(d1.path() / "eval_report.json") == read_file(d2.path() / "eval_report.json");

  char detail[128];
  std::snprintf(detail, sizeof detail, "plan %s, model blobs %s, eval report %s",
                plan_same ? "identical" : "differs", models_same ? "identical" : "differ",
                report_same ? "identical" : "differs");
  report(10, "run-determinism", plan_same && models_same && report_same, detail);
}

// -------------------------------------------------------------- criterion 11

void criterion_bench_harness() {
  const Dataset ds = generate_synthetic(separable_benchmark(53));
  RunConfig cfg;
  cfg.num_streams = 2;
  cfg.pca_components = 16;
  cfg.knn_k = 5;
  cfg.seed = 53;
  cfg.classifier.max_epochs = 60;
  const PlanArtifacts art = run_plan(ds, cfg);
  const auto streams = run_train(ds, art, cfg);
  FusionMode mode;
  mode.rule = FusionRule::MeanWeighted;
  const BenchReport rep = bench(ds, art.plan, streams, art.pca, art.eq_target, mode, 3, 1);

  double share_total = 0.0;
  for (const auto& [stage, share] : rep.stage_shares) share_total += share;
  const bool caveat = rep.to_json().find("extraction") != std::string::npos;

  char detail[128];
  std::snprintf(detail, sizeof detail, "fps %.0f, stage shares sum %.4f, caveat %s", rep.fps,
                share_total, caveat ? "present" : "missing");
  report(11, "bench-harness", rep.fps > 0 && std::abs(share_total - 1.0) <= 0.01 && caveat,
         detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite (kernel backend: %s)\n",
              kern::backend_name(kern::active_backend()));
  try {
    criterion_stream_sizes();
    criterion_top_n_distinct();
    criterion_fusion_oracles();
    criterion_kmeans_blobs();
    criterion_pca();
    criterion_gradients();
    criteria_overlap_benchmark();
    criterion_partition_vs_monolithic();
    criterion_determinism();
    criterion_bench_harness();
  } catch (const std::exception& e) {
    std::printf("[FAIL] -- suite aborted: %s\n", e.what());
    return 1;
  }
  if (failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
