#include "smn/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "smn/error.hpp"
#include "smn/rng.hpp"

namespace smn {

using nlohmann::json;
namespace fs = std::filesystem;

PlanArtifacts run_plan(const Dataset& ds, const RunConfig& cfg) {
  if (cfg.num_streams < 1) fail(Err::InvalidCounts, "need at least one stream");
  if (ds.num_classes() < cfg.num_streams)
    fail(Err::InvalidCounts, "fewer classes than streams");

  PlanArtifacts art;
  art.eq_target = resolve_target(ds, {cfg.target_segments});

  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < ds.clips.size(); ++i)
    if (ds.clips[i].split == Split::Train) train.push_back(i);

  Matrix flat(train.size(), art.eq_target * ds.raw_dim);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto v = equalize(ds.clips[train[i]], art.eq_target);
    std::copy(v.begin(), v.end(), flat.row(i));
  }
  art.pca = fit_pca(flat, cfg.pca_components);

  for (const auto& clip : ds.clips)
    art.reduced[clip.clip_id] = project(art.pca, equalize(clip, art.eq_target));

  const auto subsample =
      subsample_per_class(ds, cfg.subsample_fraction, derive_seed(cfg.seed, stage::kSubsample));
  Matrix points(subsample.size(), art.pca.num_components());
  std::vector<std::string> ids(subsample.size());
  for (std::size_t i = 0; i < subsample.size(); ++i) {
    const auto& clip = ds.clips[subsample[i]];
    const auto& v = art.reduced.at(clip.clip_id);
    std::copy(v.begin(), v.end(), points.row(i));
    ids[i] = clip.clip_id;
  }

  KmeansConfig kcfg;
  kcfg.k = cfg.kmeans_k ? *cfg.kmeans_k : default_k(ds.num_classes(), cfg.num_streams);
  kcfg.max_iter = cfg.kmeans_max_iter;
  kcfg.tol = cfg.kmeans_tol;
  kcfg.seed = derive_seed(cfg.seed, stage::kKmeans);
  kcfg.subsample_fraction = cfg.subsample_fraction;
  kcfg.init = cfg.kmeans_init;
  art.clusters = assign_clusters(points, ids, kcfg);

  art.plan = build_plan(art.clusters, ds, art.reduced, cfg.num_streams, cfg.knn_k,
                        cfg.assignment, derive_seed(cfg.seed, stage::kAssign));
  return art;
}

std::vector<TrainedStream> run_train(const Dataset& ds, const PlanArtifacts& art,
                                     const RunConfig& cfg) {
  const std::size_t n_streams = art.plan.num_streams;
  std::vector<TrainedStream> streams(n_streams);

  auto train_one = [&](std::size_t s) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.clips.size(); ++i) {
      if (ds.clips[i].split != Split::Train) continue;
      if (art.plan.class_to_stream[static_cast<std::size_t>(ds.clips[i].class_id)] ==
          static_cast<int>(s))
        members.push_back(i);
    }
    Matrix x(members.size(), art.pca.num_components());
    std::vector<int> labels(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& v = art.reduced.at(ds.clips[members[i]].clip_id);
      std::copy(v.begin(), v.end(), x.row(i));
      labels[i] = ds.clips[members[i]].class_id;
    }
    ClassifierConfig scfg = cfg.classifier;
    scfg.seed = derive_seed(cfg.seed, stage::kTrain + s);
    streams[s] = train_stream(art.plan, static_cast<int>(s), x, labels, scfg);
  };

  const std::size_t workers = std::max<std::size_t>(1, cfg.workers);
  if (workers == 1 || n_streams == 1) {
    for (std::size_t s = 0; s < n_streams; ++s) train_one(s);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n_streams); ++w) {
      pool.emplace_back([&, w]() {
        for (std::size_t s = w; s < n_streams; s += std::min(workers, n_streams)) train_one(s);
      });
    }
    for (auto& th : pool) th.join();
  }
  return streams;
}

EvalReport run_eval(const Dataset& ds, const PlanArtifacts& art,
                    const std::vector<TrainedStream>& streams, const RunConfig& cfg) {
  EvalOptions opts;
  opts.modes = cfg.fusion_modes;
  opts.confusion_rule = cfg.primary_rule;
  opts.video_agg = cfg.video_agg;
  opts.workers = cfg.workers;
  EvalReport report = evaluate(ds, art.plan, streams, art.pca, art.eq_target, opts);
  if (cfg.with_baseline) {
    ClassifierConfig bcfg = cfg.classifier;
    bcfg.seed = derive_seed(cfg.seed, stage::kTrain + 0);  // matches stream 0 of an N=1 run
    FusionMode mode;
    mode.rule = cfg.primary_rule;
    report.baseline_monolithic_accuracy =
        baseline_monolithic(ds, art.pca, art.eq_target, bcfg, mode);
  }
  report.metadata["seed"] = std::to_string(cfg.seed);
  report.metadata["plan_digest"] = fnv1a64_hex(plan_to_json(art.plan));
  report.metadata["classifier"] = classifier_kind_name(cfg.classifier.kind);
  report.metadata["pca_components"] = std::to_string(art.pca.num_components());
  return report;
}

void save_plan_artifacts(const PlanArtifacts& art, const RunConfig& cfg, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Err::IoFailure, "cannot create " + dir.string());
  save_plan(art.plan, dir / "plan.json");
  save_pca(art.pca, dir / "pca.smnp");
  save_cluster_csv(art.clusters, dir / "clusters.csv");
  save_centroids(art.clusters.centroids, dir / "centroids.smnc");

  json meta;
  meta["seed"] = cfg.seed;
  meta["num_streams"] = cfg.num_streams;
  meta["eq_target"] = art.eq_target;
  meta["pca_components_requested"] = cfg.pca_components;
  meta["pca_components"] = art.pca.num_components();
  meta["knn_k"] = cfg.knn_k;
  meta["subsample_fraction"] = cfg.subsample_fraction;
  meta["assignment"] = art.plan.assignment_mode;
  meta["kmeans_iterations"] = art.clusters.iterations_run;
  meta["kmeans_inertia"] = art.clusters.inertia;
  meta["plan_digest"] = fnv1a64_hex(plan_to_json(art.plan));
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

PlanArtifacts load_plan_artifacts(const Dataset& ds, const fs::path& dir, RunConfig& cfg) {
  PlanArtifacts art;
  json meta;
  try {
    meta = json::parse(read_file(dir / "meta.json"));
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(Err::CorruptHeader, "unparseable meta.json in " + dir.string());
  }
  cfg.seed = meta.value("seed", std::uint64_t{0});
  cfg.num_streams = meta.value("num_streams", std::size_t{4});
  cfg.knn_k = meta.value("knn_k", std::size_t{100});
  cfg.subsample_fraction = meta.value("subsample_fraction", 1.0);
  art.eq_target = meta.at("eq_target").get<std::size_t>();
  art.pca = load_pca(dir / "pca.smnp");
  art.plan = load_plan(dir / "plan.json");
  for (const auto& clip : ds.clips)
    art.reduced[clip.clip_id] = project(art.pca, equalize(clip, art.eq_target));
  return art;
}

void save_streams(const std::vector<TrainedStream>& streams, const fs::path& dir) {
  for (const auto& ts : streams) save_stream(ts, dir);
}

std::vector<TrainedStream> load_streams(const fs::path& dir, std::size_t num_streams) {
  std::vector<TrainedStream> streams;
  for (std::size_t s = 0; s < num_streams; ++s)
    streams.push_back(load_stream(dir, static_cast<int>(s)));
  return streams;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Err::MissingFile, "cannot open " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Err::IoFailure, "cannot write " + path.string());
  f << contents;
  if (!f) fail(Err::IoFailure, "write failed for " + path.string());
}

}  // namespace smn
