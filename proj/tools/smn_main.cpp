// smn: dissimilarity-driven specialist-stream action classification over
// pre-extracted clip features. Subcommands cover the whole pipeline:
//   synth  - generate a synthetic dataset (manifest + feature files)
//   plan   - cluster classes and deal them across streams
//   train  - fit one classifier per stream
//   eval   - fused clip/video accuracies, confusion matrix, decision log
//   bench  - online-path throughput (fps) with per-stage shares

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smn/error.hpp"
#include "smn/pipeline.hpp"

namespace fs = std::filesystem;
using namespace smn;

namespace {

void add_config(CLI::App* cmd, std::string& path) {
  cmd->add_option("--config", path, "flat key=value config file; flags take precedence");
}

// Splices the config file's `key = value` lines into the argument list right
// after the subcommand token, as --key value pairs. Explicit flags come later
// on the command line, so with take-last semantics they win.
std::vector<std::string> expand_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream f(config_path);
  if (!f) fail(Err::MissingFile, "cannot open config file " + config_path);
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  std::vector<std::string> inserted;
  std::string line;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Err::CorruptHeader, "config line is not key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(Err::CorruptHeader, "empty key in config line: " + line);
    if (value == "true") {
      inserted.push_back("--" + key);
    } else if (value == "false") {
      continue;
    } else {
      inserted.push_back("--" + key);
      std::stringstream vs(value);  // multi-valued keys split on whitespace
      std::string piece;
      while (vs >> piece) inserted.push_back(piece);
    }
  }

  // insert after the subcommand token (the first non-flag argument)
  auto at = args.begin();
  while (at != args.end() && !at->empty() && (*at)[0] == '-') ++at;
  if (at != args.end()) ++at;
  args.insert(at, inserted.begin(), inserted.end());
  return args;
}

void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::string& assignment,
                   std::string& classifier, std::string& init) {
  cmd->add_option("--streams", cfg.num_streams, "number of specialist streams")
      ->capture_default_str();
  cmd->add_option("--pca-components", cfg.pca_components, "requested PCA components")
      ->capture_default_str();
  cmd->add_option("--knn-k", cfg.knn_k, "neighbors per member in consensus voting")
      ->capture_default_str();
  cmd->add_option("--subsample", cfg.subsample_fraction,
                  "per-class fraction of training clips fed to clustering")
      ->capture_default_str();
  cmd->add_option("--clusters", cfg.kmeans_k, "cluster count override (default: classes/streams)");
  cmd->add_option("--kmeans-iters", cfg.kmeans_max_iter, "k-means iteration cap")
      ->capture_default_str();
  cmd->add_option("--kmeans-tol", cfg.kmeans_tol, "k-means movement tolerance")
      ->capture_default_str();
  cmd->add_option("--init", init, "k-means init: kmeans++ or random")->capture_default_str();
  cmd->add_option("--assignment", assignment, "class-to-stream assignment: cvdp or random")
      ->capture_default_str();
  cmd->add_option("--target-segments", cfg.target_segments,
                  "fixed equalization target (default: training maximum)");
  cmd->add_option("--classifier", classifier, "softmax or mlp1")->capture_default_str();
  cmd->add_option("--epochs", cfg.classifier.max_epochs, "training epochs")
      ->capture_default_str();
  cmd->add_option("--lr", cfg.classifier.learning_rate, "learning rate")->capture_default_str();
  cmd->add_option("--l2", cfg.classifier.l2_lambda, "L2 penalty")->capture_default_str();
  cmd->add_option("--hidden", cfg.classifier.hidden_units, "hidden units (mlp1)")
      ->capture_default_str();
  cmd->add_option("--workers", cfg.workers, "worker threads for training/eval fan-out")
      ->capture_default_str();
}

void apply_parsed(RunConfig& cfg, const std::string& assignment, const std::string& classifier,
                  const std::string& init) {
  if (assignment == "cvdp") cfg.assignment = AssignmentMode::CvDp;
  else if (assignment == "random") cfg.assignment = AssignmentMode::Random;
  else fail(Err::InvalidSpec, "unknown assignment mode '" + assignment + "'");
  cfg.classifier.kind = parse_classifier_kind(classifier);
  if (init == "kmeans++") cfg.kmeans_init = KmeansConfig::Init::KmeansPlusPlus;
  else if (init == "random") cfg.kmeans_init = KmeansConfig::Init::Random;
  else fail(Err::InvalidSpec, "unknown k-means init '" + init + "'");
}

std::vector<FusionMode> parse_fusion_list(const std::vector<std::string>& names,
                                          const std::string& min_variant) {
  std::vector<FusionMode> modes;
  for (const auto& name : names) {
    FusionMode mode;
    mode.rule = parse_fusion_rule(name);
    if (min_variant == "pure") mode.w_min_variant = MinVariant::PureMinDistance;
    else if (min_variant == "product") mode.w_min_variant = MinVariant::WeightedProduct;
    else fail(Err::InvalidSpec, "unknown w_min variant '" + min_variant + "'");
    modes.push_back(mode);
  }
  return modes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specialist-stream action recognition over precomputed features"};
  app.require_subcommand(1);
  // config-file keys are spliced in before explicit flags: last one wins
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;  // shared by every subcommand

  // ---- synth ----
  SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_config(synth, config_path);
  synth->add_option("--groups", spec.num_groups, "similarity groups")->capture_default_str();
  synth->add_option("--classes-per-group", spec.classes_per_group, "classes per group")
      ->capture_default_str();
  synth->add_option("--clips-per-class", spec.clips_per_class, "clips per class (>= 2)")
      ->capture_default_str();
  synth->add_option("--dim", spec.dim, "raw feature dimension")->capture_default_str();
  synth->add_option("--separation", spec.group_separation, "distance between group centers")
      ->capture_default_str();
  synth->add_option("--spread", spec.within_group_spread, "class-mean offset within a group")
      ->capture_default_str();
  synth->add_option("--sigma", spec.noise_sigma, "per-segment noise sigma")->capture_default_str();
  synth->add_option("--segments-min", spec.segments_min, "min segments per clip")
      ->capture_default_str();
  synth->add_option("--segments-max", spec.segments_max, "max segments per clip")
      ->capture_default_str();
  synth->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  // ---- plan ----
  RunConfig plan_cfg;
  std::string plan_data, plan_out;
  std::string plan_assignment = "cvdp", plan_classifier = "softmax", plan_init = "kmeans++";
  auto* plan_cmd = app.add_subcommand("plan", "cluster classes and deal them across streams");
  add_config(plan_cmd);
  plan_cmd->add_option("--data", plan_data, "dataset manifest path")->required();
  plan_cmd->add_option("--out", plan_out, "run directory for artifacts")->required();
  plan_cmd->add_option("--seed", plan_cfg.seed, "global run seed")->capture_default_str();
  add_run_flags(plan_cmd, plan_cfg, plan_assignment, plan_classifier, plan_init);

  // ---- train ----
  RunConfig train_cfg;
  std::string train_data, train_run;
  std::string train_assignment = "cvdp", train_classifier = "softmax", train_init = "kmeans++";
  auto* train_cmd = app.add_subcommand("train", "fit one classifier per stream");
  add_config(train_cmd);
  train_cmd->add_option("--data", train_data, "dataset manifest path")->required();
  train_cmd->add_option("--run", train_run, "run directory produced by plan")->required();
  add_run_flags(train_cmd, train_cfg, train_assignment, train_classifier, train_init);

  // ---- eval ----
  RunConfig eval_cfg;
  std::string eval_data, eval_run;
  std::vector<std::string> eval_fusion{"raw", "mean", "min"};
  std::string eval_min_variant = "product", eval_video_agg = "majority";
  bool eval_baseline = false;
  std::string eval_assignment = "cvdp", eval_classifier = "softmax", eval_init = "kmeans++";
  auto* eval_cmd = app.add_subcommand("eval", "fused accuracies and reports");
  add_config(eval_cmd);
  eval_cmd->add_option("--data", eval_data, "dataset manifest path")->required();
  eval_cmd->add_option("--run", eval_run, "run directory with plan + models")->required();
  eval_cmd->add_option("--fusion", eval_fusion, "fusion rules: raw mean min")
      ->capture_default_str();
  eval_cmd->add_option("--min-variant", eval_min_variant, "w_min variant: product or pure")
      ->capture_default_str();
  eval_cmd->add_option("--video-agg", eval_video_agg, "video aggregation: majority or score")
      ->capture_default_str();
  eval_cmd->add_flag("--baseline", eval_baseline, "also train/evaluate a monolithic classifier");
  add_run_flags(eval_cmd, eval_cfg, eval_assignment, eval_classifier, eval_init);

  // ---- bench ----
  RunConfig bench_cfg;
  std::string bench_data, bench_run;
  std::string bench_fusion = "mean", bench_min_variant = "product";
  std::string bench_assignment = "cvdp", bench_classifier = "softmax", bench_init = "kmeans++";
  auto* bench_cmd = app.add_subcommand("bench", "online-path throughput");
  add_config(bench_cmd);
  bench_cmd->add_option("--data", bench_data, "dataset manifest path")->required();
  bench_cmd->add_option("--run", bench_run, "run directory with plan + models")->required();
  bench_cmd->add_option("--fusion", bench_fusion, "fusion rule to time")->capture_default_str();
  bench_cmd->add_option("--min-variant", bench_min_variant, "w_min variant")
      ->capture_default_str();
  bench_cmd->add_option("--reps", bench_cfg.bench_repetitions, "repetitions (best kept)")
      ->capture_default_str();
  add_run_flags(bench_cmd, bench_cfg, bench_assignment, bench_classifier, bench_init);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const Dataset ds = generate_synthetic(spec);
      const auto manifest = save_dataset(ds, synth_out);
      std::cout << "wrote " << ds.clips.size() << " clips, " << ds.num_classes() << " classes -> "
                << manifest.string() << "\n";
      return 0;
    }

    if (plan_cmd->parsed()) {
      apply_parsed(plan_cfg, plan_assignment, plan_classifier, plan_init);
      const Dataset ds = load_dataset(plan_data);
      const PlanArtifacts art = run_plan(ds, plan_cfg);
      save_plan_artifacts(art, plan_cfg, plan_out);
      std::cout << "plan: " << art.plan.num_streams << " streams";
      for (const auto& roster : art.plan.stream_rosters) std::cout << " " << roster.size();
      std::cout << " classes; " << art.plan.votes.size() << " problematic classes voted; wrote "
                << (fs::path(plan_out) / "plan.json").string() << "\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      apply_parsed(train_cfg, train_assignment, train_classifier, train_init);
      const Dataset ds = load_dataset(train_data);
      PlanArtifacts art = load_plan_artifacts(ds, train_run, train_cfg);
      const auto streams = run_train(ds, art, train_cfg);
      save_streams(streams, fs::path(train_run) / "models");
      std::cout << "trained " << streams.size() << " streams -> "
                << (fs::path(train_run) / "models").string() << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      apply_parsed(eval_cfg, eval_assignment, eval_classifier, eval_init);
      eval_cfg.fusion_modes = parse_fusion_list(eval_fusion, eval_min_variant);
      if (!eval_cfg.fusion_modes.empty()) eval_cfg.primary_rule = eval_cfg.fusion_modes.front().rule;
      for (const auto& mode : eval_cfg.fusion_modes)
        if (mode.rule == FusionRule::MeanWeighted) eval_cfg.primary_rule = mode.rule;
      if (eval_video_agg == "majority") eval_cfg.video_agg = VideoAgg::Majority;
      else if (eval_video_agg == "score") eval_cfg.video_agg = VideoAgg::ScoreSum;
      else fail(Err::InvalidSpec, "unknown video aggregation '" + eval_video_agg + "'");
      eval_cfg.with_baseline = eval_baseline;

      const Dataset ds = load_dataset(eval_data);
      PlanArtifacts art = load_plan_artifacts(ds, eval_run, eval_cfg);
      const auto streams = load_streams(fs::path(eval_run) / "models", art.plan.num_streams);
      const EvalReport report = run_eval(ds, art, streams, eval_cfg);
      write_file(fs::path(eval_run) / "eval_report.json", report.to_json());
      write_confusion_csv(report, fs::path(eval_run) / "confusion.csv");
      write_decisions_csv(report, fs::path(eval_run) / "decisions.csv");
      std::cout << report.to_table();
      return 0;
    }

    if (bench_cmd->parsed()) {
      apply_parsed(bench_cfg, bench_assignment, bench_classifier, bench_init);
      FusionMode mode;
      mode.rule = parse_fusion_rule(bench_fusion);
      if (bench_min_variant == "pure") mode.w_min_variant = MinVariant::PureMinDistance;

      const Dataset ds = load_dataset(bench_data);
      PlanArtifacts art = load_plan_artifacts(ds, bench_run, bench_cfg);
      const auto streams = load_streams(fs::path(bench_run) / "models", art.plan.num_streams);
      const BenchReport report = bench(ds, art.plan, streams, art.pca, art.eq_target, mode,
                                       bench_cfg.bench_repetitions, bench_cfg.workers);
      write_file(fs::path(bench_run) / "bench_report.json", report.to_json());
      std::printf("fps: %.1f over %lld frames (%.4fs online, fusion=%s, workers=%zu)\n",
                  report.fps, static_cast<long long>(report.total_frames),
                  report.online_seconds, report.fusion.c_str(), report.workers);
      std::cout << "note: " << report.note << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
