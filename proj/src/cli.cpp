#include "lps/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "lps/io.hpp"
#include "lps/labelxfer.hpp"
#include "lps/metrics.hpp"
#include "lps/objectness.hpp"
#include "lps/pipeline.hpp"
#include "lps/synthgen.hpp"
#include "lps/vocab.hpp"

namespace lps {

namespace fs = std::filesystem;

namespace {

// All diagnostics go to stderr; files under --out are the only machine
// output, so reruns stay byte-comparable.
template <typename... Args>
void log(const char* fmt, Args... args) {
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw format_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> list_stems(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw format_error("not a directory: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) {
      stems.push_back(e.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

Vocabulary resolve_vocab(const std::string& v) {
  if (v == "vocab1" || v == "vocab2") return builtin_vocabulary(v);
  return load_vocabulary(v);
}

LabelSpace parse_space(const std::string& s) {
  if (s == "raw") return LabelSpace::raw;
  if (s == "vocab") return LabelSpace::vocab;
  throw config_error("label space must be 'raw' or 'vocab', got '" + s + "'");
}

SegMode parse_mode(const std::string& s) {
  if (s == "agnostic") return SegMode::class_agnostic;
  if (s == "specific") return SegMode::class_specific;
  throw config_error("mode must be 'agnostic' or 'specific', got '" + s + "'");
}

/// Vocabulary-space semantics as stored on disk: validate the ids and clear
/// instance ids that make no sense for the class, mirroring remap_labels.
LabelMap normalize_vocab_labels(LabelMap lm, const Vocabulary& vocab, const std::string& what) {
  for (std::size_t i = 0; i < lm.size(); ++i) {
    if (lm.semantic[i] > vocab.other_class()) {
      throw mapping_error(what + ": semantic id " + std::to_string(lm.semantic[i]) +
                          " at point " + std::to_string(i) + " exceeds the vocabulary");
    }
    if (!vocab.is_segmentable(lm.semantic[i])) lm.instance[i] = 0;
  }
  return lm;
}

LabelMap load_vocab_semantics(const fs::path& path, std::size_t n, LabelSpace space,
                              const Vocabulary& vocab) {
  LabelMap lm = read_labels(path, n, space);
  if (space == LabelSpace::raw) return remap_labels(lm, vocab);
  return normalize_vocab_labels(std::move(lm), vocab, path.string());
}

struct ScorerChoice {
  ScorerModel model;
  bool needs_gt = false;
  bool needs_scores = false;
  std::string name;
};

ScorerChoice parse_scorer(const std::string& s) {
  ScorerChoice c;
  c.name = s;
  if (s == "oracle") {
    c.model = make_oracle_scorer();
    c.needs_gt = true;
  } else if (s == "point-avg") {
    c.model = make_point_average_scorer();
    c.needs_scores = true;
  } else if (s.rfind("model:", 0) == 0) {
    c.model = load_scorer(s.substr(6));
  } else {
    throw config_error("unknown scorer '" + s + "' (use oracle, point-avg, or model:<path>)");
  }
  return c;
}

int thread_count(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw format_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw format_error("failed writing " + path.string());
}

/// Point masks the pipeline would segment, in forest construction order.
std::vector<std::vector<int>> segmentation_masks(const LabelMap& sem, const Vocabulary& vocab,
                                                 SegMode mode) {
  std::vector<std::vector<int>> masks;
  if (mode == SegMode::class_agnostic) {
    std::vector<int> all;
    for (std::size_t i = 0; i < sem.size(); ++i) {
      if (vocab.is_segmentable(sem.semantic[i])) all.push_back(static_cast<int>(i));
    }
    if (!all.empty()) masks.push_back(std::move(all));
  } else {
    std::map<std::uint32_t, std::vector<int>> by_class;
    for (std::size_t i = 0; i < sem.size(); ++i) {
      if (vocab.is_segmentable(sem.semantic[i])) {
        by_class[sem.semantic[i]].push_back(static_cast<int>(i));
      }
    }
    for (auto& [cls, idx] : by_class) masks.push_back(std::move(idx));
  }
  return masks;
}

struct CommonOpts {
  std::string vocab = "vocab1";
  std::string out;
  int workers = 0;
};

struct SegmentOpts : CommonOpts {
  std::string cloud_dir, label_dir, score_dir;
  std::string label_space = "raw";
  std::string scorer = "oracle";
  std::string mode = "agnostic";
  std::vector<double> schedule;
};

struct EvaluateOpts : CommonOpts {
  std::string pred_dir, gt_dir;
  std::string gt_space = "raw";
};

struct TrainOpts : CommonOpts {
  std::string cloud_dir, label_dir, gt_dir;
  std::string label_space = "raw";
  std::string mode = "agnostic";
  std::string objective = "regress";
  std::vector<double> schedule;
  double lr = 2e-3;
  int batch = 512;
  int epochs = 200;
  int hidden = 0;
  bool resample = false;
  std::uint64_t seed = 0;
};

struct TransferOpts {
  std::string map_cloud, map_labels, cloud_dir, poses, out;
  std::string label_space = "raw";
  double radius = 0.10;
};

struct GenerateOpts {
  std::string spec, out;
  int count = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int run_segment(const SegmentOpts& o) {
  const Vocabulary vocab = resolve_vocab(o.vocab);
  const LabelSpace space = parse_space(o.label_space);
  PipelineConfig cfg;
  cfg.mode = parse_mode(o.mode);
  cfg.schedule = o.schedule;
  const ScorerChoice scorer = parse_scorer(o.scorer);
  if (scorer.needs_scores && o.score_dir.empty()) {
    throw config_error("scorer point-avg requires --score-dir");
  }

  const std::vector<std::string> stems = list_stems(o.cloud_dir, ".bin");
  fs::create_directories(o.out);

  const double t0 = omp_get_wtime();
  const std::size_t n = stems.size();
  std::vector<std::string> errors(n);
  std::vector<std::int64_t> points(n, 0), instances(n, 0);

#pragma omp parallel for num_threads(thread_count(o.workers)) schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const std::string& stem = stems[static_cast<std::size_t>(i)];
    try {
      const PointCloud cloud = read_point_cloud(fs::path(o.cloud_dir) / (stem + ".bin"));
      const LabelMap sem = load_vocab_semantics(fs::path(o.label_dir) / (stem + ".label"),
                                                cloud.size(), space, vocab);
      std::vector<std::vector<int>> gt;
      std::vector<float> scores;
      ScoreContext ctx;
      if (scorer.needs_gt) {
        gt = instance_sets(sem, vocab);
        ctx.gt_instances = &gt;
      }
      if (scorer.needs_scores) {
        scores = read_scores(fs::path(o.score_dir) / (stem + ".score"), cloud.size());
        ctx.point_scores = scores;
      }
      PanopticPrediction pred = segment_scan(cloud, sem, vocab, scorer.model, ctx, cfg);
      majority_vote(pred);
      write_labels(pred, fs::path(o.out) / (stem + ".label"));

      std::uint32_t m = 0;
      for (std::uint32_t id : pred.instance) m = std::max(m, id);
      points[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(cloud.size());
      instances[static_cast<std::size_t>(i)] = m;
      log("segmented %s: %zu points, %u instances", stem.c_str(), cloud.size(), m);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }

  nlohmann::ordered_json summary;
  summary["mode"] = o.mode;
  summary["vocab"] = o.vocab;
  summary["scorer"] = scorer.name;
  {
    std::span<const double> sched =
        cfg.schedule.empty() ? default_schedule() : std::span<const double>(cfg.schedule);
    summary["schedule"] = std::vector<double>(sched.begin(), sched.end());
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::vector<std::string> failed;
  std::int64_t total_points = 0, total_instances = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      failed.push_back(stems[i]);
      continue;
    }
    nlohmann::ordered_json row;
    row["id"] = stems[i];
    row["points"] = points[i];
    row["instances"] = instances[i];
    rows.push_back(std::move(row));
    total_points += points[i];
    total_instances += instances[i];
  }
  summary["scans"] = std::move(rows);
  summary["total_points"] = total_points;
  summary["total_instances"] = total_instances;
  summary["failed"] = failed;
  write_text(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) log("error: %s: %s", stems[i].c_str(), errors[i].c_str());
  }
  log("segmented %zu scans (%zu failed) in %.2f s", n - failed.size(), failed.size(),
      omp_get_wtime() - t0);
  return failed.empty() ? 0 : 3;
}

int run_evaluate(const EvaluateOpts& o) {
  const Vocabulary vocab = resolve_vocab(o.vocab);
  const LabelSpace gt_space = parse_space(o.gt_space);
  const std::vector<std::string> stems = list_stems(o.pred_dir, ".label");
  fs::create_directories(o.out);

  const std::size_t n = stems.size();
  std::vector<std::string> errors(n);
  std::vector<ScanStats> stats(n);
  std::vector<char> ok(n, 0);

#pragma omp parallel for num_threads(thread_count(o.workers)) schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const std::string& stem = stems[static_cast<std::size_t>(i)];
    try {
      const fs::path pred_path = fs::path(o.pred_dir) / (stem + ".label");
      PanopticPrediction pred = read_labels(pred_path, LabelSpace::vocab);
      pred = normalize_vocab_labels(std::move(pred), vocab, pred_path.string());

      const fs::path gt_path = fs::path(o.gt_dir) / (stem + ".label");
      const LabelMap gt_stored = read_labels(gt_path, pred.size(), gt_space);
      LabelMap gt_vocab;
      LabelMap gt_fine;
      if (gt_space == LabelSpace::raw) {
        gt_vocab = remap_labels(gt_stored, vocab);
        gt_fine = gt_stored;
      } else {
        gt_vocab = normalize_vocab_labels(gt_stored, vocab, gt_path.string());
        gt_fine = gt_vocab;
      }
      stats[static_cast<std::size_t>(i)] = evaluate_scan(pred, gt_vocab, gt_fine, vocab);
      ok[static_cast<std::size_t>(i)] = 1;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }

  std::vector<ScanStats> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) kept.push_back(std::move(stats[i]));
  }
  const EvalReport report = aggregate_report(kept, vocab);
  write_text(fs::path(o.out) / "report.json", render_report_json(report));
  write_text(fs::path(o.out) / "report.txt", render_report_text(report));

  bool any_failed = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      log("error: %s: %s", stems[i].c_str(), errors[i].c_str());
      any_failed = true;
    }
  }
  log("evaluated %zu scans: PQ %.4f SQ %.4f RQ %.4f mIoU %.4f UQ %.4f", kept.size(), report.pq,
      report.sq, report.rq, report.miou, report.unknown.uq);
  return any_failed ? 3 : 0;
}

int run_train(const TrainOpts& o) {
  const Vocabulary vocab = resolve_vocab(o.vocab);
  const LabelSpace space = parse_space(o.label_space);
  const SegMode mode = parse_mode(o.mode);
  TrainConfig cfg;
  if (o.objective == "regress") {
    cfg.mode = TrainMode::regression;
  } else if (o.objective == "classify") {
    cfg.mode = TrainMode::classification;
  } else {
    throw config_error("objective must be 'regress' or 'classify', got '" + o.objective + "'");
  }
  cfg.lr = o.lr;
  cfg.batch = o.batch;
  cfg.epochs = o.epochs;
  cfg.hidden = o.hidden;
  cfg.resample = o.resample;
  cfg.seed = o.seed;
  const std::string gt_dir = o.gt_dir.empty() ? o.label_dir : o.gt_dir;
  const std::vector<double> schedule =
      o.schedule.empty()
          ? std::vector<double>(default_schedule().begin(), default_schedule().end())
          : o.schedule;

  const std::vector<std::string> stems = list_stems(o.cloud_dir, ".bin");
  const std::size_t n = stems.size();
  std::vector<std::string> errors(n);
  std::vector<TrainingSet> per_scan(n);

#pragma omp parallel for num_threads(thread_count(o.workers)) schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const std::string& stem = stems[static_cast<std::size_t>(i)];
    try {
      const PointCloud cloud = read_point_cloud(fs::path(o.cloud_dir) / (stem + ".bin"));
      const LabelMap sem = load_vocab_semantics(fs::path(o.label_dir) / (stem + ".label"),
                                                cloud.size(), space, vocab);
      const LabelMap gt = load_vocab_semantics(fs::path(gt_dir) / (stem + ".label"),
                                               cloud.size(), space, vocab);
      const std::vector<std::vector<int>> gt_sets = instance_sets(gt, vocab);
      TrainingSet& ts = per_scan[static_cast<std::size_t>(i)];
      for (const std::vector<int>& mask : segmentation_masks(sem, vocab, mode)) {
        const SegForest forest = build_forest(cloud.points, mask, schedule);
        TrainingSet part = make_training_set(forest, cloud.points, gt_sets, stem);
        ts.rows.insert(ts.rows.end(), std::make_move_iterator(part.rows.begin()),
                       std::make_move_iterator(part.rows.end()));
      }
      log("collected %zu rows from %s", ts.rows.size(), stem.c_str());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }

  bool any_failed = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      log("error: %s: %s", stems[i].c_str(), errors[i].c_str());
      any_failed = true;
    }
  }
  if (any_failed) return 3;

  TrainingSet set;
  for (TrainingSet& ts : per_scan) {
    set.rows.insert(set.rows.end(), std::make_move_iterator(ts.rows.begin()),
                    std::make_move_iterator(ts.rows.end()));
  }
  if (cfg.mode == TrainMode::classification) set = binarize_targets(set);
  if (set.rows.empty()) throw training_error("no training rows were collected");

  const ScorerModel model = train_scorer(set, cfg);

  fs::create_directories(o.out);
  save_scorer(model, fs::path(o.out) / "scorer.model");
  std::string curve;
  char buf[64];
  for (std::size_t e = 0; e < model.loss_curve.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu %.17g\n", e, model.loss_curve[e]);
    curve += buf;
  }
  write_text(fs::path(o.out) / "loss_curve.txt", curve);
  log("trained %s scorer on %zu rows, final loss %.6g", o.objective.c_str(), set.rows.size(),
      model.loss_curve.empty() ? 0.0 : model.loss_curve.back());
  return 0;
}

int run_transfer(const TransferOpts& o) {
  const LabelSpace space = parse_space(o.label_space);
  PointCloud map_cloud = read_point_cloud(o.map_cloud);
  LabelMap map_labels = read_labels(o.map_labels, map_cloud.size(), space);
  const AccumulatedMap map = build_map(std::move(map_cloud), std::move(map_labels), o.radius);

  const std::vector<std::string> stems = list_stems(o.cloud_dir, ".bin");
  const std::vector<Pose> poses = read_poses(o.poses);
  if (poses.size() != stems.size()) {
    throw format_error("pose count " + std::to_string(poses.size()) +
                       " does not match scan count " + std::to_string(stems.size()));
  }
  fs::create_directories(o.out);

  bool any_failed = false;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    try {
      const PointCloud cloud = read_point_cloud(fs::path(o.cloud_dir) / (stems[i] + ".bin"));
      const LabelMap out = transfer_labels(cloud, poses[i], map, o.radius);
      write_labels(out, fs::path(o.out) / (stems[i] + ".label"));
      std::size_t hits = 0;
      for (std::size_t k = 0; k < out.size(); ++k) {
        if (out.semantic[k] != 0 || out.instance[k] != 0) ++hits;
      }
      log("transferred %s: %zu of %zu points labeled", stems[i].c_str(), hits, cloud.size());
    } catch (const std::exception& e) {
      log("error: %s: %s", stems[i].c_str(), e.what());
      any_failed = true;
    }
  }
  return any_failed ? 3 : 0;
}

int run_generate(const GenerateOpts& o) {
  if (o.count < 1) throw config_error("--count must be at least 1");
  const SceneSpec base = parse_scene_spec(slurp(o.spec), o.spec);
  const std::uint64_t seed0 = o.seed_given ? o.seed : base.seed;

  fs::create_directories(fs::path(o.out) / "velodyne");
  fs::create_directories(fs::path(o.out) / "labels");
  for (int i = 0; i < o.count; ++i) {
    SceneSpec spec = base;
    spec.seed = seed0 + static_cast<std::uint64_t>(i);
    const SynthScene scene = generate_scene(spec);
    char name[16];
    std::snprintf(name, sizeof(name), "%06d", i);
    write_point_cloud(scene.cloud, fs::path(o.out) / "velodyne" / (std::string(name) + ".bin"));
    write_labels(scene.labels, fs::path(o.out) / "labels" / (std::string(name) + ".label"));
    log("generated %s: %zu points, %d instances", name, scene.cloud.size(), scene.num_instances);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hierarchical lidar panoptic segmentation toolkit"};
  app.require_subcommand(1);

  SegmentOpts seg;
  EvaluateOpts ev;
  TrainOpts tr;
  TransferOpts xf;
  GenerateOpts gen;

  CLI::App* s = app.add_subcommand("segment", "segment scans into panoptic labels");
  s->add_option("--cloud-dir", seg.cloud_dir, "directory of *.bin scans")
      ->required()
      ->envname("LPS_CLOUD_DIR");
  s->add_option("--label-dir", seg.label_dir, "directory of per-point semantic *.label files")
      ->required()
      ->envname("LPS_LABEL_DIR");
  s->add_option("--label-space", seg.label_space, "label id space: raw or vocab")
      ->envname("LPS_LABEL_SPACE");
  s->add_option("--score-dir", seg.score_dir, "directory of per-point *.score files")
      ->envname("LPS_SCORE_DIR");
  s->add_option("--vocab", seg.vocab, "vocab1, vocab2, or a vocabulary config path")
      ->envname("LPS_VOCAB");
  s->add_option("--scorer", seg.scorer, "oracle, point-avg, or model:<path>")
      ->envname("LPS_SCORER");
  s->add_option("--mode", seg.mode, "agnostic or specific")->envname("LPS_MODE");
  s->add_option("--schedule", seg.schedule, "comma-separated epsilon schedule, coarse to fine")
      ->delimiter(',')
      ->envname("LPS_SCHEDULE");
  s->add_option("--workers", seg.workers, "scan-level worker threads, 0 = auto")
      ->envname("LPS_WORKERS");
  s->add_option("--out", seg.out, "output directory")->required()->envname("LPS_OUT");

  CLI::App* e = app.add_subcommand("evaluate", "score predictions against ground truth");
  e->add_option("--pred-dir", ev.pred_dir, "directory of predicted *.label files")
      ->required()
      ->envname("LPS_PRED_DIR");
  e->add_option("--gt-dir", ev.gt_dir, "directory of ground-truth *.label files")
      ->required()
      ->envname("LPS_GT_DIR");
  e->add_option("--gt-space", ev.gt_space, "ground-truth id space: raw or vocab")
      ->envname("LPS_GT_SPACE");
  e->add_option("--vocab", ev.vocab, "vocab1, vocab2, or a vocabulary config path")
      ->envname("LPS_VOCAB");
  e->add_option("--workers", ev.workers, "scan-level worker threads, 0 = auto")
      ->envname("LPS_WORKERS");
  e->add_option("--out", ev.out, "output directory")->required()->envname("LPS_OUT");

  CLI::App* t = app.add_subcommand("train-scorer", "fit an objectness scorer on annotated scans");
  t->add_option("--cloud-dir", tr.cloud_dir, "directory of *.bin scans")
      ->required()
      ->envname("LPS_CLOUD_DIR");
  t->add_option("--label-dir", tr.label_dir, "semantic *.label files used to build forests")
      ->required()
      ->envname("LPS_LABEL_DIR");
  t->add_option("--gt-dir", tr.gt_dir, "instance ground truth, defaults to --label-dir")
      ->envname("LPS_GT_DIR");
  t->add_option("--label-space", tr.label_space, "label id space: raw or vocab")
      ->envname("LPS_LABEL_SPACE");
  t->add_option("--vocab", tr.vocab, "vocab1, vocab2, or a vocabulary config path")
      ->envname("LPS_VOCAB");
  t->add_option("--mode", tr.mode, "agnostic or specific")->envname("LPS_MODE");
  t->add_option("--objective", tr.objective, "regress or classify")->envname("LPS_OBJECTIVE");
  t->add_option("--schedule", tr.schedule, "comma-separated epsilon schedule, coarse to fine")
      ->delimiter(',')
      ->envname("LPS_SCHEDULE");
  t->add_option("--lr", tr.lr, "learning rate")->envname("LPS_LR");
  t->add_option("--batch", tr.batch, "minibatch size")->envname("LPS_BATCH");
  t->add_option("--epochs", tr.epochs, "training epochs")->envname("LPS_EPOCHS");
  t->add_option("--hidden", tr.hidden, "hidden units, 0 = linear")->envname("LPS_HIDDEN");
  t->add_flag("--resample", tr.resample, "inverse-class-frequency resampling (classify only)")
      ->envname("LPS_RESAMPLE");
  t->add_option("--seed", tr.seed, "training seed")->envname("LPS_SEED");
  t->add_option("--workers", tr.workers, "scan-level worker threads, 0 = auto")
      ->envname("LPS_WORKERS");
  t->add_option("--out", tr.out, "output directory")->required()->envname("LPS_OUT");

  CLI::App* x = app.add_subcommand("transfer-labels", "project map labels onto scans");
  x->add_option("--map-cloud", xf.map_cloud, "accumulated map cloud (*.bin)")
      ->required()
      ->envname("LPS_MAP_CLOUD");
  x->add_option("--map-labels", xf.map_labels, "map labels (*.label)")
      ->required()
      ->envname("LPS_MAP_LABELS");
  x->add_option("--label-space", xf.label_space, "map label id space: raw or vocab")
      ->envname("LPS_LABEL_SPACE");
  x->add_option("--cloud-dir", xf.cloud_dir, "directory of *.bin scans")
      ->required()
      ->envname("LPS_CLOUD_DIR");
  x->add_option("--poses", xf.poses, "scan-to-map poses, one 3x4 row-major line per scan")
      ->required()
      ->envname("LPS_POSES");
  x->add_option("--radius", xf.radius, "transfer radius in meters")->envname("LPS_RADIUS");
  x->add_option("--out", xf.out, "output directory")->required()->envname("LPS_OUT");

  CLI::App* g = app.add_subcommand("generate", "synthesize annotated scenes");
  g->add_option("--spec", gen.spec, "scene spec JSON path")->required()->envname("LPS_SPEC");
  g->add_option("--count", gen.count, "number of scenes")->envname("LPS_COUNT");
  CLI::Option* seed_opt =
      g->add_option("--seed", gen.seed, "base seed, overrides the spec")->envname("LPS_SEED");
  g->add_option("--out", gen.out, "output directory")->required()->envname("LPS_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }
  gen.seed_given = seed_opt->count() > 0;

  try {
    if (s->parsed()) return run_segment(seg);
    if (e->parsed()) return run_evaluate(ev);
    if (t->parsed()) return run_train(tr);
    if (x->parsed()) return run_transfer(xf);
    if (g->parsed()) return run_generate(gen);
  } catch (const config_error& err) {
    log("config error: %s", err.what());
    return 2;
  } catch (const std::invalid_argument& err) {
    log("config error: %s", err.what());
    return 2;
  } catch (const std::exception& err) {
    log("error: %s", err.what());
    return 3;
  }
  return 2;
}

}  // namespace lps
