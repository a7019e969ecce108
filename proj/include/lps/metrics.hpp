#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lps/core.hpp"
#include "lps/vocab.hpp"

namespace lps {

struct InstanceMatch {
  std::uint32_t pred_id = 0, gt_id = 0;
  double iou = 0.0;
};

/// Matching outcome for one class on one scan. Matches require IoU > 0.5,
/// which makes the assignment one-to-one without any search.
struct MatchSet {
  std::vector<InstanceMatch> tp;
  std::int64_t fp = 0, fn = 0;
  double iou_sum = 0.0;
};

/// Summable form of a MatchSet.
struct ClassCounts {
  std::int64_t tp = 0, fp = 0, fn = 0;
  double iou_sum = 0.0;
};

ClassCounts to_counts(const MatchSet& m);

/// Instance matching for thing/other classes, whole-region matching for
/// stuff. Points carrying the ignore id in the ground truth are removed from
/// both sides before any IoU is computed.
MatchSet match_instances(const PanopticPrediction& pred, const LabelMap& gt,
                         std::uint32_t class_id, const Vocabulary& vocab);

struct PqStats {
  double pq = 0.0, sq = 0.0, rq = 0.0;
};

/// SQ = mean matched IoU, RQ = tp / (tp + fp/2 + fn/2), PQ = SQ * RQ.
PqStats pq_sq_rq(const MatchSet& m);
PqStats pq_sq_rq(const ClassCounts& c);

struct UnknownStats {
  double uq = 0.0, recall = 0.0, sq = 0.0;
  std::int64_t tp = 0, fn = 0;
  double iou_sum = 0.0;
};

/// Quality of the catch-all class: like PQ but with recall in place of RQ, so
/// unmatched predictions carry no penalty. Unlabeled points (ignore id in the
/// ground truth) are removed from predicted segments before matching.
UnknownStats unknown_quality(const PanopticPrediction& pred, const LabelMap& gt,
                             const Vocabulary& vocab);

struct IouStats {
  std::vector<std::int64_t> inter, pred_pts, gt_pts;  // indexed by class id, size K+2
  double miou = 0.0;  // unweighted mean over classes present in the ground truth

  double class_iou(std::uint32_t c) const {
    const std::int64_t uni = pred_pts[c] + gt_pts[c] - inter[c];
    return uni > 0 ? static_cast<double>(inter[c]) / static_cast<double>(uni) : 0.0;
  }
};

/// Pointwise IoU over all K+1 classes; the catch-all participates like any
/// other class. Ignored ground-truth points are excluded entirely.
IouStats miou(const PanopticPrediction& pred, const LabelMap& gt, const Vocabulary& vocab);

struct PrStats {
  double precision = 0.0, recall = 0.0;
  bool precision_defined = false, recall_defined = false;
};

/// Pools match sets of the known thing classes. Undefined ratios (no
/// predictions, or no ground truth) are reported as 0 with the flag cleared.
PrStats instance_pr(std::span<const MatchSet> thing_matches);
PrStats instance_pr(const ClassCounts& pooled);

/// Point-count confusion with predicted vocabulary classes as rows and, when
/// the ground truth is raw, the catch-all split into its fine-grained source
/// classes as extra columns.
struct ExtendedConfusion {
  std::vector<std::string> row_names;  // classes 1..K+1
  std::vector<std::string> col_names;  // known classes, then the fine split
  std::vector<std::int64_t> counts;    // row-major

  std::int64_t at(std::size_t row, std::size_t col) const {
    return counts[row * col_names.size() + col];
  }
};

ExtendedConfusion extended_confusion(const PanopticPrediction& pred, const LabelMap& gt,
                                     const Vocabulary& vocab);

/// Per-scan evaluation bundle; scans sum field-wise.
struct ScanStats {
  std::uint32_t num_classes = 0;              // K+1
  std::vector<ClassCounts> per_class;         // indexed by class id, size K+2
  ClassCounts unknown;                        // fp always 0
  std::vector<std::int64_t> inter, pred_pts, gt_pts;  // size K+2
  ExtendedConfusion confusion;
};

/// gt_fine feeds the confusion matrix: pass raw labels when available, or the
/// vocab-space ground truth again to fall back to a single catch-all column.
ScanStats evaluate_scan(const PanopticPrediction& pred, const LabelMap& gt,
                        const LabelMap& gt_fine, const Vocabulary& vocab);

struct ClassReport {
  std::uint32_t id = 0;
  std::string name;
  ClassKind kind = ClassKind::thing;
  bool present = false;  // any tp, fp or fn after summing
  double pq = 0.0, sq = 0.0, rq = 0.0, iou = 0.0;
  bool iou_defined = false;
  std::int64_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  std::uint32_t num_known = 0;
  std::int64_t scans = 0;
  std::vector<ClassReport> per_class;  // known classes 1..K
  double pq = 0.0, pq_things = 0.0, pq_stuff = 0.0, sq = 0.0, rq = 0.0;
  double miou = 0.0;
  PrStats things_pr;
  struct {
    double uq = 0.0, recall = 0.0, sq = 0.0, iou = 0.0;
    std::int64_t tp = 0, fn = 0;
    bool iou_defined = false;
  } unknown;
  ExtendedConfusion confusion;
};

/// Sums per-scan stats and derives every rate once at the end. Scans
/// evaluated under different vocabularies raise config_error.
EvalReport aggregate_report(std::span<const ScanStats> stats, const Vocabulary& vocab);

std::string render_report_json(const EvalReport& r);
std::string render_report_text(const EvalReport& r);

}  // namespace lps
