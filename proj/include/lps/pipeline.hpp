#pragma once

#include <span>
#include <vector>

#include "lps/core.hpp"
#include "lps/objectness.hpp"
#include "lps/segtree.hpp"
#include "lps/vocab.hpp"

namespace lps {

/// The canonical six-step clustering schedule, coarsest first.
std::span<const double> default_schedule();

enum class SegMode { class_agnostic, class_specific };

struct PipelineConfig {
  std::vector<double> schedule;  // empty selects default_schedule()
  SegMode mode = SegMode::class_agnostic;
};

/// Ground-truth instance point sets of the instance-bearing (thing/other)
/// classes, sorted index lists ordered by (class id, instance id). Instances
/// are keyed per class, so equal ids under different classes stay separate.
std::vector<std::vector<int>> instance_sets(const LabelMap& labels, const Vocabulary& vocab);

/// Scorer closure over score_segment for use with tree_cut. The referenced
/// model, points and context must outlive the closure.
NodeScorer make_node_scorer(const ScorerModel& model, std::span<const Vec3> points,
                            const ScoreContext& ctx);

/// Full per-scan segmentation: selects thing/other points from the ingested
/// semantics, builds one forest (class-agnostic) or one per predicted class
/// with `other` kept whole (class-specific), cuts each forest with the
/// scorer, and numbers the resulting segments 1..M in order of their smallest
/// point index. Stuff and ignored points carry instance 0; semantics pass
/// through unchanged.
PanopticPrediction segment_scan(const PointCloud& cloud, const LabelMap& semantics,
                                const Vocabulary& vocab, const ScorerModel& model,
                                const ScoreContext& ctx, const PipelineConfig& cfg = {});

/// Reassigns each instance's points to the instance's most frequent semantic
/// class, smallest class id on ties. Points without an instance are left
/// alone. Idempotent.
void majority_vote(PanopticPrediction& pred);

}  // namespace lps
