#include "lps/pipeline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace lps {

std::span<const double> default_schedule() {
  static const std::vector<double> schedule = {1.2488, 0.8136, 0.6952, 0.594, 0.4353, 0.3221};
  return schedule;
}

std::vector<std::vector<int>> instance_sets(const LabelMap& labels, const Vocabulary& vocab) {
  if (labels.space != LabelSpace::vocab) {
    throw std::invalid_argument("instance_sets: labels must be in vocabulary space");
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<int>> by_key;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t c = labels.semantic[i];
    if (c == kIgnoreClass || !vocab.is_segmentable(c)) continue;
    if (labels.instance[i] == 0) continue;
    by_key[{c, labels.instance[i]}].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> sets;
  sets.reserve(by_key.size());
  for (auto& [key, pts] : by_key) sets.push_back(std::move(pts));
  return sets;
}

NodeScorer make_node_scorer(const ScorerModel& model, std::span<const Vec3> points,
                            const ScoreContext& ctx) {
  return [&model, points, &ctx](const SegForest& forest, int node_id) {
    return score_segment(model, points, forest.nodes[static_cast<std::size_t>(node_id)].point_indices,
                         ctx);
  };
}

PanopticPrediction segment_scan(const PointCloud& cloud, const LabelMap& semantics,
                                const Vocabulary& vocab, const ScorerModel& model,
                                const ScoreContext& ctx, const PipelineConfig& cfg) {
  if (semantics.space != LabelSpace::vocab) {
    throw std::invalid_argument("segment_scan: semantics must be in vocabulary space");
  }
  if (semantics.size() != cloud.size()) {
    throw std::invalid_argument("segment_scan: label count does not match the cloud");
  }
  std::span<const double> schedule =
      cfg.schedule.empty() ? default_schedule() : std::span<const double>(cfg.schedule);

  // Masks to segment: the full thing/other selection, or one per class.
  std::vector<std::vector<int>> masks;
  if (cfg.mode == SegMode::class_agnostic) {
    masks.emplace_back();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const std::uint32_t c = semantics.semantic[i];
      if (c != kIgnoreClass && vocab.is_segmentable(c)) {
        masks.back().push_back(static_cast<int>(i));
      }
    }
  } else {
    std::map<std::uint32_t, std::vector<int>> by_class;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const std::uint32_t c = semantics.semantic[i];
      if (c != kIgnoreClass && vocab.is_segmentable(c)) {
        by_class[c].push_back(static_cast<int>(i));
      }
    }
    for (auto& [c, mask] : by_class) masks.push_back(std::move(mask));
  }

  PanopticPrediction pred;
  pred.space = LabelSpace::vocab;
  pred.semantic = semantics.semantic;
  pred.instance.assign(cloud.size(), 0);

  const NodeScorer scorer = make_node_scorer(model, cloud.points, ctx);
  std::vector<std::pair<int, const std::vector<int>*>> segments;  // (smallest index, points)
  std::vector<SegForest> forests;
  forests.reserve(masks.size());
  for (const auto& mask : masks) {
    if (mask.empty()) continue;
    forests.push_back(build_forest(cloud.points, mask, schedule));
    SegForest& forest = forests.back();
    const CutResult cut = tree_cut(forest, scorer);
    for (int id : cut.nodes) {
      const std::vector<int>& pts = forest.nodes[static_cast<std::size_t>(id)].point_indices;
      segments.emplace_back(pts.front(), &pts);
    }
  }

  std::sort(segments.begin(), segments.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::uint32_t next_id = 1;
  for (const auto& [first, pts] : segments) {
    for (int idx : *pts) pred.instance[static_cast<std::size_t>(idx)] = next_id;
    ++next_id;
  }
  return pred;
}

void majority_vote(PanopticPrediction& pred) {
  if (pred.space != LabelSpace::vocab) {
    throw std::invalid_argument("majority_vote: prediction must be in vocabulary space");
  }
  std::map<std::uint32_t, std::map<std::uint32_t, std::size_t>> votes;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.instance[i] == 0) continue;
    votes[pred.instance[i]][pred.semantic[i]]++;
  }
  std::map<std::uint32_t, std::uint32_t> winner;
  for (const auto& [inst, counts] : votes) {
    std::uint32_t best_class = 0;
    std::size_t best_count = 0;
    for (const auto& [cls, count] : counts) {  // ascending class id, ties keep the smaller
      if (count > best_count) {
        best_count = count;
        best_class = cls;
      }
    }
    winner[inst] = best_class;
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.instance[i] == 0) continue;
    pred.semantic[i] = winner[pred.instance[i]];
  }
}

}  // namespace lps
