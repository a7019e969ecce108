#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lps/core.hpp"
#include "lps/segtree.hpp"

namespace lps {

// Per-segment descriptor fed to the learned scorers:
//   [ log(1+n), bbox dx, dy, dz, mid/major eigenvalue ratio,
//     minor/major eigenvalue ratio, centroid height above min z,
//     mean distance to the nearest other segment point, constant 1 ]
constexpr int kFeatureDim = 9;
using SegmentFeatures = std::array<double, kFeatureDim>;

/// Singletons get zero extents, zero eigenvalue ratios and zero neighbor
/// distance. Empty segments raise std::invalid_argument.
SegmentFeatures extract_features(std::span<const Vec3> points, std::span<const int> segment);

/// IoU of two sorted index sets. Both empty gives 0.
double segment_iou(std::span<const int> a, std::span<const int> b);

/// Best IoU of the segment against any ground-truth instance; 0 when there
/// are none. Segment and instances must be sorted index sets.
double oracle_score(std::span<const int> segment,
                    const std::vector<std::vector<int>>& gt_instances);

/// Mean of the per-point scores over the segment. Scores must sit in [0, 1].
double point_average_score(std::span<const int> segment, std::span<const float> scores);

enum class ScorerKind { oracle, point_average, learned_regressor, learned_classifier };

/// Scoring model. Learned kinds standardize features with the stored mean and
/// deviation, apply either a linear map or one tanh hidden layer, and squash
/// the result through a sigmoid, so outputs always sit in [0, 1].
struct ScorerModel {
  ScorerKind kind = ScorerKind::oracle;
  int feature_dim = 0;
  int hidden = 0;  // 0 selects the linear form
  std::vector<double> mean, stdev;
  std::vector<double> w1;  // hidden x feature_dim, row-major
  std::vector<double> w2;  // hidden + 1 (trailing bias), or feature_dim when linear
  std::uint64_t seed = 0;
  int epochs = 0;
  std::vector<double> loss_curve;  // mean training loss per epoch

  std::size_t num_weights() const { return w1.size() + w2.size(); }
};

ScorerModel make_oracle_scorer();
ScorerModel make_point_average_scorer();

double model_forward(const ScorerModel& model, const SegmentFeatures& raw);

struct TrainingRow {
  SegmentFeatures features{};
  double target = 0.0;
  std::string scan_id;
  int node_id = -1;
};

struct TrainingSet {
  std::vector<TrainingRow> rows;
};

/// One row per forest node; targets are the oracle scores against the given
/// ground-truth instances.
TrainingSet make_training_set(const SegForest& forest, std::span<const Vec3> points,
                              const std::vector<std::vector<int>>& gt_instances,
                              const std::string& scan_id);

/// Keeps rows with target >= hi as positives (target 1) and target <= lo as
/// negatives (target 0); rows strictly between are dropped. Requires lo < hi.
TrainingSet binarize_targets(const TrainingSet& set, double hi = 0.7, double lo = 0.3);

enum class TrainMode { regression, classification };

struct TrainConfig {
  TrainMode mode = TrainMode::regression;
  double lr = 2e-3;
  int batch = 512;
  int epochs = 200;
  int hidden = 0;
  bool resample = false;  // classification only: inverse-class-frequency draws
  std::uint64_t seed = 0;
};

/// Row visit order for one epoch: a seeded shuffle, or with resampling
/// enabled a weighted redraw of set.rows.size() indices where each class is
/// picked proportionally to its inverse frequency. Exposed so batch
/// composition can be audited; training uses exactly this order.
std::vector<std::size_t> epoch_row_order(const TrainingSet& set, const TrainConfig& cfg,
                                         int epoch);

/// Minibatch SGD on MSE (regression) or logistic loss (classification).
/// Bit-reproducible for a fixed (set, config); divergence raises
/// training_error naming the epoch.
ScorerModel train_scorer(const TrainingSet& set, const TrainConfig& cfg);

/// Loss of one row and its gradient with respect to the flattened weights
/// [w1, w2]. grad.size() must equal model.num_weights().
double loss_and_grad(const ScorerModel& model, const SegmentFeatures& raw, double target,
                     TrainMode mode, std::span<double> grad);

/// Versioned text format; numbers are printed with enough digits to
/// round-trip exactly. Only learned kinds can be saved.
void save_scorer(const ScorerModel& model, const std::filesystem::path& path);
ScorerModel load_scorer(const std::filesystem::path& path);

/// Side inputs for the non-learned scorers.
struct ScoreContext {
  const std::vector<std::vector<int>>* gt_instances = nullptr;  // oracle
  std::span<const float> point_scores = {};                     // point_average
};

/// Dispatch on model.kind; a missing context member for the requested kind
/// raises std::invalid_argument.
double score_segment(const ScorerModel& model, std::span<const Vec3> points,
                     std::span<const int> segment, const ScoreContext& ctx);

}  // namespace lps
