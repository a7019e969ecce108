#include "lps/objectness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "lps/rng.hpp"
#include "lps/spatial_grid.hpp"

namespace lps {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Mean distance to the nearest other point of the segment. Direct scan for
// small segments; grid with an expanding search radius for the rest.
double mean_nearest_neighbor(const std::vector<Vec3>& pts) {
  const std::size_t n = pts.size();
  double sum = 0.0;
  if (n <= 64) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        best = std::min(best, squared_dist(pts[i], pts[j]));
      }
      sum += std::sqrt(best);
    }
    return sum / static_cast<double>(n);
  }

  const SpatialGrid grid = SpatialGrid::build(pts);
  double extent = grid.cell_size();
  {
    Vec3 lo = pts[0], hi = pts[0];
    for (const Vec3& p : pts) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    extent = std::max(extent, std::sqrt(squared_dist(lo, hi)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double r = grid.cell_size();
    double best = std::numeric_limits<double>::infinity();
    while (true) {
      grid.visit_ball(pts[i], r, [&](int j, double d2) {
        if (static_cast<std::size_t>(j) != i) best = std::min(best, d2);
      });
      if (best <= r * r || r > extent) break;  // a farther cell cannot beat r
      r *= 2.0;
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(n);
}

}  // namespace

SegmentFeatures extract_features(std::span<const Vec3> points, std::span<const int> segment) {
  if (segment.empty()) throw std::invalid_argument("extract_features: empty segment");
  const std::size_t n = segment.size();

  std::vector<Vec3> pts(n);
  Vec3 lo, hi, centroid{0, 0, 0};
  for (std::size_t k = 0; k < n; ++k) {
    const int idx = segment[k];
    if (idx < 0 || static_cast<std::size_t>(idx) >= points.size()) {
      throw std::out_of_range("extract_features: segment index out of range");
    }
    const Vec3 p = points[static_cast<std::size_t>(idx)];
    pts[k] = p;
    centroid = centroid + p;
    if (k == 0) {
      lo = hi = p;
    } else {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
  }
  centroid = (1.0 / static_cast<double>(n)) * centroid;

  SegmentFeatures f{};
  f[0] = std::log1p(static_cast<double>(n));
  f[1] = hi.x - lo.x;
  f[2] = hi.y - lo.y;
  f[3] = hi.z - lo.z;

  if (n > 1) {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : pts) {
      const Eigen::Vector3d d(p.x - centroid.x, p.y - centroid.y, p.z - centroid.z);
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
    const double major = std::max(ev[2], 0.0);
    if (major > 1e-18) {
      f[4] = std::max(ev[1], 0.0) / major;
      f[5] = std::max(ev[0], 0.0) / major;
    }
    f[7] = mean_nearest_neighbor(pts);
  }

  f[6] = centroid.z - lo.z;
  f[8] = 1.0;
  return f;
}

double segment_iou(std::span<const int> a, std::span<const int> b) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double oracle_score(std::span<const int> segment,
                    const std::vector<std::vector<int>>& gt_instances) {
  double best = 0.0;
  for (const auto& gt : gt_instances) {
    best = std::max(best, segment_iou(segment, gt));
  }
  return best;
}

double point_average_score(std::span<const int> segment, std::span<const float> scores) {
  if (segment.empty()) throw std::invalid_argument("point_average_score: empty segment");
  double sum = 0.0;
  for (int idx : segment) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= scores.size()) {
      throw std::out_of_range("point_average_score: index out of range");
    }
    const float s = scores[static_cast<std::size_t>(idx)];
    if (!(s >= 0.0f && s <= 1.0f)) {
      throw std::invalid_argument("point_average_score: score out of [0,1]");
    }
    sum += static_cast<double>(s);
  }
  return sum / static_cast<double>(segment.size());
}

ScorerModel make_oracle_scorer() {
  ScorerModel m;
  m.kind = ScorerKind::oracle;
  return m;
}

ScorerModel make_point_average_scorer() {
  ScorerModel m;
  m.kind = ScorerKind::point_average;
  return m;
}

double model_forward(const ScorerModel& model, const SegmentFeatures& raw) {
  if (model.kind != ScorerKind::learned_regressor &&
      model.kind != ScorerKind::learned_classifier) {
    throw std::invalid_argument("model_forward: model is not a learned scorer");
  }
  if (model.feature_dim != kFeatureDim) {
    throw std::invalid_argument("model_forward: feature dimension mismatch");
  }
  std::array<double, kFeatureDim> x;
  for (int j = 0; j < kFeatureDim; ++j) {
    x[static_cast<std::size_t>(j)] =
        (raw[static_cast<std::size_t>(j)] - model.mean[static_cast<std::size_t>(j)]) /
        model.stdev[static_cast<std::size_t>(j)];
  }
  double z = 0.0;
  if (model.hidden == 0) {
    for (int j = 0; j < kFeatureDim; ++j) {
      z += model.w2[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    }
  } else {
    for (int k = 0; k < model.hidden; ++k) {
      double a = 0.0;
      for (int j = 0; j < kFeatureDim; ++j) {
        a += model.w1[static_cast<std::size_t>(k * kFeatureDim + j)] *
             x[static_cast<std::size_t>(j)];
      }
      z += model.w2[static_cast<std::size_t>(k)] * std::tanh(a);
    }
    z += model.w2[static_cast<std::size_t>(model.hidden)];
  }
  return sigmoid(z);
}

TrainingSet make_training_set(const SegForest& forest, std::span<const Vec3> points,
                              const std::vector<std::vector<int>>& gt_instances,
                              const std::string& scan_id) {
  TrainingSet set;
  const int n = static_cast<int>(forest.num_nodes());
  set.rows.resize(static_cast<std::size_t>(n));

  // Inverted ownership map turns each oracle lookup into a walk over the
  // segment instead of a walk over every ground-truth instance.
  std::vector<int> owner;
  {
    std::size_t npts = points.size();
    owner.assign(npts, -1);
    for (std::size_t g = 0; g < gt_instances.size(); ++g) {
      for (int idx : gt_instances[g]) {
        if (idx >= 0 && static_cast<std::size_t>(idx) < npts) {
          owner[static_cast<std::size_t>(idx)] = static_cast<int>(g);
        }
      }
    }
  }

#pragma omp parallel for schedule(dynamic, 8)
  for (int id = 0; id < n; ++id) {
    const SegNode& node = forest.nodes[static_cast<std::size_t>(id)];
    TrainingRow& row = set.rows[static_cast<std::size_t>(id)];
    row.features = extract_features(points, node.point_indices);
    row.scan_id = scan_id;
    row.node_id = id;

    std::vector<std::pair<int, int>> overlap;  // (gt index, count)
    for (int idx : node.point_indices) {
      const int g = owner[static_cast<std::size_t>(idx)];
      if (g < 0) continue;
      bool found = false;
      for (auto& [gi, cnt] : overlap) {
        if (gi == g) {
          ++cnt;
          found = true;
          break;
        }
      }
      if (!found) overlap.emplace_back(g, 1);
    }
    double best = 0.0;
    for (const auto& [g, inter] : overlap) {
      const double uni = static_cast<double>(node.point_indices.size()) +
                         static_cast<double>(gt_instances[static_cast<std::size_t>(g)].size()) -
                         static_cast<double>(inter);
      best = std::max(best, static_cast<double>(inter) / uni);
    }
    row.target = best;
  }
  return set;
}

TrainingSet binarize_targets(const TrainingSet& set, double hi, double lo) {
  if (!(lo < hi)) throw std::invalid_argument("binarize_targets: need lo < hi");
  TrainingSet out;
  for (const TrainingRow& row : set.rows) {
    if (row.target >= hi) {
      out.rows.push_back(row);
      out.rows.back().target = 1.0;
    } else if (row.target <= lo) {
      out.rows.push_back(row);
      out.rows.back().target = 0.0;
    }
  }
  return out;
}

std::vector<std::size_t> epoch_row_order(const TrainingSet& set, const TrainConfig& cfg,
                                         int epoch) {
  const std::size_t n = set.rows.size();
  Rng rng(cfg.seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1));
  std::vector<std::size_t> order;

  if (cfg.mode == TrainMode::classification && cfg.resample) {
    std::size_t pos = 0;
    for (const TrainingRow& r : set.rows) {
      if (r.target != 0.0 && r.target != 1.0) {
        throw std::invalid_argument("epoch_row_order: resampling needs binary targets");
      }
      if (r.target == 1.0) ++pos;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) {
      throw std::invalid_argument("epoch_row_order: resampling needs both classes present");
    }
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = set.rows[i].target == 1.0 ? 1.0 / static_cast<double>(pos)
                                             : 1.0 / static_cast<double>(neg);
    }
    DiscreteSampler sampler(weights);
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = sampler.sample(rng);
  } else {
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
  }
  return order;
}

double loss_and_grad(const ScorerModel& model, const SegmentFeatures& raw, double target,
                     TrainMode mode, std::span<double> grad) {
  if (grad.size() != model.num_weights()) {
    throw std::invalid_argument("loss_and_grad: gradient buffer size mismatch");
  }
  const int F = kFeatureDim;
  std::array<double, kFeatureDim> x;
  for (int j = 0; j < F; ++j) {
    x[static_cast<std::size_t>(j)] =
        (raw[static_cast<std::size_t>(j)] - model.mean[static_cast<std::size_t>(j)]) /
        model.stdev[static_cast<std::size_t>(j)];
  }

  const int H = model.hidden;
  std::vector<double> h(static_cast<std::size_t>(std::max(H, 0)));
  double z = 0.0;
  if (H == 0) {
    for (int j = 0; j < F; ++j) {
      z += model.w2[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    }
  } else {
    for (int k = 0; k < H; ++k) {
      double a = 0.0;
      for (int j = 0; j < F; ++j) {
        a += model.w1[static_cast<std::size_t>(k * F + j)] * x[static_cast<std::size_t>(j)];
      }
      h[static_cast<std::size_t>(k)] = std::tanh(a);
      z += model.w2[static_cast<std::size_t>(k)] * h[static_cast<std::size_t>(k)];
    }
    z += model.w2[static_cast<std::size_t>(H)];
  }

  double loss, dz;
  const double p = sigmoid(z);
  if (mode == TrainMode::regression) {
    const double e = p - target;
    loss = e * e;
    dz = 2.0 * e * p * (1.0 - p);
  } else {
    // Logistic loss on the raw logit, numerically stable form.
    loss = std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
    dz = p - target;
  }

  const std::size_t w1n = model.w1.size();
  if (H == 0) {
    for (int j = 0; j < F; ++j) {
      grad[static_cast<std::size_t>(j)] = dz * x[static_cast<std::size_t>(j)];
    }
  } else {
    for (int k = 0; k < H; ++k) {
      const double dh = dz * model.w2[static_cast<std::size_t>(k)];
      const double da = dh * (1.0 - h[static_cast<std::size_t>(k)] * h[static_cast<std::size_t>(k)]);
      for (int j = 0; j < F; ++j) {
        grad[static_cast<std::size_t>(k * F + j)] = da * x[static_cast<std::size_t>(j)];
      }
      grad[w1n + static_cast<std::size_t>(k)] = dz * h[static_cast<std::size_t>(k)];
    }
    grad[w1n + static_cast<std::size_t>(H)] = dz;
  }
  return loss;
}

ScorerModel train_scorer(const TrainingSet& set, const TrainConfig& cfg) {
  if (set.rows.empty()) throw std::invalid_argument("train_scorer: empty training set");
  if (cfg.batch < 1 || cfg.epochs < 1 || !(cfg.lr > 0.0) || cfg.hidden < 0) {
    throw std::invalid_argument("train_scorer: bad hyperparameters");
  }
  for (const TrainingRow& r : set.rows) {
    if (!(r.target >= 0.0 && r.target <= 1.0)) {
      throw std::invalid_argument("train_scorer: target out of [0,1]");
    }
  }

  ScorerModel model;
  model.kind = cfg.mode == TrainMode::regression ? ScorerKind::learned_regressor
                                                 : ScorerKind::learned_classifier;
  model.feature_dim = kFeatureDim;
  model.hidden = cfg.hidden;
  model.seed = cfg.seed;
  model.epochs = cfg.epochs;

  // Feature standardization; constant features pass through unscaled so the
  // bias feature keeps its value.
  const double n = static_cast<double>(set.rows.size());
  model.mean.assign(kFeatureDim, 0.0);
  model.stdev.assign(kFeatureDim, 0.0);
  for (const TrainingRow& r : set.rows) {
    for (int j = 0; j < kFeatureDim; ++j) {
      model.mean[static_cast<std::size_t>(j)] += r.features[static_cast<std::size_t>(j)];
    }
  }
  for (int j = 0; j < kFeatureDim; ++j) model.mean[static_cast<std::size_t>(j)] /= n;
  for (const TrainingRow& r : set.rows) {
    for (int j = 0; j < kFeatureDim; ++j) {
      const double d =
          r.features[static_cast<std::size_t>(j)] - model.mean[static_cast<std::size_t>(j)];
      model.stdev[static_cast<std::size_t>(j)] += d * d;
    }
  }
  for (int j = 0; j < kFeatureDim; ++j) {
    double s = std::sqrt(model.stdev[static_cast<std::size_t>(j)] / n);
    if (s < 1e-12) {
      model.mean[static_cast<std::size_t>(j)] = 0.0;
      s = 1.0;
    }
    model.stdev[static_cast<std::size_t>(j)] = s;
  }

  Rng init_rng(cfg.seed);
  const int H = cfg.hidden;
  if (H == 0) {
    model.w2.resize(kFeatureDim);
    const double lim = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
    for (double& w : model.w2) w = init_rng.uniform(-lim, lim);
  } else {
    model.w1.resize(static_cast<std::size_t>(H) * kFeatureDim);
    model.w2.resize(static_cast<std::size_t>(H) + 1);
    const double lim1 = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
    for (double& w : model.w1) w = init_rng.uniform(-lim1, lim1);
    const double lim2 = 1.0 / std::sqrt(static_cast<double>(H + 1));
    for (double& w : model.w2) w = init_rng.uniform(-lim2, lim2);
  }

  const std::size_t wn = model.num_weights();
  const std::size_t w1n = model.w1.size();
  std::vector<double> row_grads;
  std::vector<double> batch_grad(wn);
  std::vector<double> batch_loss;

  model.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_row_order(set, cfg, epoch);
    double epoch_loss = 0.0;

    for (std::size_t beg = 0; beg < order.size(); beg += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), beg + static_cast<std::size_t>(cfg.batch));
      const std::size_t bs = end - beg;
      row_grads.assign(bs * wn, 0.0);
      batch_loss.assign(bs, 0.0);

      // Per-row gradients in parallel; summed serially in row order so the
      // update is identical for every thread count.
#pragma omp parallel for schedule(static)
      for (int r = 0; r < static_cast<int>(bs); ++r) {
        const TrainingRow& row = set.rows[order[beg + static_cast<std::size_t>(r)]];
        batch_loss[static_cast<std::size_t>(r)] = loss_and_grad(
            model, row.features, row.target, cfg.mode,
            std::span<double>(row_grads.data() + static_cast<std::size_t>(r) * wn, wn));
      }

      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      double bloss = 0.0;
      for (std::size_t r = 0; r < bs; ++r) {
        bloss += batch_loss[r];
        const double* g = row_grads.data() + r * wn;
        for (std::size_t w = 0; w < wn; ++w) batch_grad[w] += g[w];
      }
      // The batch objective is the sum of row losses, not the mean: the
      // default recipe (lr 2e-3, batch 512, 200 epochs) only moves far
      // enough to converge when the step scales with the batch.
      for (std::size_t w = 0; w < wn; ++w) {
        double& dst = w < w1n ? model.w1[w] : model.w2[w - w1n];
        dst -= cfg.lr * batch_grad[w];
      }
      epoch_loss += bloss;
    }

    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw training_error("training diverged at epoch " + std::to_string(epoch));
    }
    model.loss_curve.push_back(epoch_loss);
  }
  return model;
}

namespace {

void print_doubles(std::ostream& os, const char* tag, std::span<const double> v) {
  os << tag;
  char buf[40];
  for (double d : v) {
    std::snprintf(buf, sizeof(buf), " %.17g", d);
    os << buf;
  }
  os << "\n";
}

std::vector<double> parse_doubles(std::istringstream& ss, std::size_t count,
                                  const std::string& where) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(ss >> v[i])) throw format_error(where + ": expected " + std::to_string(count) + " values");
  }
  std::string extra;
  if (ss >> extra) throw format_error(where + ": trailing data");
  return v;
}

}  // namespace

void save_scorer(const ScorerModel& model, const std::filesystem::path& path) {
  if (model.kind != ScorerKind::learned_regressor &&
      model.kind != ScorerKind::learned_classifier) {
    throw std::invalid_argument("save_scorer: only learned scorers have a file form");
  }
  if (model.loss_curve.size() != static_cast<std::size_t>(model.epochs)) {
    // The file stores one loss value per epoch; anything else cannot load back.
    throw std::invalid_argument("save_scorer: loss curve length disagrees with epochs");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw format_error("cannot open " + path.string() + " for writing");
  out << "scorer-model v1\n";
  out << "kind " << (model.kind == ScorerKind::learned_regressor ? "regressor" : "classifier")
      << "\n";
  out << "features " << model.feature_dim << "\n";
  out << "hidden " << model.hidden << "\n";
  out << "seed " << model.seed << "\n";
  out << "epochs " << model.epochs << "\n";
  print_doubles(out, "mean", model.mean);
  print_doubles(out, "std", model.stdev);
  if (model.hidden > 0) print_doubles(out, "w1", model.w1);
  print_doubles(out, "w2", model.w2);
  print_doubles(out, "loss", model.loss_curve);
  if (!out) throw format_error("short write on " + path.string());
}

ScorerModel load_scorer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw format_error("cannot open " + path.string());
  const std::string where = path.string();

  auto next_line = [&](const char* tag) {
    std::string line;
    if (!std::getline(in, line)) throw format_error(where + ": missing '" + tag + "' line");
    std::istringstream ss(line);
    std::string got;
    ss >> got;
    if (got != tag) throw format_error(where + ": expected '" + std::string(tag) + "', got '" + got + "'");
    return ss;
  };

  {
    std::string line;
    if (!std::getline(in, line) || line != "scorer-model v1") {
      throw format_error(where + ": not a v1 scorer model file");
    }
  }

  ScorerModel m;
  {
    auto ss = next_line("kind");
    std::string kind;
    ss >> kind;
    if (kind == "regressor") {
      m.kind = ScorerKind::learned_regressor;
    } else if (kind == "classifier") {
      m.kind = ScorerKind::learned_classifier;
    } else {
      throw format_error(where + ": unknown kind '" + kind + "'");
    }
  }
  {
    auto ss = next_line("features");
    if (!(ss >> m.feature_dim) || m.feature_dim != kFeatureDim) {
      throw format_error(where + ": unsupported feature count");
    }
  }
  {
    auto ss = next_line("hidden");
    if (!(ss >> m.hidden) || m.hidden < 0) throw format_error(where + ": bad hidden width");
  }
  {
    auto ss = next_line("seed");
    if (!(ss >> m.seed)) throw format_error(where + ": bad seed");
  }
  {
    auto ss = next_line("epochs");
    if (!(ss >> m.epochs) || m.epochs < 0) throw format_error(where + ": bad epoch count");
  }
  {
    auto ss = next_line("mean");
    m.mean = parse_doubles(ss, kFeatureDim, where + ": mean");
  }
  {
    auto ss = next_line("std");
    m.stdev = parse_doubles(ss, kFeatureDim, where + ": std");
    for (double s : m.stdev) {
      if (!(s > 0.0)) throw format_error(where + ": non-positive deviation");
    }
  }
  if (m.hidden > 0) {
    auto ss = next_line("w1");
    m.w1 = parse_doubles(ss, static_cast<std::size_t>(m.hidden) * kFeatureDim, where + ": w1");
  }
  {
    auto ss = next_line("w2");
    const std::size_t want =
        m.hidden > 0 ? static_cast<std::size_t>(m.hidden) + 1 : static_cast<std::size_t>(kFeatureDim);
    m.w2 = parse_doubles(ss, want, where + ": w2");
  }
  {
    auto ss = next_line("loss");
    m.loss_curve = parse_doubles(ss, static_cast<std::size_t>(m.epochs), where + ": loss");
  }
  return m;
}

double score_segment(const ScorerModel& model, std::span<const Vec3> points,
                     std::span<const int> segment, const ScoreContext& ctx) {
  if (segment.empty()) throw std::invalid_argument("score_segment: empty segment");
  switch (model.kind) {
    case ScorerKind::oracle:
      if (ctx.gt_instances == nullptr) {
        throw std::invalid_argument("score_segment: oracle scorer needs ground-truth instances");
      }
      return oracle_score(segment, *ctx.gt_instances);
    case ScorerKind::point_average:
      if (ctx.point_scores.empty()) {
        throw std::invalid_argument("score_segment: point-average scorer needs per-point scores");
      }
      return point_average_score(segment, ctx.point_scores);
    case ScorerKind::learned_regressor:
    case ScorerKind::learned_classifier:
      return model_forward(model, extract_features(points, segment));
  }
  throw std::invalid_argument("score_segment: unknown scorer kind");
}

}  // namespace lps
