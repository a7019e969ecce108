#include "lps/labelxfer.hpp"

#include <cmath>
#include <stdexcept>

namespace lps {

namespace {

// R^T R = I and det R = 1, within tolerance. Reflections and scaling would
// silently corrupt the transfer, so they are rejected rather than applied.
void check_rigid(const Pose& p) {
  const double r[3][3] = {{p[0], p[1], p[2]}, {p[4], p[5], p[6]}, {p[8], p[9], p[10]}};
  double max_dev = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += r[k][i] * r[k][j];
      max_dev = std::max(max_dev, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  const double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                     r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                     r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  if (max_dev > 1e-6 || std::abs(det - 1.0) > 1e-6) {
    throw std::invalid_argument("transfer_labels: pose rotation is not rigid");
  }
}

}  // namespace

AccumulatedMap build_map(PointCloud cloud, LabelMap labels, double radius) {
  if (labels.size() != cloud.size()) {
    throw std::invalid_argument("build_map: cloud and labels differ in point count");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("build_map: radius must be positive and finite");
  }
  AccumulatedMap m;
  m.cloud = std::move(cloud);
  m.labels = std::move(labels);
  m.index = SpatialGrid::build(m.cloud.points, radius);
  return m;
}

LabelMap transfer_labels(const PointCloud& scan, const Pose& pose, const AccumulatedMap& map,
                         double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("transfer_labels: radius must be positive and finite");
  }
  check_rigid(pose);

  LabelMap out;
  out.space = map.labels.space;
  const std::size_t n = scan.size();
  out.semantic.assign(n, kIgnoreClass);
  out.instance.assign(n, 0);

#pragma omp parallel for schedule(dynamic, 1024)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const Vec3 q = apply_pose(pose, scan.points[static_cast<std::size_t>(i)]);
    if (const std::optional<int> hit = map.index.nearest_within(q, radius)) {
      out.semantic[static_cast<std::size_t>(i)] = map.labels.semantic[static_cast<std::size_t>(*hit)];
      out.instance[static_cast<std::size_t>(i)] = map.labels.instance[static_cast<std::size_t>(*hit)];
    }
  }
  return out;
}

}  // namespace lps
