#include "lps/spatial_grid.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace lps {

SpatialGrid SpatialGrid::build(std::span<const Vec3> points, double cell) {
  SpatialGrid g;
  g.points_.assign(points.begin(), points.end());

  double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  bool first = true;
  for (std::size_t i = 0; i < g.points_.size(); ++i) {
    const Vec3& p = g.points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw std::invalid_argument("SpatialGrid: non-finite coordinate at point " +
                                  std::to_string(i));
    }
    const double v[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      if (first || v[a] < lo[a]) lo[a] = v[a];
      if (first || v[a] > hi[a]) hi[a] = v[a];
    }
    first = false;
  }

  if (cell > 0.0) {
    g.cell_ = cell;
  } else {
    // Aim for a few points per cell on roughly uniform data.
    double extent = 0.0;
    for (int a = 0; a < 3; ++a) extent = std::max(extent, hi[a] - lo[a]);
    const double n = std::max<double>(1.0, static_cast<double>(g.points_.size()));
    g.cell_ = extent > 0.0 ? extent / std::cbrt(n) : 1.0;
    if (!(g.cell_ > 0.0)) g.cell_ = 1.0;
  }

  for (int a = 0; a < 3; ++a) {
    const double span = std::max(std::abs(lo[a]), std::abs(hi[a])) / g.cell_;
    if (span > 1e15) {
      throw std::invalid_argument("SpatialGrid: cell size too small for coordinate range");
    }
  }

  const std::size_t n = g.points_.size();
  std::vector<std::pair<CellKey, int>> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = {g.key_of(g.points_[i]), static_cast<int>(i)};
  }
  std::sort(order.begin(), order.end());

  g.ids_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.ids_[i] = order[i].second;
    if (i == 0 || order[i].first != order[i - 1].first) {
      g.keys_.push_back(order[i].first);
      g.starts_.push_back(i);
    }
  }
  g.starts_.push_back(n);
  return g;
}

std::pair<std::size_t, std::size_t> SpatialGrid::cell_run(const CellKey& k) const {
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
  if (it == keys_.end() || *it != k) return {0, 0};
  const std::size_t idx = static_cast<std::size_t>(it - keys_.begin());
  return {starts_[idx], starts_[idx + 1]};
}

void SpatialGrid::check_query(const Vec3& q, double r) {
  if (r < 0.0 || !std::isfinite(r)) {
    throw std::invalid_argument("radius query: radius must be finite and non-negative");
  }
  if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.z)) {
    throw std::invalid_argument("radius query: non-finite query point");
  }
}

std::vector<int> SpatialGrid::radius_neighbors(const Vec3& q, double r) const {
  std::vector<int> out;
  visit_ball(q, r, [&](int i, double) { out.push_back(i); });
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<int> SpatialGrid::nearest_within(const Vec3& q, double r) const {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  visit_ball(q, r, [&](int i, double d2) {
    if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
      best = i;
      best_d2 = d2;
    }
  });
  if (best < 0) return std::nullopt;
  return best;
}

}  // namespace lps
