#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lps/core.hpp"

namespace lps {

/// Uniform hash-free grid over a fixed set of points, stored as sorted cell
/// runs (CSR). Read-only after build; queries are safe to run concurrently.
class SpatialGrid {
 public:
  SpatialGrid() = default;

  /// Indexes `points`. cell <= 0 picks a heuristic from the bounding box.
  /// Non-finite coordinates raise std::invalid_argument with the index.
  [[nodiscard]] static SpatialGrid build(std::span<const Vec3> points, double cell = 0.0);

  double cell_size() const { return cell_; }
  std::size_t size() const { return points_.size(); }

  /// Indices of all points with distance <= r from q, ascending.
  std::vector<int> radius_neighbors(const Vec3& q, double r) const;

  /// Index of the closest point within closed radius r, if any. Ties resolve
  /// to the smallest point index.
  std::optional<int> nearest_within(const Vec3& q, double r) const;

  /// Calls f(point_index, squared_distance) for every point within the closed
  /// ball. Visit order is unspecified; callers needing determinism must use
  /// order-independent folds.
  template <typename F>
  void visit_ball(const Vec3& q, double r, F&& f) const {
    check_query(q, r);
    if (points_.empty()) return;
    const double rr = r * r;
    const std::int64_t lox = coord(q.x - r), hix = coord(q.x + r);
    const std::int64_t loy = coord(q.y - r), hiy = coord(q.y + r);
    const std::int64_t loz = coord(q.z - r), hiz = coord(q.z + r);
    for (std::int64_t cx = lox; cx <= hix; ++cx)
      for (std::int64_t cy = loy; cy <= hiy; ++cy)
        for (std::int64_t cz = loz; cz <= hiz; ++cz) {
          const auto [beg, end] = cell_run({cx, cy, cz});
          for (std::size_t k = beg; k < end; ++k) {
            const int i = ids_[k];
            const double d2 = squared_dist(points_[static_cast<std::size_t>(i)], q);
            if (d2 <= rr) f(i, d2);
          }
        }
  }

 private:
  using CellKey = std::array<std::int64_t, 3>;

  std::int64_t coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  CellKey key_of(const Vec3& p) const { return {coord(p.x), coord(p.y), coord(p.z)}; }
  std::pair<std::size_t, std::size_t> cell_run(const CellKey& k) const;
  static void check_query(const Vec3& q, double r);

  std::vector<Vec3> points_;
  std::vector<CellKey> keys_;      // sorted unique cell keys
  std::vector<std::size_t> starts_;  // runs into ids_, keys_.size() + 1 entries
  std::vector<int> ids_;           // point indices grouped by cell, ascending per cell
  double cell_ = 1.0;
};

}  // namespace lps
