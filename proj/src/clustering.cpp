#include "lps/clustering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lps {

namespace {

using CellKey = std::array<std::int64_t, 3>;

struct UnionFind {
  std::vector<int> parent, size;

  explicit UnionFind(int n) : parent(n), size(n, 1) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

// Grid bookkeeping for one clustering call. Cell edge is eps/sqrt(3) shrunk
// by a hair so the cell diagonal stays strictly below eps even after the
// division rounds up: any two points sharing a cell are within eps of each
// other and need no distance check. Points within eps still live at most two
// cells apart along each axis.
struct CellIndex {
  double cell;
  std::vector<CellKey> keys;          // sorted unique
  std::vector<int> starts;            // runs into order, keys.size()+1
  std::vector<int> order;             // positions grouped by cell
  std::vector<int> cell_of;           // position -> cell index

  int cell_lookup(const CellKey& k) const {
    const auto it = std::lower_bound(keys.begin(), keys.end(), k);
    if (it == keys.end() || *it != k) return -1;
    return static_cast<int>(it - keys.begin());
  }
};

CellIndex build_cells(const std::vector<Vec3>& pts, double eps) {
  CellIndex ci;
  ci.cell = eps / std::sqrt(3.0) * (1.0 - 1e-12);
  const int m = static_cast<int>(pts.size());
  std::vector<std::pair<CellKey, int>> tagged(m);
  for (int i = 0; i < m; ++i) {
    const Vec3& p = pts[static_cast<std::size_t>(i)];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw std::invalid_argument("cluster: non-finite coordinate at subset position " +
                                  std::to_string(i));
    }
    tagged[static_cast<std::size_t>(i)] = {
        {static_cast<std::int64_t>(std::floor(p.x / ci.cell)),
         static_cast<std::int64_t>(std::floor(p.y / ci.cell)),
         static_cast<std::int64_t>(std::floor(p.z / ci.cell))},
        i};
  }
  std::sort(tagged.begin(), tagged.end());
  ci.order.resize(m);
  ci.cell_of.resize(m);
  for (int i = 0; i < m; ++i) {
    ci.order[static_cast<std::size_t>(i)] = tagged[static_cast<std::size_t>(i)].second;
    if (i == 0 || tagged[static_cast<std::size_t>(i)].first !=
                      tagged[static_cast<std::size_t>(i - 1)].first) {
      ci.keys.push_back(tagged[static_cast<std::size_t>(i)].first);
      ci.starts.push_back(i);
    }
    ci.cell_of[static_cast<std::size_t>(ci.order[static_cast<std::size_t>(i)])] =
        static_cast<int>(ci.keys.size()) - 1;
  }
  ci.starts.push_back(m);
  return ci;
}

// f(position) for every point in cells at Chebyshev distance <= 2 from the
// cell of p (those are the only cells that can hold eps-neighbors).
template <typename F>
void visit_stencil(const CellIndex& ci, const std::vector<Vec3>& pts, int pos, F&& f) {
  const Vec3& p = pts[static_cast<std::size_t>(pos)];
  const CellKey base = {static_cast<std::int64_t>(std::floor(p.x / ci.cell)),
                        static_cast<std::int64_t>(std::floor(p.y / ci.cell)),
                        static_cast<std::int64_t>(std::floor(p.z / ci.cell))};
  for (std::int64_t dx = -2; dx <= 2; ++dx)
    for (std::int64_t dy = -2; dy <= 2; ++dy)
      for (std::int64_t dz = -2; dz <= 2; ++dz) {
        const int c = ci.cell_lookup({base[0] + dx, base[1] + dy, base[2] + dz});
        if (c < 0) continue;
        for (int k = ci.starts[static_cast<std::size_t>(c)];
             k < ci.starts[static_cast<std::size_t>(c) + 1]; ++k) {
          f(ci.order[static_cast<std::size_t>(k)]);
        }
      }
}

}  // namespace

Clustering cluster(std::span<const Vec3> points, std::span<const int> subset, double eps,
                   int min_pts) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("cluster: eps must be positive and finite");
  }
  if (min_pts < 1) throw std::invalid_argument("cluster: min_pts must be >= 1");

  const int m = static_cast<int>(subset.size());
  Clustering out;
  out.assignment.assign(static_cast<std::size_t>(m), -1);
  if (m == 0) return out;

  std::vector<Vec3> pts(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int idx = subset[static_cast<std::size_t>(i)];
    if (idx < 0 || static_cast<std::size_t>(idx) >= points.size()) {
      throw std::out_of_range("cluster: subset index " + std::to_string(idx) + " out of range");
    }
    pts[static_cast<std::size_t>(i)] = points[static_cast<std::size_t>(idx)];
  }

  const CellIndex ci = build_cells(pts, eps);
  const double rr = eps * eps;
  const int ncells = static_cast<int>(ci.keys.size());

  std::vector<char> core(static_cast<std::size_t>(m), 1);
  if (min_pts > 1) {
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < m; ++i) {
      int count = 0;
      visit_stencil(ci, pts, i, [&](int j) {
        if (count >= min_pts) return;
        if (squared_dist(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]) <= rr)
          ++count;
      });
      core[static_cast<std::size_t>(i)] = count >= min_pts ? 1 : 0;
    }
  }

  // Cells holding at least one core point; cores sharing a cell are mutually
  // within eps, so core connectivity reduces to a graph over these cells.
  std::vector<char> cell_has_core(static_cast<std::size_t>(ncells), 0);
  for (int i = 0; i < m; ++i) {
    if (core[static_cast<std::size_t>(i)])
      cell_has_core[static_cast<std::size_t>(ci.cell_of[static_cast<std::size_t>(i)])] = 1;
  }

  // Half stencil: lexicographically positive offsets only, so each unordered
  // cell pair is examined exactly once.
  std::vector<CellKey> half;
  for (std::int64_t dx = -2; dx <= 2; ++dx)
    for (std::int64_t dy = -2; dy <= 2; ++dy)
      for (std::int64_t dz = -2; dz <= 2; ++dz) {
        if (dx > 0 || (dx == 0 && (dy > 0 || (dy == 0 && dz > 0)))) half.push_back({dx, dy, dz});
      }

  // A cell pair is linked when some core in one is within eps of a core in
  // the other. Existence does not depend on scan order, so the link set (and
  // everything downstream) is deterministic under any thread count.
  std::vector<std::vector<int>> links(static_cast<std::size_t>(ncells));
#pragma omp parallel for schedule(dynamic, 8)
  for (int c = 0; c < ncells; ++c) {
    if (!cell_has_core[static_cast<std::size_t>(c)]) continue;
    for (const CellKey& off : half) {
      const CellKey k = {ci.keys[static_cast<std::size_t>(c)][0] + off[0],
                         ci.keys[static_cast<std::size_t>(c)][1] + off[1],
                         ci.keys[static_cast<std::size_t>(c)][2] + off[2]};
      const int d = ci.cell_lookup(k);
      if (d < 0 || !cell_has_core[static_cast<std::size_t>(d)]) continue;
      bool hit = false;
      for (int a = ci.starts[static_cast<std::size_t>(c)];
           !hit && a < ci.starts[static_cast<std::size_t>(c) + 1]; ++a) {
        const int i = ci.order[static_cast<std::size_t>(a)];
        if (!core[static_cast<std::size_t>(i)]) continue;
        for (int b = ci.starts[static_cast<std::size_t>(d)];
             b < ci.starts[static_cast<std::size_t>(d) + 1]; ++b) {
          const int j = ci.order[static_cast<std::size_t>(b)];
          if (!core[static_cast<std::size_t>(j)]) continue;
          if (squared_dist(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]) <=
              rr) {
            hit = true;
            break;
          }
        }
      }
      if (hit) links[static_cast<std::size_t>(c)].push_back(d);
    }
  }

  UnionFind uf(ncells);
  for (int c = 0; c < ncells; ++c) {
    for (int d : links[static_cast<std::size_t>(c)]) uf.unite(c, d);
  }

  // Non-core points attach to their smallest-index core neighbor, if any.
  std::vector<int> attach(static_cast<std::size_t>(m), -1);
  if (min_pts > 1) {
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < m; ++i) {
      if (core[static_cast<std::size_t>(i)]) continue;
      int best = -1;
      int best_orig = std::numeric_limits<int>::max();
      visit_stencil(ci, pts, i, [&](int j) {
        if (!core[static_cast<std::size_t>(j)]) return;
        if (squared_dist(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]) > rr)
          return;
        const int orig = subset[static_cast<std::size_t>(j)];
        if (orig < best_orig) {
          best_orig = orig;
          best = j;
        }
      });
      attach[static_cast<std::size_t>(i)] = best;
    }
  }

  // Group key per position: core components share the id of their cell root;
  // noise points get unique ids past the cell range.
  std::vector<int> group(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    if (core[static_cast<std::size_t>(i)]) {
      group[static_cast<std::size_t>(i)] = uf.find(ci.cell_of[static_cast<std::size_t>(i)]);
    } else if (attach[static_cast<std::size_t>(i)] >= 0) {
      group[static_cast<std::size_t>(i)] =
          uf.find(ci.cell_of[static_cast<std::size_t>(attach[static_cast<std::size_t>(i)])]);
    } else {
      group[static_cast<std::size_t>(i)] = ncells + i;
    }
  }

  // Final ids ordered by the smallest original point index in each group.
  std::vector<int> min_orig(static_cast<std::size_t>(ncells + m),
                            std::numeric_limits<int>::max());
  for (int i = 0; i < m; ++i) {
    min_orig[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])] =
        std::min(min_orig[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])],
                 subset[static_cast<std::size_t>(i)]);
  }
  std::vector<std::pair<int, int>> groups;  // (min original index, group key)
  for (int g = 0; g < ncells + m; ++g) {
    if (min_orig[static_cast<std::size_t>(g)] != std::numeric_limits<int>::max()) {
      groups.emplace_back(min_orig[static_cast<std::size_t>(g)], g);
    }
  }
  std::sort(groups.begin(), groups.end());
  std::vector<int> id_of(static_cast<std::size_t>(ncells + m), -1);
  for (std::size_t r = 0; r < groups.size(); ++r) {
    id_of[static_cast<std::size_t>(groups[r].second)] = static_cast<int>(r);
  }
  for (int i = 0; i < m; ++i) {
    out.assignment[static_cast<std::size_t>(i)] =
        id_of[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])];
  }
  out.num_clusters = static_cast<int>(groups.size());
  return out;
}

Clustering cluster_all(std::span<const Vec3> points, double eps, int min_pts) {
  std::vector<int> subset(points.size());
  std::iota(subset.begin(), subset.end(), 0);
  return cluster(points, subset, eps, min_pts);
}

}  // namespace lps
