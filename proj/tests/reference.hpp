#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lps/clustering.hpp"
#include "lps/core.hpp"

namespace lps::ref {

// Quadratic-time oracles with the same contracts as the production kernels.
// Slow on purpose: every predicate is a direct distance comparison, so these
// are the ground truth the grid-based code is tested against.

/// Indices of points within the closed ball, ascending.
std::vector<int> brute_radius(std::span<const Vec3> points, const Vec3& q, double r);

/// Closest point within r; ties to the smallest index.
std::optional<int> brute_nearest(std::span<const Vec3> points, const Vec3& q, double r);

/// Same semantics as lps::cluster, via the all-pairs neighbor graph.
Clustering brute_cluster(std::span<const Vec3> points, std::span<const int> subset, double eps,
                         int min_pts = 1);

}  // namespace lps::ref
