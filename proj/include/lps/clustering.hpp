#pragma once

#include <span>
#include <vector>

#include "lps/core.hpp"

namespace lps {

/// Partition of a point subset. `assignment` is parallel to the subset passed
/// in; ids run 0..num_clusters-1 and are ordered by each cluster's smallest
/// original point index, so equal partitions compare equal element-wise.
struct Clustering {
  std::vector<int> assignment;
  int num_clusters = 0;
};

/// Density clustering with an epsilon threshold (closed ball). min_pts = 1
/// reduces to plain epsilon-connectivity: clusters are exactly the connected
/// components of the graph with edges between points at distance <= eps.
/// For min_pts > 1, points with fewer than min_pts neighbors (self included)
/// are not cores; non-core points join the cluster of their smallest-index
/// core neighbor, or stay as singleton clusters if they have none.
///
/// Runs the distance work in parallel; the returned partition is identical
/// for any thread count.
Clustering cluster(std::span<const Vec3> points, std::span<const int> subset, double eps,
                   int min_pts = 1);

/// Clusters every point of the cloud.
Clustering cluster_all(std::span<const Vec3> points, double eps, int min_pts = 1);

}  // namespace lps
