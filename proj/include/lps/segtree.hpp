#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "lps/core.hpp"

namespace lps {

/// Node of a segmentation forest. Point indices refer to the original cloud
/// and are sorted ascending. `eps` is the clustering threshold that formed
/// the node; it strictly decreases from root to leaf.
struct SegNode {
  std::vector<int> point_indices;
  int parent = -1;  // arena id, -1 for roots
  int level = 0;    // depth, 0 at the roots
  double eps = 0.0;
  std::vector<int> children;  // arena ids
  double score = -1.0;        // < 0 until scored
};

/// Forest arena. Nodes are stored pre-order, one contiguous block per root,
/// roots in ascending order of their smallest point index. Children of a node
/// partition its points into strictly smaller sets.
struct SegForest {
  std::vector<SegNode> nodes;
  std::vector<int> roots;
  std::vector<double> schedule;

  std::size_t num_nodes() const { return nodes.size(); }
};

/// Builds the hierarchical segmentation forest over points[mask]: roots are
/// the epsilon-connected components at schedule[0], every node is re-clustered
/// at each finer threshold in turn, and a level that fails to split a node is
/// skipped rather than producing an identical child. Singletons never expand.
/// mask must be sorted, unique and in range; the schedule must be positive
/// and strictly decreasing.
SegForest build_forest(std::span<const Vec3> points, std::span<const int> mask,
                       std::span<const double> schedule);

/// Node scorer used by the cut. Must return a value in [0, 1].
using NodeScorer = std::function<double(const SegForest&, int node_id)>;

/// An antichain of the forest covering every root's point set exactly once.
struct CutResult {
  std::vector<int> nodes;     // ascending arena ids
  double global_score = 1.0;  // min score over chosen nodes, 1.0 when empty
};

/// Scores every node exactly once (cached in SegNode::score), then selects
/// the partition maximizing the minimum per-segment score. When keeping a
/// node ties the best split of its children, the node is kept.
CutResult tree_cut(SegForest& forest, const NodeScorer& scorer);

/// Every antichain that partitions the root point sets, as sorted arena-id
/// vectors. Guarded to forests with at most 20 nodes; larger input raises
/// std::invalid_argument.
std::vector<std::vector<int>> enumerate_cuts(const SegForest& forest);

/// One line per node: "node_id parent_id level eps size score", score printed
/// as '-' until assigned.
void dump_forest(const SegForest& forest, std::ostream& os);

}  // namespace lps
