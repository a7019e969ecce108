#include "lps/segtree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "lps/clustering.hpp"

namespace lps {

namespace {

void validate_schedule(std::span<const double> schedule) {
  if (schedule.empty()) throw std::invalid_argument("schedule must not be empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0) || !std::isfinite(schedule[i])) {
      throw std::invalid_argument("schedule values must be positive and finite");
    }
    if (i > 0 && !(schedule[i] < schedule[i - 1])) {
      throw std::invalid_argument("schedule must be strictly decreasing");
    }
  }
}

// Recursively refines `points_of_node` (sorted) starting at schedule index j,
// appending pre-order into the local arena. Returns the local node id.
int refine(std::span<const Vec3> points, std::vector<int>&& node_points, int level, double eps,
           std::span<const double> schedule, std::size_t j, std::vector<SegNode>& arena,
           int parent) {
  const int id = static_cast<int>(arena.size());
  arena.push_back(SegNode{std::move(node_points), parent, level, eps, {}, -1.0});

  if (arena[static_cast<std::size_t>(id)].point_indices.size() <= 1) return id;

  for (; j < schedule.size(); ++j) {
    // The arena may reallocate while children are built, so keep a copy of
    // the member list rather than a reference into the arena.
    const std::vector<int> members = arena[static_cast<std::size_t>(id)].point_indices;
    const Clustering c = cluster(points, members, schedule[j]);
    if (c.num_clusters <= 1) continue;  // no strict split at this threshold

    std::vector<std::vector<int>> parts(static_cast<std::size_t>(c.num_clusters));
    for (std::size_t k = 0; k < members.size(); ++k) {
      parts[static_cast<std::size_t>(c.assignment[k])].push_back(members[k]);
    }
    for (auto& part : parts) {
      const int child = refine(points, std::move(part), level + 1, schedule[j], schedule, j + 1,
                               arena, id);
      arena[static_cast<std::size_t>(id)].children.push_back(child);
    }
    break;
  }
  return id;
}

}  // namespace

SegForest build_forest(std::span<const Vec3> points, std::span<const int> mask,
                       std::span<const double> schedule) {
  validate_schedule(schedule);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] < 0 || static_cast<std::size_t>(mask[i]) >= points.size()) {
      throw std::out_of_range("build_forest: mask index " + std::to_string(mask[i]) +
                              " out of range");
    }
    if (i > 0 && mask[i] <= mask[i - 1]) {
      throw std::invalid_argument("build_forest: mask must be sorted and unique");
    }
  }

  SegForest forest;
  forest.schedule.assign(schedule.begin(), schedule.end());
  if (mask.empty()) return forest;

  const Clustering top = cluster(points, mask, schedule[0]);
  std::vector<std::vector<int>> root_points(static_cast<std::size_t>(top.num_clusters));
  for (std::size_t k = 0; k < mask.size(); ++k) {
    root_points[static_cast<std::size_t>(top.assignment[k])].push_back(mask[k]);
  }

  // Each root subtree is built into its own arena; blocks concatenate in root
  // order, so node ids do not depend on the thread count.
  std::vector<std::vector<SegNode>> blocks(root_points.size());
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < static_cast<int>(root_points.size()); ++r) {
    refine(points, std::move(root_points[static_cast<std::size_t>(r)]), 0, schedule[0], schedule,
           1, blocks[static_cast<std::size_t>(r)], -1);
  }

  std::size_t total = 0;
  for (const auto& b : blocks) total += b.size();
  forest.nodes.reserve(total);
  for (auto& b : blocks) {
    const int base = static_cast<int>(forest.nodes.size());
    forest.roots.push_back(base);
    for (SegNode& n : b) {
      if (n.parent >= 0) n.parent += base;
      for (int& c : n.children) c += base;
      forest.nodes.push_back(std::move(n));
    }
  }
  return forest;
}

CutResult tree_cut(SegForest& forest, const NodeScorer& scorer) {
  const int n = static_cast<int>(forest.nodes.size());

  int bad_node = n;
  std::string bad_what;
#pragma omp parallel for schedule(dynamic, 16)
  for (int id = 0; id < n; ++id) {
    double s;
    try {
      s = scorer(forest, id);
    } catch (const std::exception& e) {
#pragma omp critical(lps_tree_cut_error)
      if (id < bad_node) {
        bad_node = id;
        bad_what = std::string("scorer failed at node ") + std::to_string(id) + ": " + e.what();
      }
      continue;
    }
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
#pragma omp critical(lps_tree_cut_error)
      if (id < bad_node) {
        bad_node = id;
        bad_what = "scorer returned " + std::to_string(s) + " at node " + std::to_string(id) +
                   ", expected [0,1]";
      }
      continue;
    }
    forest.nodes[static_cast<std::size_t>(id)].score = s;
  }
  if (bad_node < n) throw std::invalid_argument(bad_what);

  // Best achievable min-score per subtree. Nodes are stored pre-order, so a
  // reverse sweep sees every child before its parent.
  std::vector<double> fstar(static_cast<std::size_t>(n));
  for (int id = n - 1; id >= 0; --id) {
    const SegNode& node = forest.nodes[static_cast<std::size_t>(id)];
    double f = node.score;
    if (!node.children.empty()) {
      double child_min = 1.0;
      for (int c : node.children) {
        child_min = std::min(child_min, fstar[static_cast<std::size_t>(c)]);
      }
      if (child_min > f) f = child_min;  // ties keep the parent
    }
    fstar[static_cast<std::size_t>(id)] = f;
  }

  CutResult cut;
  std::vector<int> stack;
  for (auto it = forest.roots.rbegin(); it != forest.roots.rend(); ++it) stack.push_back(*it);
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const SegNode& node = forest.nodes[static_cast<std::size_t>(id)];
    if (fstar[static_cast<std::size_t>(id)] > node.score) {
      for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
        stack.push_back(*it);
      }
    } else {
      cut.nodes.push_back(id);
      cut.global_score = std::min(cut.global_score, node.score);
    }
  }
  return cut;
}

std::vector<std::vector<int>> enumerate_cuts(const SegForest& forest) {
  if (forest.num_nodes() > 20) {
    throw std::invalid_argument("enumerate_cuts: forest has " +
                                std::to_string(forest.num_nodes()) +
                                " nodes, enumeration is capped at 20");
  }

  // cuts(v) = {v} plus the cross product of the children's cut sets.
  std::vector<std::vector<std::vector<int>>> memo(forest.num_nodes());
  for (int id = static_cast<int>(forest.num_nodes()) - 1; id >= 0; --id) {
    const SegNode& node = forest.nodes[static_cast<std::size_t>(id)];
    std::vector<std::vector<int>> cuts;
    cuts.push_back({id});
    if (!node.children.empty()) {
      std::vector<std::vector<int>> partial{{}};
      for (int c : node.children) {
        std::vector<std::vector<int>> next;
        for (const auto& head : partial) {
          for (const auto& tail : memo[static_cast<std::size_t>(c)]) {
            auto combo = head;
            combo.insert(combo.end(), tail.begin(), tail.end());
            next.push_back(std::move(combo));
          }
        }
        partial = std::move(next);
      }
      for (auto& p : partial) cuts.push_back(std::move(p));
    }
    memo[static_cast<std::size_t>(id)] = std::move(cuts);
  }

  std::vector<std::vector<int>> result{{}};
  for (int r : forest.roots) {
    std::vector<std::vector<int>> next;
    for (const auto& head : result) {
      for (const auto& tail : memo[static_cast<std::size_t>(r)]) {
        auto combo = head;
        combo.insert(combo.end(), tail.begin(), tail.end());
        next.push_back(std::move(combo));
      }
    }
    result = std::move(next);
  }
  for (auto& cut : result) std::sort(cut.begin(), cut.end());
  return result;
}

void dump_forest(const SegForest& forest, std::ostream& os) {
  char buf[160];
  for (std::size_t id = 0; id < forest.nodes.size(); ++id) {
    const SegNode& n = forest.nodes[id];
    char score[40];
    if (n.score < 0.0) {
      std::snprintf(score, sizeof(score), "-");
    } else {
      std::snprintf(score, sizeof(score), "%.17g", n.score);
    }
    std::snprintf(buf, sizeof(buf), "%zu %d %d %.17g %zu %s\n", id, n.parent, n.level, n.eps,
                  n.point_indices.size(), score);
    os << buf;
  }
}

}  // namespace lps
