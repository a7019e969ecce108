// Wall-clock comparison of the grid-backed parallel kernels against the
// quadratic serial references from the test suite, plus absolute numbers for
// the full forest pipeline on a large scan. Single process, steady_clock,
// best of three runs per row.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>
#include "CLI11.hpp"

#include "lps/clustering.hpp"
#include "lps/core.hpp"
#include "lps/labelxfer.hpp"
#include "lps/objectness.hpp"
#include "lps/pipeline.hpp"
#include "lps/rng.hpp"
#include "lps/segtree.hpp"
#include "lps/spatial_grid.hpp"
#include "lps/synthgen.hpp"
#include "reference.hpp"
#include "testutil.hpp"

using namespace lps;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double best_of(int runs, F&& body) {
  double best = 1e300;
  for (int r = 0; r < runs; ++r) {
    const double t0 = now_s();
    body();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void row(const std::string& name, std::size_t n, double fast_s, double slow_s) {
  std::printf("%-34s %9zu %12.2f %12.2f %9.1fx\n", name.c_str(), n, 1e3 * fast_s, 1e3 * slow_s,
              slow_s / fast_s);
}

std::vector<Vec3> random_cloud(Rng& rng, std::size_t n, double extent) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                   rng.uniform(-extent, extent)});
  }
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lps kernel benchmarks: grid/parallel vs serial reference"};
  double scale = 1.0;
  app.add_option("--scale", scale, "problem size multiplier (default 1.0)")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n\n", omp_get_max_threads());
  std::printf("%-34s %9s %12s %12s %10s\n", "benchmark", "n", "grid ms", "brute ms", "speedup");

  Rng rng(12);

  {  // Batched radius queries against one indexed cloud.
    const auto n = static_cast<std::size_t>(20000 * scale);
    const std::size_t q = 2000;
    const std::vector<Vec3> pts = random_cloud(rng, n, 12.0);
    const std::vector<Vec3> queries = random_cloud(rng, q, 12.0);
    const SpatialGrid grid = SpatialGrid::build(pts, 0.8);
    std::size_t sink = 0;
    const double fast = best_of(3, [&] {
      for (const Vec3& p : queries) sink += grid.radius_neighbors(p, 0.8).size();
    });
    const double slow = best_of(3, [&] {
      for (const Vec3& p : queries) sink += ref::brute_radius(pts, p, 0.8).size();
    });
    row("radius queries (2000 balls)", n, fast, slow);
    if (sink == 0) std::printf("(empty neighborhoods)\n");
  }

  {  // Nearest-within queries, the label transfer primitive.
    const auto n = static_cast<std::size_t>(50000 * scale);
    const std::size_t q = 5000;
    const std::vector<Vec3> pts = random_cloud(rng, n, 15.0);
    const std::vector<Vec3> queries = random_cloud(rng, q, 15.0);
    const SpatialGrid grid = SpatialGrid::build(pts, 0.10);
    long hits = 0;
    const double fast = best_of(3, [&] {
      for (const Vec3& p : queries) hits += grid.nearest_within(p, 0.10).has_value();
    });
    const double slow = best_of(3, [&] {
      for (const Vec3& p : queries) hits += ref::brute_nearest(pts, p, 0.10).has_value();
    });
    row("1-NN within 10 cm (5000 queries)", n, fast, slow);
  }

  {  // Epsilon clustering, the inner loop of forest construction.
    const auto n = static_cast<std::size_t>(12000 * scale);
    const std::vector<Vec3> pts = random_cloud(rng, n, 8.0);
    const std::vector<int> subset = testutil::iota_subset(pts.size());
    const double fast = best_of(3, [&] { cluster(pts, subset, 0.5); });
    const double slow = best_of(3, [&] { ref::brute_cluster(pts, subset, 0.5); });
    row("epsilon clustering", n, fast, slow);
  }

  // Full pipeline on a large synthetic scan: absolute time only, the serial
  // reference would take minutes at this size.
  SceneSpec spec;
  spec.seed = 77;
  spec.separation = 2.0;
  spec.instances = {InstanceSpec{static_cast<int>(300 * scale), 400, 0.12, 1, BlobShape::box}};
  const SynthScene scene = generate_scene(spec);
  const std::vector<int> mask = testutil::iota_subset(scene.cloud.size());

  ScorerModel model;
  model.kind = ScorerKind::learned_regressor;
  model.feature_dim = kFeatureDim;
  model.mean.assign(kFeatureDim, 0.0);
  model.stdev.assign(kFeatureDim, 1.0);
  model.w2 = {0.3, -0.1, -0.1, 0.2, 0.4, 0.3, 0.05, -0.6, 0.1};
  ScoreContext ctx;
  const NodeScorer scorer = make_node_scorer(model, scene.cloud.points, ctx);

  double t_build = 1e300, t_cut = 1e300;
  std::size_t nodes = 0, segments = 0;
  for (int r = 0; r < 3; ++r) {
    double t0 = now_s();
    SegForest forest = build_forest(scene.cloud.points, mask, default_schedule());
    const double tb = now_s() - t0;
    t0 = now_s();
    const CutResult cut = tree_cut(forest, scorer);
    t_cut = std::min(t_cut, now_s() - t0);
    t_build = std::min(t_build, tb);
    nodes = forest.num_nodes();
    segments = cut.nodes.size();
  }
  std::printf("\nforest on %zu points, 6-level schedule: build %.2f ms (%zu nodes), "
              "cut %.2f ms (%zu segments)\n",
              scene.cloud.size(), 1e3 * t_build, nodes, 1e3 * t_cut, segments);
  return 0;
}
