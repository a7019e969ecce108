#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "lps/pipeline.hpp"
#include "lps/rng.hpp"
#include "lps/synthgen.hpp"
#include "testutil.hpp"

using namespace lps;

namespace {

// Two instance clumps separated far beyond the coarsest threshold, plus a
// ground plane. All coordinates stay well clear of the rounding margins.
struct Scene {
  PointCloud cloud;
  LabelMap gt;  // vocab space
};

Scene two_cars_scene() {
  Scene s;
  s.gt.space = LabelSpace::vocab;
  auto add = [&](Vec3 p, std::uint32_t cls, std::uint32_t inst) {
    s.cloud.points.push_back(p);
    s.gt.semantic.push_back(cls);
    s.gt.instance.push_back(inst);
  };
  for (int i = 0; i < 12; ++i) add({0.2 * i, 0.0, 1.0}, 1, 1);
  for (int i = 0; i < 9; ++i) add({0.2 * i + 30.0, 0.0, 1.0}, 1, 2);
  for (int i = 0; i < 25; ++i) add({1.1 * i, 5.0, 0.0}, 4, 0);  // road
  return s;
}

std::set<std::set<int>> prediction_instances(const PanopticPrediction& pred) {
  std::map<std::uint32_t, std::set<int>> by_id;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.instance[i] > 0) by_id[pred.instance[i]].insert(static_cast<int>(i));
  }
  std::set<std::set<int>> out;
  for (auto& [id, members] : by_id) out.insert(std::move(members));
  return out;
}

}  // namespace

TEST_CASE("default_schedule is the canonical six levels") {
  const std::span<const double> s = default_schedule();
  REQUIRE(s.size() == 6);
  CHECK(s[0] == 1.2488);
  CHECK(s[1] == 0.8136);
  CHECK(s[2] == 0.6952);
  CHECK(s[3] == 0.594);
  CHECK(s[4] == 0.4353);
  CHECK(s[5] == 0.3221);
  CHECK(std::is_sorted(s.rbegin(), s.rend()));
}

TEST_CASE("instance_sets collects thing and other instances per class") {
  const Vocabulary vocab = builtin_vocabulary("vocab1");
  LabelMap m;
  m.space = LabelSpace::vocab;
  //               car#5  car#5  other#5  road   car#2   ignored
  m.semantic = {1, 1, 10, 4, 1, 0};
  m.instance = {5, 5, 5, 7, 2, 3};

  const auto sets = instance_sets(m, vocab);
  // Ordered by (class, instance): car#2, car#5, other#5. The road point has
  // no instance standing even though its id is nonzero; ignored points drop.
  REQUIRE(sets.size() == 3);
  CHECK(sets[0] == std::vector<int>{4});
  CHECK(sets[1] == std::vector<int>{0, 1});
  CHECK(sets[2] == std::vector<int>{2});
}

TEST_CASE("instance_sets ignores instance 0 and validates the space") {
  const Vocabulary vocab = builtin_vocabulary("vocab1");
  LabelMap m;
  m.space = LabelSpace::vocab;
  m.semantic = {1, 1};
  m.instance = {0, 0};
  CHECK(instance_sets(m, vocab).empty());

  m.space = LabelSpace::raw;
  CHECK_THROWS_AS(instance_sets(m, vocab), std::invalid_argument);
}

TEST_CASE("segment_scan recovers separated instances with the oracle") {
  const Scene s = two_cars_scene();
  const Vocabulary vocab = builtin_vocabulary("vocab1");
  const auto gt_sets = instance_sets(s.gt, vocab);
  ScoreContext ctx;
  ctx.gt_instances = &gt_sets;

  for (const SegMode mode : {SegMode::class_agnostic, SegMode::class_specific}) {
    PipelineConfig cfg;
    cfg.mode = mode;
    PanopticPrediction pred =
        segment_scan(s.cloud, s.gt, vocab, make_oracle_scorer(), ctx, cfg);
    majority_vote(pred);

    CHECK(pred.space == LabelSpace::vocab);
    CHECK(pred.semantic == s.gt.semantic);  // semantics pass through

    std::set<std::set<int>> want;
    for (const auto& inst : gt_sets) want.insert(std::set<int>(inst.begin(), inst.end()));
    CHECK(prediction_instances(pred) == want);

    // Road and ignored points carry no instance.
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (s.gt.semantic[i] == 4 || s.gt.semantic[i] == 0) CHECK(pred.instance[i] == 0);
    }
  }
}

TEST_CASE("instance ids are 1..M ordered by smallest point index") {
  const Scene s = two_cars_scene();
  const Vocabulary vocab = builtin_vocabulary("vocab1");
  const auto gt_sets = instance_sets(s.gt, vocab);
  ScoreContext ctx;
  ctx.gt_instances = &gt_sets;
  const PanopticPrediction pred =
      segment_scan(s.cloud, s.gt, vocab, make_oracle_scorer(), ctx);

  std::map<std::uint32_t, int> first_point;
  std::uint32_t max_id = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::uint32_t id = pred.instance[i];
    if (id == 0) continue;
    max_id = std::max(max_id, id);
    first_point.emplace(id, static_cast<int>(i));  // keeps the first touch
  }
  REQUIRE(max_id == first_point.size());  // contiguous 1..M
  int prev = -1;
  for (std::uint32_t id = 1; id <= max_id; ++id) {
    CHECK(first_point.at(id) > prev);
    prev = first_point.at(id);
  }
}

TEST_CASE("class-specific mode splits a mixed blob that agnostic keeps whole") {
  // One connected blob, half car half truck. Class-agnostic sees a single
  // component; class-specific builds separate forests per class.
  Scene s;
  s.gt.space = LabelSpace::vocab;
  for (int i = 0; i < 16; ++i) {
    s.cloud.points.push_back({0.15 * i, 0.0, 0.5});
    s.gt.semantic.push_back(i < 8 ? 1u : 2u);
    s.gt.instance.push_back(i < 8 ? 1u : 2u);
  }
  const Vocabulary vocab = builtin_vocabulary("vocab1");
  const auto gt_sets = instance_sets(s.gt, vocab);
  ScoreContext ctx;
  ctx.gt_instances = &gt_sets;

  PipelineConfig agnostic;
  agnostic.mode = SegMode::class_agnostic;
  const PanopticPrediction a =
      segment_scan(s.cloud, s.gt, vocab, make_oracle_scorer(), ctx, agnostic);
  CHECK(prediction_instances(a).size() == 1);

  PipelineConfig specific;
  specific.mode = SegMode::class_specific;
  const PanopticPrediction b =
      segment_scan(s.cloud, s.gt, vocab, make_oracle_scorer(), ctx, specific);
  const auto split = prediction_instances(b);
  CHECK(split.size() == 2);
  std::set<std::set<int>> want;
  for (const auto& inst : gt_sets) want.insert(std::set<int>(inst.begin(), inst.end()));
  CHECK(split == want);
}

TEST_CASE("segment_scan validation") {
  const Vocabulary vocab = builtin_vocabulary("vocab1");
  PointCloud cloud;
  cloud.points = {{0, 0, 0}};
  LabelMap raw;
  raw.space = LabelSpace::raw;
  raw.semantic = {10};
  raw.instance = {0};
  ScoreContext ctx;
  const std::vector<std::vector<int>> none;
  ctx.gt_instances = &none;

  SUBCASE("raw-space semantics are refused") {
    CHECK_THROWS_AS(segment_scan(cloud, raw, vocab, make_oracle_scorer(), ctx),
                    std::invalid_argument);
  }
  SUBCASE("length mismatch is refused") {
    LabelMap vm;
    vm.space = LabelSpace::vocab;
    vm.semantic = {1, 1};
    vm.instance = {0, 0};
    CHECK_THROWS_AS(segment_scan(cloud, vm, vocab, make_oracle_scorer(), ctx),
                    std::invalid_argument);
  }
  SUBCASE("stuff-only scans yield no instances") {
    LabelMap vm;
    vm.space = LabelSpace::vocab;
    vm.semantic = {4};
    vm.instance = {0};
    const PanopticPrediction pred = segment_scan(cloud, vm, vocab, make_oracle_scorer(), ctx);
    CHECK(pred.instance == std::vector<std::uint32_t>{0});
    CHECK(pred.semantic == vm.semantic);
  }
  SUBCASE("empty scan") {
    PointCloud empty;
    LabelMap vm;
    vm.space = LabelSpace::vocab;
    const PanopticPrediction pred = segment_scan(empty, vm, vocab, make_oracle_scorer(), ctx);
    CHECK(pred.size() == 0);
  }
}

TEST_CASE("majority_vote settles each instance on one class") {
  PanopticPrediction pred;
  pred.space = LabelSpace::vocab;
  //              inst 1: two car + one truck   inst 2: tie truck/car  loose
  pred.semantic = {1, 1, 2, 2, 1, 4};
  pred.instance = {1, 1, 1, 2, 2, 0};

  majority_vote(pred);
  CHECK(pred.semantic == std::vector<std::uint32_t>{1, 1, 1, 1, 1, 4});

  SUBCASE("idempotent") {
    PanopticPrediction again = pred;
    majority_vote(again);
    CHECK(again.semantic == pred.semantic);
    CHECK(again.instance == pred.instance);
  }
}

TEST_CASE("majority_vote tie breaks to the smallest class id") {
  PanopticPrediction pred;
  pred.space = LabelSpace::vocab;
  pred.semantic = {10, 3, 3, 10};
  pred.instance = {1, 1, 1, 1};
  majority_vote(pred);
  // 2 votes each for class 3 and class 10.
  CHECK(pred.semantic == std::vector<std::uint32_t>{3, 3, 3, 3});
}

TEST_CASE("oracle pipeline is exact on generated separable scenes") {
  SceneSpec spec;
  spec.seed = 4242;
  spec.separation = 2.0;
  spec.separable = true;
  spec.connected = true;
  spec.instances = {
      InstanceSpec{3, 150, 0.12, 1, BlobShape::box},
      InstanceSpec{2, 80, 0.10, 10, BlobShape::gauss},
  };
  spec.stuff = {StuffSpec{4, 12.0, 4.0}};
  const SynthScene scene = generate_scene(spec);

  const Vocabulary vocab = builtin_vocabulary("vocab1");
  const auto gt_sets = instance_sets(scene.labels, vocab);
  REQUIRE(gt_sets.size() == 5);
  ScoreContext ctx;
  ctx.gt_instances = &gt_sets;

  PanopticPrediction pred =
      segment_scan(scene.cloud, scene.labels, vocab, make_oracle_scorer(), ctx);
  majority_vote(pred);

  std::set<std::set<int>> want;
  for (const auto& inst : gt_sets) want.insert(std::set<int>(inst.begin(), inst.end()));
  CHECK(prediction_instances(pred) == want);
  CHECK(pred.semantic == scene.labels.semantic);
  CHECK(pred.instance == scene.labels.instance);
}
