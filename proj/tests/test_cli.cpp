#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lps/cli.hpp"
#include "lps/io.hpp"
#include "testutil.hpp"

using namespace lps;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_tool(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("lps");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(bool(f));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  REQUIRE(bool(f));
  f << text;
}

const char* kSpecJson = R"({
  "seed": 21,
  "separation": 2.0,
  "instances": [
    {"count": 2, "points": 70, "spacing": 0.12, "class_id": 1, "shape": "box"},
    {"count": 1, "points": 50, "spacing": 0.10, "class_id": 10, "shape": "gauss"}
  ],
  "stuff": [{"class_id": 4, "extent": 6.0, "density": 3.0}]
})";

/// Generates `count` scenes under dir/data and returns the data directory.
fs::path make_corpus(const fs::path& dir, int count) {
  spit(dir / "spec.json", kSpecJson);
  const int rc = run_tool({"generate", "--spec", (dir / "spec.json").string(), "--count",
                           std::to_string(count), "--out", (dir / "data").string()});
  REQUIRE(rc == 0);
  return dir / "data";
}

}  // namespace

TEST_CASE("generate, segment, evaluate round trip") {
  const fs::path dir = testutil::fresh_dir("cli_e2e");
  const fs::path data = make_corpus(dir, 2);
  CHECK(fs::is_regular_file(data / "velodyne" / "000000.bin"));
  CHECK(fs::is_regular_file(data / "velodyne" / "000001.bin"));
  CHECK(fs::is_regular_file(data / "labels" / "000001.label"));

  const fs::path pred = dir / "pred";
  REQUIRE(run_tool({"segment", "--cloud-dir", (data / "velodyne").string(), "--label-dir",
                    (data / "labels").string(), "--label-space", "vocab", "--out",
                    pred.string()}) == 0);
  CHECK(fs::is_regular_file(pred / "000000.label"));
  CHECK(fs::is_regular_file(pred / "000001.label"));

  const json summary = json::parse(slurp(pred / "summary.json"));
  CHECK(summary.at("mode") == "agnostic");
  CHECK(summary.at("vocab") == "vocab1");
  CHECK(summary.at("scorer") == "oracle");
  REQUIRE(summary.at("schedule").size() == 6);
  CHECK(summary.at("schedule")[0].get<double>() == 1.2488);
  REQUIRE(summary.at("scans").size() == 2);
  CHECK(summary.at("scans")[0].at("id") == "000000");
  CHECK(summary.at("scans")[0].at("instances").get<int>() == 3);
  CHECK(summary.at("scans")[1].at("instances").get<int>() == 3);
  CHECK(summary.at("total_instances").get<int>() == 6);
  CHECK(summary.at("failed").empty());

  const fs::path eval = dir / "eval";
  REQUIRE(run_tool({"evaluate", "--pred-dir", pred.string(), "--gt-dir", (data / "labels").string(),
                    "--gt-space", "vocab", "--out", eval.string()}) == 0);
  const json report = json::parse(slurp(eval / "report.json"));
  CHECK(report.at("scans").get<int>() == 2);
  CHECK(report.at("aggregates").at("pq").get<double>() == 1.0);
  CHECK(report.at("aggregates").at("miou").get<double>() == 1.0);
  CHECK(report.at("aggregates").at("precision_things").get<double>() == 1.0);
  CHECK(report.at("unknown").at("uq").get<double>() == 1.0);
  const std::string text = slurp(eval / "report.txt");
  CHECK(text.find("car") != std::string::npos);
  CHECK(text.find("PQ") != std::string::npos);
}

TEST_CASE("a broken scan fails the run but not its neighbors") {
  const fs::path dir = testutil::fresh_dir("cli_fail");
  const fs::path data = make_corpus(dir, 2);
  fs::remove(data / "labels" / "000001.label");

  const fs::path pred = dir / "pred";
  CHECK(run_tool({"segment", "--cloud-dir", (data / "velodyne").string(), "--label-dir",
                  (data / "labels").string(), "--label-space", "vocab", "--out",
                  pred.string()}) == 3);
  CHECK(fs::is_regular_file(pred / "000000.label"));
  CHECK(!fs::exists(pred / "000001.label"));

  const json summary = json::parse(slurp(pred / "summary.json"));
  REQUIRE(summary.at("scans").size() == 1);
  CHECK(summary.at("scans")[0].at("id") == "000000");
  REQUIRE(summary.at("failed").size() == 1);
  CHECK(summary.at("failed")[0] == "000001");
}

TEST_CASE("configuration problems exit with code 2") {
  const fs::path dir = testutil::fresh_dir("cli_badargs");
  const fs::path data = make_corpus(dir, 1);
  const std::vector<std::string> base = {"segment",       "--cloud-dir",
                                         (data / "velodyne").string(), "--label-dir",
                                         (data / "labels").string(),   "--label-space",
                                         "vocab",         "--out",
                                         (dir / "pred").string()};

  SUBCASE("missing required flag") {
    CHECK(run_tool({"segment", "--out", (dir / "pred").string()}) == 2);
  }
  SUBCASE("unknown subcommand") { CHECK(run_tool({"frobnicate"}) == 2); }
  SUBCASE("no subcommand") { CHECK(run_tool({}) == 2); }
  SUBCASE("bad mode") {
    auto args = base;
    args.insert(args.end(), {"--mode", "bogus"});
    CHECK(run_tool(args) == 2);
  }
  SUBCASE("bad scorer") {
    auto args = base;
    args.insert(args.end(), {"--scorer", "psychic"});
    CHECK(run_tool(args) == 2);
  }
  SUBCASE("bad label space") {
    auto args = base;
    args[6] = "cooked";
    CHECK(run_tool(args) == 2);
  }
  SUBCASE("point-avg without score dir") {
    auto args = base;
    args.insert(args.end(), {"--scorer", "point-avg"});
    CHECK(run_tool(args) == 2);
  }
  SUBCASE("generate with zero count") {
    CHECK(run_tool({"generate", "--spec", (dir / "spec.json").string(), "--count", "0", "--out",
                    (dir / "g").string()}) == 2);
  }
  SUBCASE("broken vocabulary path") {
    auto args = base;
    args.insert(args.end(), {"--vocab", (dir / "missing.vocab").string()});
    CHECK(run_tool(args) == 2);
  }
}

TEST_CASE("environment variables stand in for flags") {
  const fs::path dir = testutil::fresh_dir("cli_env");
  const fs::path data = make_corpus(dir, 1);

  REQUIRE(setenv("LPS_MODE", "specific", 1) == 0);
  const int rc = run_tool({"segment", "--cloud-dir", (data / "velodyne").string(), "--label-dir",
                           (data / "labels").string(), "--label-space", "vocab", "--out",
                           (dir / "pred").string()});
  REQUIRE(unsetenv("LPS_MODE") == 0);
  REQUIRE(rc == 0);

  const json summary = json::parse(slurp(dir / "pred" / "summary.json"));
  CHECK(summary.at("mode") == "specific");
}

TEST_CASE("segment output is identical across reruns and worker counts") {
  const fs::path dir = testutil::fresh_dir("cli_workers");
  const fs::path data = make_corpus(dir, 3);

  auto segment_into = [&](const fs::path& out, const std::string& workers) {
    REQUIRE(run_tool({"segment", "--cloud-dir", (data / "velodyne").string(), "--label-dir",
                      (data / "labels").string(), "--label-space", "vocab", "--workers", workers,
                      "--out", out.string()}) == 0);
  };
  segment_into(dir / "a", "1");
  segment_into(dir / "b", "1");
  segment_into(dir / "c", "2");

  for (const char* name : {"000000.label", "000001.label", "000002.label", "summary.json"}) {
    const std::string a = slurp(dir / "a" / name);
    CHECK(a == slurp(dir / "b" / name));
    CHECK(a == slurp(dir / "c" / name));
  }
}

TEST_CASE("an empty scan directory yields an empty summary") {
  const fs::path dir = testutil::fresh_dir("cli_empty");
  fs::create_directories(dir / "clouds");
  fs::create_directories(dir / "labels");
  CHECK(run_tool({"segment", "--cloud-dir", (dir / "clouds").string(), "--label-dir",
                  (dir / "labels").string(), "--out", (dir / "pred").string()}) == 0);
  const json summary = json::parse(slurp(dir / "pred" / "summary.json"));
  CHECK(summary.at("scans").empty());
  CHECK(summary.at("total_points").get<int>() == 0);
  CHECK(summary.at("failed").empty());
}

TEST_CASE("train-scorer produces a model the segmenter accepts") {
  const fs::path dir = testutil::fresh_dir("cli_train");
  const fs::path data = make_corpus(dir, 2);

  const fs::path model_dir = dir / "model";
  REQUIRE(run_tool({"train-scorer", "--cloud-dir", (data / "velodyne").string(), "--label-dir",
                    (data / "labels").string(), "--label-space", "vocab", "--epochs", "3",
                    "--batch", "64", "--seed", "9", "--out", model_dir.string()}) == 0);
  REQUIRE(fs::is_regular_file(model_dir / "scorer.model"));
  const std::string curve = slurp(model_dir / "loss_curve.txt");
  CHECK(curve.rfind("0 ", 0) == 0);

  REQUIRE(run_tool({"segment", "--cloud-dir", (data / "velodyne").string(), "--label-dir",
                    (data / "labels").string(), "--label-space", "vocab", "--scorer",
                    "model:" + (model_dir / "scorer.model").string(), "--out",
                    (dir / "pred").string()}) == 0);
  const json summary = json::parse(slurp(dir / "pred" / "summary.json"));
  CHECK(summary.at("failed").empty());
  CHECK(summary.at("scorer").get<std::string>().rfind("model:", 0) == 0);
}

TEST_CASE("transfer-labels stamps map labels onto scans") {
  const fs::path dir = testutil::fresh_dir("cli_transfer");

  PointCloud map_cloud;
  map_cloud.points = {{0, 0, 0}, {5, 0, 0}, {10, 0, 0}};
  write_point_cloud(map_cloud, dir / "map.bin");
  LabelMap map_labels;
  map_labels.space = LabelSpace::vocab;
  map_labels.semantic = {1, 4, 2};
  map_labels.instance = {7, 0, 0};
  write_labels(map_labels, dir / "map.label");

  PointCloud scan;
  scan.points = {{0.05, 0, 0}, {5.0, 0.2, 0}, {7.5, 0, 0}};
  fs::create_directories(dir / "scans");
  write_point_cloud(scan, dir / "scans" / "000000.bin");
  spit(dir / "poses.txt", "1 0 0 0 0 1 0 0 0 0 1 0\n");

  REQUIRE(run_tool({"transfer-labels", "--map-cloud", (dir / "map.bin").string(), "--map-labels",
                    (dir / "map.label").string(), "--label-space", "vocab", "--cloud-dir",
                    (dir / "scans").string(), "--poses", (dir / "poses.txt").string(), "--out",
                    (dir / "xfer").string()}) == 0);

  const LabelMap out = read_labels(dir / "xfer" / "000000.label", 3, LabelSpace::vocab);
  CHECK(out.semantic[0] == 1);  // 5 cm from the first map point
  CHECK(out.instance[0] == 7);
  CHECK(out.semantic[1] == 0);  // 20 cm away: outside the default radius
  CHECK(out.semantic[2] == 0);  // between map points, nothing close
  CHECK(out.instance[2] == 0);

  SUBCASE("a wider radius reaches the second point") {
    REQUIRE(run_tool({"transfer-labels", "--map-cloud", (dir / "map.bin").string(), "--map-labels",
                      (dir / "map.label").string(), "--label-space", "vocab", "--cloud-dir",
                      (dir / "scans").string(), "--poses", (dir / "poses.txt").string(),
                      "--radius", "0.5", "--out", (dir / "xfer_wide").string()}) == 0);
    const LabelMap wide = read_labels(dir / "xfer_wide" / "000000.label", 3, LabelSpace::vocab);
    CHECK(wide.semantic[1] == 4);
  }
  SUBCASE("pose count mismatch is a data error") {
    spit(dir / "poses.txt", "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1 0\n");
    CHECK(run_tool({"transfer-labels", "--map-cloud", (dir / "map.bin").string(), "--map-labels",
                    (dir / "map.label").string(), "--label-space", "vocab", "--cloud-dir",
                    (dir / "scans").string(), "--poses", (dir / "poses.txt").string(), "--out",
                    (dir / "xfer2").string()}) == 3);
  }
}

TEST_CASE("generate is deterministic and the seed flag wins over the spec") {
  const fs::path dir = testutil::fresh_dir("cli_gen");
  spit(dir / "spec.json", kSpecJson);
  const std::string spec = (dir / "spec.json").string();

  REQUIRE(run_tool({"generate", "--spec", spec, "--seed", "5", "--out", (dir / "a").string()}) == 0);
  REQUIRE(run_tool({"generate", "--spec", spec, "--seed", "5", "--out", (dir / "b").string()}) == 0);
  REQUIRE(run_tool({"generate", "--spec", spec, "--seed", "6", "--out", (dir / "c").string()}) == 0);

  const std::string a = slurp(dir / "a" / "velodyne" / "000000.bin");
  CHECK(a == slurp(dir / "b" / "velodyne" / "000000.bin"));
  CHECK(a != slurp(dir / "c" / "velodyne" / "000000.bin"));
  CHECK(slurp(dir / "a" / "labels" / "000000.label") ==
        slurp(dir / "b" / "labels" / "000000.label"));

  SUBCASE("count produces consecutive distinct scenes") {
    REQUIRE(run_tool({"generate", "--spec", spec, "--seed", "5", "--count", "2", "--out",
                      (dir / "two").string()}) == 0);
    CHECK(slurp(dir / "two" / "velodyne" / "000000.bin") == a);
    CHECK(slurp(dir / "two" / "velodyne" / "000001.bin") !=
          slurp(dir / "two" / "velodyne" / "000000.bin"));
  }
}
