#include "lps/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <nlohmann/json.hpp>

#include "lps/pipeline.hpp"
#include "lps/rng.hpp"

namespace lps {

namespace {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<std::string_view> allowed,
                  const std::string& origin, const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (std::string_view a : allowed) {
      if (item.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw config_error(origin + ": unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& origin) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(origin + ": bad value for '" + std::string(key) + "'");
  }
}

BlobShape parse_shape(const json& j, const std::string& origin) {
  const std::string s = get_or<std::string>(j, "shape", "box", origin);
  if (s == "box") return BlobShape::box;
  if (s == "gauss") return BlobShape::gauss;
  throw config_error(origin + ": shape must be 'box' or 'gauss', got '" + s + "'");
}

Vec3 random_dir(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n2 = dot(v, v);
    if (n2 > 1e-12) return (1.0 / std::sqrt(n2)) * v;
  }
}

double clamp_to(double v, double h) { return std::clamp(v, -h, h); }

// Random tree of points inside the cube [-h, h]^3 around the origin. Each new
// point steps at most 0.95 * spacing from an existing one, and clamping to
// the cube only shortens that step, so the blob is a single component at any
// epsilon >= spacing.
std::vector<Vec3> make_blob(Rng& rng, const InstanceSpec& s, double h) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(s.points));
  pts.push_back({0.0, 0.0, 0.0});
  while (static_cast<int>(pts.size()) < s.points) {
    const std::size_t parent = rng.uniform() < 0.35 ? rng.uniform_int(pts.size()) : pts.size() - 1;
    const Vec3& p = pts[parent];
    Vec3 cand = p;
    for (int attempt = 0; attempt < 16; ++attempt) {
      const Vec3 dir = random_dir(rng);
      double step;
      if (s.shape == BlobShape::box) {
        step = rng.uniform(0.2 * s.spacing, 0.95 * s.spacing);
      } else {
        step = std::clamp(std::abs(rng.normal()) * 0.5 * s.spacing, 0.2 * s.spacing,
                          0.95 * s.spacing);
      }
      const Vec3 raw = p + step * dir;
      cand = {clamp_to(raw.x, h), clamp_to(raw.y, h), clamp_to(raw.z, h)};
      if (squared_dist(cand, p) >= 0.05 * s.spacing * (0.05 * s.spacing)) break;
    }
    pts.push_back(cand);
  }
  return pts;
}

double blob_half_extent(const InstanceSpec& s) {
  return std::max(0.6, s.spacing * std::cbrt(static_cast<double>(s.points)));
}

}  // namespace

SceneSpec parse_scene_spec(std::string_view text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(origin + ": " + e.what());
  }
  if (!j.is_object()) throw config_error(origin + ": top level must be an object");
  require_keys(j, {"seed", "separation", "separable", "connected", "schedule", "instances", "stuff"},
               origin, "scene spec");

  SceneSpec spec;
  spec.seed = get_or<std::uint64_t>(j, "seed", 0, origin);
  spec.separation = get_or<double>(j, "separation", 2.0, origin);
  spec.separable = get_or<bool>(j, "separable", true, origin);
  spec.connected = get_or<bool>(j, "connected", true, origin);
  spec.schedule = get_or<std::vector<double>>(j, "schedule", {}, origin);

  if (j.contains("instances")) {
    const json& arr = j.at("instances");
    if (!arr.is_array()) throw config_error(origin + ": 'instances' must be an array");
    for (const json& ji : arr) {
      if (!ji.is_object()) throw config_error(origin + ": instance entries must be objects");
      require_keys(ji, {"count", "points", "spacing", "class_id", "shape"}, origin,
                   "instance entry");
      InstanceSpec s;
      s.count = get_or<int>(ji, "count", 1, origin);
      s.points = get_or<int>(ji, "points", 100, origin);
      s.spacing = get_or<double>(ji, "spacing", 0.2, origin);
      s.class_id = get_or<std::uint32_t>(ji, "class_id", 1, origin);
      s.shape = parse_shape(ji, origin);
      spec.instances.push_back(s);
    }
  }
  if (j.contains("stuff")) {
    const json& arr = j.at("stuff");
    if (!arr.is_array()) throw config_error(origin + ": 'stuff' must be an array");
    for (const json& js : arr) {
      if (!js.is_object()) throw config_error(origin + ": stuff entries must be objects");
      require_keys(js, {"class_id", "extent", "density"}, origin, "stuff entry");
      StuffSpec s;
      s.class_id = get_or<std::uint32_t>(js, "class_id", 1, origin);
      s.extent = get_or<double>(js, "extent", 20.0, origin);
      s.density = get_or<double>(js, "density", 4.0, origin);
      spec.stuff.push_back(s);
    }
  }
  return spec;
}

SynthScene generate_scene(const SceneSpec& spec) {
  const std::vector<double> schedule =
      spec.schedule.empty()
          ? std::vector<double>(default_schedule().begin(), default_schedule().end())
          : spec.schedule;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0) || !std::isfinite(schedule[i]) ||
        (i > 0 && !(schedule[i] < schedule[i - 1]))) {
      throw config_error("generate_scene: schedule must be strictly decreasing and positive");
    }
  }
  if (schedule.empty()) throw config_error("generate_scene: schedule is empty");
  if (!(spec.separation > 0.0) || !std::isfinite(spec.separation)) {
    throw config_error("generate_scene: separation must be positive and finite");
  }
  if (spec.separable && spec.separation <= schedule.front()) {
    throw config_error(
        "generate_scene: separable scene needs separation above the coarsest epsilon");
  }
  for (const InstanceSpec& s : spec.instances) {
    if (s.count < 1 || s.points < 1) {
      throw config_error("generate_scene: instance count and points must be at least 1");
    }
    if (!(s.spacing > 0.0) || !std::isfinite(s.spacing)) {
      throw config_error("generate_scene: instance spacing must be positive and finite");
    }
    if (s.class_id == kIgnoreClass) {
      throw config_error("generate_scene: instance class id 0 is reserved");
    }
    if (spec.connected && s.spacing > schedule.back()) {
      throw config_error(
          "generate_scene: connected blobs need spacing at most the finest epsilon");
    }
  }
  for (const StuffSpec& s : spec.stuff) {
    if (!(s.extent > 0.0) || !std::isfinite(s.extent) || !(s.density > 0.0) ||
        !std::isfinite(s.density)) {
      throw config_error("generate_scene: stuff extent and density must be positive and finite");
    }
    if (s.class_id == kIgnoreClass) {
      throw config_error("generate_scene: stuff class id 0 is reserved");
    }
  }

  int total_instances = 0;
  double h_max = 0.0;
  for (const InstanceSpec& s : spec.instances) {
    total_instances += s.count;
    h_max = std::max(h_max, blob_half_extent(s));
  }

  // Blob centers live on a cubic lattice whose pitch leaves at least
  // `separation` between the bounding cubes of any two blobs.
  const double pitch = spec.separation + 2.0 * std::sqrt(3.0) * h_max + 1e-6;
  const int side = std::max(1, static_cast<int>(std::ceil(std::cbrt(double(total_instances)))));
  auto center_of = [&](int slot) {
    const int iz = slot / (side * side);
    const int iy = (slot / side) % side;
    const int ix = slot % side;
    return Vec3{ix * pitch, iy * pitch, iz * pitch + h_max + 0.3};
  };

  Rng rng(spec.seed);
  SynthScene scene;
  scene.labels.space = LabelSpace::vocab;
  scene.num_instances = total_instances;

  int slot = 0;
  std::uint32_t next_instance = 1;
  for (const InstanceSpec& s : spec.instances) {
    const double h = blob_half_extent(s);
    for (int k = 0; k < s.count; ++k) {
      const Vec3 c = center_of(slot++);
      for (const Vec3& p : make_blob(rng, s, h)) {
        scene.cloud.points.push_back(c + p);
        scene.labels.semantic.push_back(s.class_id);
        scene.labels.instance.push_back(next_instance);
      }
      ++next_instance;
    }
  }

  for (const StuffSpec& s : spec.stuff) {
    const double g = 1.0 / std::sqrt(s.density);
    const int n = std::max(1, static_cast<int>(std::llround(s.extent / g)));
    const double cell = s.extent / n;
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        const double x = -0.5 * s.extent + (ix + 0.5) * cell + rng.uniform(-0.3, 0.3) * g;
        const double y = -0.5 * s.extent + (iy + 0.5) * cell + rng.uniform(-0.3, 0.3) * g;
        const double z = rng.uniform(0.0, 0.02);
        scene.cloud.points.push_back({x, y, z});
        scene.labels.semantic.push_back(s.class_id);
        scene.labels.instance.push_back(0);
      }
    }
  }
  return scene;
}

}  // namespace lps
