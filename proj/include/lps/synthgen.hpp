#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lps/core.hpp"

namespace lps {

enum class BlobShape { box, gauss };

/// A group of identically-parameterized instances. `spacing` is the target
/// gap between consecutive points of a blob; it controls both density and the
/// epsilon at which the blob holds together.
struct InstanceSpec {
  int count = 1;
  int points = 100;
  double spacing = 0.2;
  std::uint32_t class_id = 1;
  BlobShape shape = BlobShape::box;
};

/// A flat jittered-grid region at ground level, instance id 0.
struct StuffSpec {
  std::uint32_t class_id = 1;
  double extent = 20.0;
  double density = 4.0;  // points per square meter
};

struct SceneSpec {
  std::uint64_t seed = 0;
  double separation = 2.0;  // minimum gap between points of different instances
  bool separable = true;    // require separation > coarsest epsilon
  bool connected = true;    // require blob connectivity at the finest epsilon
  std::vector<double> schedule;  // empty means the library default
  std::vector<InstanceSpec> instances;
  std::vector<StuffSpec> stuff;
};

struct SynthScene {
  PointCloud cloud;
  LabelMap labels;  // vocabulary space, instance ids 1..M in generation order
  int num_instances = 0;
};

/// Parse a scene spec from JSON. Unknown keys and malformed values raise
/// config_error naming `origin`.
SceneSpec parse_scene_spec(std::string_view json_text, const std::string& origin);

/// Deterministic in `spec.seed`. Throws config_error when the spec cannot
/// honor its own separability or connectivity promises against the schedule.
SynthScene generate_scene(const SceneSpec& spec);

}  // namespace lps
