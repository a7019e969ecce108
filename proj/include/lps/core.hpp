#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lps {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// All neighborhood predicates in the library compare squared distances in
// double, closed ball (<= r*r). Keeping one definition here means the grid,
// the brute-force references and the transfer cutoff agree bit for bit.
inline double squared_dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

/// One lidar sweep. Coordinates are meters in the sensor frame.
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<float>> intensity;  // same length as points when present
  std::string scan_id;

  std::size_t size() const { return points.size(); }
};

enum class LabelSpace { raw, vocab };

/// Per-point semantic class and instance id. Instance 0 means "no instance".
/// `space` records whether semantic ids are dataset-raw or vocabulary ids.
struct LabelMap {
  std::vector<std::uint32_t> semantic;
  std::vector<std::uint32_t> instance;
  LabelSpace space = LabelSpace::raw;

  std::size_t size() const { return semantic.size(); }
};

/// Pipeline output: semantics in vocabulary space, instance ids contiguous
/// 1..M over the thing/other points, 0 elsewhere. Same layout as LabelMap so
/// the label writer applies unchanged.
using PanopticPrediction = LabelMap;

/// Vocabulary class id reserved for dropped points.
constexpr std::uint32_t kIgnoreClass = 0;

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct mapping_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct training_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lps
