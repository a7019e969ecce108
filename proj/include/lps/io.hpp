#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lps/core.hpp"

namespace lps {

// Binary scan formats, little endian, no headers:
//   cloud:  float32 x,y,z,intensity per point (16 bytes)
//   labels: uint32 per point, low 16 bits semantic, high 16 bits instance
//   scores: float32 per point in [0, 1]
// Pose files are text, one pose per line: 12 reals, row-major 3x4 [R | t].

PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);

LabelMap read_labels(const std::filesystem::path& path, std::size_t expected_points,
                     LabelSpace space = LabelSpace::raw);
/// Point count inferred from the file size.
LabelMap read_labels(const std::filesystem::path& path, LabelSpace space = LabelSpace::raw);
void write_labels(const LabelMap& labels, const std::filesystem::path& path);

std::vector<float> read_scores(const std::filesystem::path& path, std::size_t expected_points);
void write_scores(std::span<const float> scores, const std::filesystem::path& path);

using Pose = std::array<double, 12>;

std::vector<Pose> read_poses(const std::filesystem::path& path);
void write_poses(std::span<const Pose> poses, const std::filesystem::path& path);

inline Vec3 apply_pose(const Pose& p, const Vec3& v) {
  return {p[0] * v.x + p[1] * v.y + p[2] * v.z + p[3],
          p[4] * v.x + p[5] * v.y + p[6] * v.z + p[7],
          p[8] * v.x + p[9] * v.y + p[10] * v.z + p[11]};
}

}  // namespace lps
