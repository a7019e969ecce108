#include "lps/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "scan formats are little endian; big endian hosts need byte swaps");

namespace lps {

namespace {

std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  if (end < 0) throw format_error("cannot stat " + path.string());
  std::vector<char> bytes(static_cast<std::size_t>(end));
  in.seekg(0, std::ios::beg);
  if (!bytes.empty()) in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw format_error("short read on " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw format_error("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw format_error("short write on " + path.string());
}

}  // namespace

PointCloud read_point_cloud(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw format_error(path.string() + ": truncated point record at byte offset " +
                       std::to_string(bytes.size() - bytes.size() % 16));
  }
  const std::size_t n = bytes.size() / 16;
  PointCloud cloud;
  cloud.points.resize(n);
  cloud.intensity.emplace(n);
  cloud.scan_id = path.stem().string();
  for (std::size_t i = 0; i < n; ++i) {
    float v[4];
    std::memcpy(v, bytes.data() + i * 16, 16);
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) {
      throw format_error(path.string() + ": non-finite coordinate at point " + std::to_string(i));
    }
    cloud.points[i] = {static_cast<double>(v[0]), static_cast<double>(v[1]),
                       static_cast<double>(v[2])};
    (*cloud.intensity)[i] = v[3];
  }
  return cloud;
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  const std::size_t n = cloud.size();
  if (cloud.intensity && cloud.intensity->size() != n) {
    throw std::invalid_argument("write_point_cloud: intensity length mismatch");
  }
  std::vector<float> buf(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    buf[i * 4 + 0] = static_cast<float>(cloud.points[i].x);
    buf[i * 4 + 1] = static_cast<float>(cloud.points[i].y);
    buf[i * 4 + 2] = static_cast<float>(cloud.points[i].z);
    buf[i * 4 + 3] = cloud.intensity ? (*cloud.intensity)[i] : 0.0f;
  }
  write_file_bytes(path, buf.data(), buf.size() * sizeof(float));
}

LabelMap read_labels(const std::filesystem::path& path, std::size_t expected_points,
                     LabelSpace space) {
  LabelMap labels = read_labels(path, space);
  if (labels.size() != expected_points) {
    throw format_error(path.string() + ": has " + std::to_string(labels.size()) +
                       " labels, expected " + std::to_string(expected_points));
  }
  return labels;
}

LabelMap read_labels(const std::filesystem::path& path, LabelSpace space) {
  const std::vector<char> bytes = read_file_bytes(path);
  if (bytes.size() % 4 != 0) {
    throw format_error(path.string() + ": truncated label record at byte offset " +
                       std::to_string(bytes.size() - bytes.size() % 4));
  }
  const std::size_t n = bytes.size() / 4;
  LabelMap labels;
  labels.space = space;
  labels.semantic.resize(n);
  labels.instance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t word;
    std::memcpy(&word, bytes.data() + i * 4, 4);
    labels.semantic[i] = word & 0xffffu;
    labels.instance[i] = word >> 16;
  }
  return labels;
}

void write_labels(const LabelMap& labels, const std::filesystem::path& path) {
  if (labels.semantic.size() != labels.instance.size()) {
    throw std::invalid_argument("write_labels: semantic/instance length mismatch");
  }
  const std::size_t n = labels.size();
  std::vector<std::uint32_t> buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.semantic[i] > 0xffffu || labels.instance[i] > 0xffffu) {
      throw std::out_of_range("write_labels: id exceeds 16 bits at point " + std::to_string(i));
    }
    buf[i] = labels.semantic[i] | (labels.instance[i] << 16);
  }
  write_file_bytes(path, buf.data(), buf.size() * 4);
}

std::vector<float> read_scores(const std::filesystem::path& path, std::size_t expected_points) {
  const std::vector<char> bytes = read_file_bytes(path);
  if (bytes.size() != expected_points * 4) {
    throw format_error(path.string() + ": has " + std::to_string(bytes.size() / 4) +
                       " scores, expected " + std::to_string(expected_points));
  }
  std::vector<float> scores(expected_points);
  if (!scores.empty()) std::memcpy(scores.data(), bytes.data(), bytes.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0f && scores[i] <= 1.0f)) {
      throw format_error(path.string() + ": score out of [0,1] at point " + std::to_string(i));
    }
  }
  return scores;
}

void write_scores(std::span<const float> scores, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0f && scores[i] <= 1.0f)) {
      throw std::invalid_argument("write_scores: score out of [0,1] at point " +
                                  std::to_string(i));
    }
  }
  write_file_bytes(path, scores.data(), scores.size() * sizeof(float));
}

std::vector<Pose> read_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw format_error("cannot open " + path.string());
  std::vector<Pose> poses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 12) {
      throw format_error(path.string() + ":" + std::to_string(lineno) + ": expected 12 pose values, got " +
                         std::to_string(tokens.size()));
    }
    Pose p;
    for (int i = 0; i < 12; ++i) {
      std::size_t used = 0;
      try {
        p[i] = std::stod(tokens[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tokens[i].size()) {
        throw format_error(path.string() + ":" + std::to_string(lineno) + ": bad pose value '" +
                           tokens[i] + "'");
      }
    }
    poses.push_back(p);
  }
  return poses;
}

void write_poses(std::span<const Pose> poses, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw format_error("cannot open " + path.string() + " for writing");
  char buf[32];
  for (const Pose& p : poses) {
    for (int i = 0; i < 12; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", p[i]);
      out << (i ? " " : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw format_error("short write on " + path.string());
}

}  // namespace lps
