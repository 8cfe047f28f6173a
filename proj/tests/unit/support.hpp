#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "selfrep/road_model.hpp"

namespace selfrep::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("selfrep_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Straight segment along +x with a centerline point every metre.
inline RoadSegment straight_segment(double length, double w_min, double w_max, const std::string& id = "straight") {
  RoadSegment seg;
  seg.id = id;
  seg.length = length;
  seg.w_min = w_min;
  seg.w_max = w_max;
  for (int i = 0; double(i) < length; ++i) seg.centerline.push_back({double(i), double(i), 0.0});
  seg.centerline.push_back({length, length, 0.0});
  return seg;
}

/// Circular arc of radius r turning left (positive curvature).
inline RoadSegment arc_segment(double length, double radius, double width) {
  RoadSegment seg;
  seg.id = "arc";
  seg.length = length;
  seg.w_min = seg.w_max = width;
  seg.k_min = 0.0;
  seg.k_max = 1.0 / radius;
  const int n = static_cast<int>(length);
  for (int i = 0; i <= n; ++i) {
    const double s = length * i / n;
    seg.centerline.push_back({s, radius * std::sin(s / radius), radius * (1.0 - std::cos(s / radius))});
  }
  return seg;
}

}  // namespace selfrep::testing
