#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace selfrep {

struct CenterlinePoint {
  double s = 0.0;  // arc length [m]
  double x = 0.0;
  double y = 0.0;
};

/// Two-lane road segment described by its geometric indicators. The centerline is
/// the current lane's center; the adjacent (left) lane lies one lane width away.
struct RoadSegment {
  std::string id;
  double length = 0.0;  // [m]
  double w_min = 0.0;   // [m]
  double w_max = 0.0;   // [m]
  double k_min = 0.0;   // [1/m], <= 0
  double k_max = 0.0;   // [1/m], >= 0
  std::vector<CenterlinePoint> centerline;

  /// Lane width at arc length s; linear from w_min at the start to w_max at the end.
  double width_at(double s) const;
};

/// Value ranges the synthetic generator draws from (defaults: observed road data ranges).
struct SegmentRanges {
  double w_min_lo = 2.78, w_min_hi = 3.44;
  double w_max_lo = 2.89, w_max_hi = 3.84;
  double k_min_lo = -5.4e-4, k_min_hi = 0.0;
  double k_max_lo = 0.0, k_max_hi = 1.9e-4;
  double length_lo = 45.0, length_hi = 250.0;
};

/// Absolute slack when checking polyline curvature against [k_min, k_max].
inline constexpr double kCurvatureTolerance = 1e-6;

/// Throws ValidationError describing the first violated invariant.
void validate_segment(const RoadSegment& seg);

std::vector<RoadSegment> load_segments(const std::filesystem::path& csv_path);

/// Writes the segment table and one `<id>.centerline.csv` per segment next to it.
void save_segments(const std::filesystem::path& csv_path, std::span<const RoadSegment> segments);

std::vector<RoadSegment> generate_segments(int count, std::uint64_t seed, const SegmentRanges& ranges = {});

std::vector<RoadSegment> filter_min_length(std::span<const RoadSegment> segments, double min_len);

/// Frenet lookup built from a segment centerline: heading, curvature and world
/// position as functions of arc length. Queries past the ends extrapolate with the
/// boundary curvature.
class LaneFrame {
 public:
  explicit LaneFrame(const RoadSegment& seg);

  double length() const { return s_.back(); }
  double heading(double s) const;
  double curvature(double s) const;
  /// World position of the point at arc length s and left-normal offset n.
  void position(double s, double n, double& x, double& y) const;

 private:
  std::size_t locate(double s) const;

  std::vector<double> s_, x_, y_, heading_, curvature_;
};

/// Signed curvature of each polyline vertex (three-point circle; ends copy their neighbour).
std::vector<double> polyline_curvature(std::span<const CenterlinePoint> pts);

}  // namespace selfrep
