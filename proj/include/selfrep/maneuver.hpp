#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "selfrep/road_model.hpp"
#include "selfrep/rng.hpp"

namespace selfrep {

enum class Direction { left, right };

struct ManeuverParams {
  Direction direction = Direction::left;
  double v_init_kmh = 50.0;
  double v_end_kmh = 50.0;
  double a_max = 3.0;  // [m/s^2]
  double mu = 1.0;
};

struct ManeuverRanges {
  double v_lo_kmh = 30.0, v_hi_kmh = 50.0;
  double a_lo = 1.0, a_hi = 5.0;
};

/// Independent uniform draws of v_init, v_end, a_max (in that order); direction left, mu 1.
ManeuverParams sample_maneuver_params(Rng& rng, const ManeuverRanges& ranges = {});

/// One reference sample. `s` is current-lane arc length, `d` the planned offset from
/// the current-lane center, `psi` the world yaw and `psi_rel` the yaw relative to the
/// lane tangent. (ax, ay) are the point-mass acceleration components along and
/// across the lane.
struct ReferenceSample {
  double t = 0.0;
  double s = 0.0;
  double d = 0.0;
  double d_dot = 0.0;
  double v = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  double psi = 0.0;
  double psi_rel = 0.0;
  double psidot = 0.0;
};

struct LaneChangeOptions {
  double dt = 0.02;             // nominal sampling step [s]; the grid is stretched to end at T
  double tolerance = 1e-3;      // bisection tolerance on the duration [s]
  double start_s = 0.0;         // maneuver start along the segment [m]
};

/// Peak of |p''(tau)| for the rest-to-rest quintic p = 10 tau^3 - 15 tau^4 + 6 tau^5.
inline constexpr double kQuinticPeakAccel = 5.773502691896258;  // 10 / sqrt(3)

class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;

  double dt = 0.0;
  double duration = 0.0;
  double lane_offset = 0.0;
  ManeuverParams params;
  std::vector<ReferenceSample> states;

  bool empty() const { return states.empty(); }

  /// Sample at time t. Past the end the reference holds the target lane at v_end.
  ReferenceSample at(double t) const;

  /// Planned offset and its slope d(d)/ds at arc length s.
  void lateral_at_arclength(double s, double& d, double& slope) const;

  const LaneFrame& lane() const { return *lane_; }

  void write_csv(const std::filesystem::path& path) const;

 private:
  friend ReferenceTrajectory generate_lane_change(const RoadSegment&, const ManeuverParams&,
                                                  const LaneChangeOptions&);
  void lateral(double t, double& d, double& d_dot, double& d_ddot) const;

  std::shared_ptr<const LaneFrame> lane_;
  double start_s_ = 0.0;
};

/// Time-minimal left lane change: quintic lateral profile, longitudinal speed ramp
/// using the acceleration left over by the friction circle, and bisection on the
/// duration. Throws InfeasibleManeuver when the segment is too short.
ReferenceTrajectory generate_lane_change(const RoadSegment& segment, const ManeuverParams& params,
                                         const LaneChangeOptions& options = {});

/// Distance between the current and adjacent lane centers at the maneuver start.
double resolve_lane_offset(const RoadSegment& segment, double start_s = 0.0);

/// Longitudinal acceleration budget integral over a maneuver of duration T (exposed for tests).
double longitudinal_budget(double duration, double lane_offset, double a_max, double a_curve);

}  // namespace selfrep
