#pragma once

#include <span>
#include <string>
#include <vector>

#include "selfrep/conformal.hpp"
#include "selfrep/dataset.hpp"

namespace selfrep {

/// (w_min − w_veh) / 2: clearance on each side at the narrowest point of the lane,
/// resolved to 1e-12 m.
double free_lateral_space(double w_min, double w_veh);

/// Tie rule: hi equal to the free space is still feasible.
inline bool is_feasible(double hi, double eps_free) { return hi <= eps_free; }

struct SceneContext {
  RoadSegment segment;
  double vehicle_width = 1.96;  // [m]
  double speed_kmh = 50.0;
  DegradationSet degradation;
};

/// Per-feature value range the predictor was trained on.
struct FeatureRange {
  FeatureVector lo{}, hi{};

  static FeatureRange from_config(const SegmentRanges& roads, const ManeuverRanges& maneuvers);
  std::vector<std::string> violations(const FeatureVector& x) const;
};

enum class Verdict { feasible, infeasible, fallback };
const char* to_string(Verdict v);

struct ActionAssessment {
  std::string label;
  ManeuverParams params;
  PredictionInterval interval;
  double eps_free = 0.0;
  double margin = 0.0;  // eps_free − hi
  Verdict verdict = Verdict::infeasible;
  std::vector<std::string> warnings;
};

ActionAssessment assess_action(const SceneContext& scene, const ManeuverParams& params, const QuantileModel& model,
                               const CalibrationResult& calib, const FeatureRange& range);

/// One lane-change candidate per a_max value (v_end = current speed), sorted by
/// descending margin, followed by the out-of-model "stop" fallback.
std::vector<ActionAssessment> enumerate_admissible(const SceneContext& scene, std::span<const double> a_max_grid,
                                                   const QuantileModel& model, const CalibrationResult& calib,
                                                   const FeatureRange& range);

std::string assessment_json(const SceneContext& scene, double alpha, std::span<const ActionAssessment> actions);

}  // namespace selfrep
