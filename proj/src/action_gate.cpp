#include "selfrep/action_gate.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "selfrep/errors.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep {

double free_lateral_space(double w_min, double w_veh) {
  if (!(w_veh > 0.0) || !(w_min > 0.0)) throw ValidationError("widths must be positive");
  if (w_veh > w_min) throw ValidationError("vehicle is wider than the lane");
  // Widths are given in decimal; binary subtraction leaves representation residue
  // (2.78 - 1.96 gives 0.8199999999999998). Snapping to a 1e-12 m grid returns the
  // double nearest to the decimal result, e.g. exactly 0.41 for (2.78, 1.96).
  return std::round((w_min - w_veh) / 2.0 * 1e12) / 1e12;
}

FeatureRange FeatureRange::from_config(const SegmentRanges& r, const ManeuverRanges& m) {
  FeatureRange fr;
  fr.lo = {r.w_min_lo, r.w_max_lo, r.k_min_lo, r.k_max_lo, m.v_lo_kmh, m.v_lo_kmh, m.a_lo};
  fr.hi = {r.w_min_hi, r.w_max_hi, r.k_min_hi, r.k_max_hi, m.v_hi_kmh, m.v_hi_kmh, m.a_hi};
  for (std::size_t f = 7; f < kFeatureCount; ++f) {
    fr.lo[f] = 0.0;
    fr.hi[f] = 1.0;
  }
  return fr;
}

std::vector<std::string> FeatureRange::violations(const FeatureVector& x) const {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (x[f] < lo[f] || x[f] > hi[f])
      out.push_back(std::string(feature_names()[f]) + "=" + io::format_double(x[f]) + " outside training range [" +
                    io::format_double(lo[f]) + ", " + io::format_double(hi[f]) + "]");
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::feasible: return "feasible";
    case Verdict::infeasible: return "infeasible";
    case Verdict::fallback: return "fallback";
  }
  return "?";
}

ActionAssessment assess_action(const SceneContext& scene, const ManeuverParams& params, const QuantileModel& model,
                               const CalibrationResult& calib, const FeatureRange& range) {
  ActionAssessment a;
  a.params = params;
  a.label = "lane_change a_max=" + io::format_double(params.a_max);
  const FeatureVector x = make_features(scene.segment, params, scene.degradation);
  a.interval = predict_interval(model, calib, x);
  a.eps_free = free_lateral_space(scene.segment.w_min, scene.vehicle_width);
  a.margin = a.eps_free - a.interval.hi;
  a.verdict = is_feasible(a.interval.hi, a.eps_free) ? Verdict::feasible : Verdict::infeasible;
  for (auto& w : range.violations(x)) a.warnings.push_back("extrapolation: " + w);
  if (a.interval.infinite) a.warnings.push_back("calibration set too small for this alpha; interval is unbounded");
  return a;
}

std::vector<ActionAssessment> enumerate_admissible(const SceneContext& scene, std::span<const double> a_max_grid,
                                                   const QuantileModel& model, const CalibrationResult& calib,
                                                   const FeatureRange& range) {
  std::vector<ActionAssessment> out;
  out.reserve(a_max_grid.size() + 1);
  for (double a : a_max_grid) {
    ManeuverParams p;
    p.v_init_kmh = scene.speed_kmh;
    p.v_end_kmh = scene.speed_kmh;
    p.a_max = a;
    out.push_back(assess_action(scene, p, model, calib, range));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ActionAssessment& l, const ActionAssessment& r) { return l.margin > r.margin; });
  ActionAssessment stop;
  stop.label = "stop";
  stop.params.v_init_kmh = scene.speed_kmh;
  stop.params.v_end_kmh = 0.0;
  stop.params.a_max = 0.0;
  stop.eps_free = free_lateral_space(scene.segment.w_min, scene.vehicle_width);
  stop.margin = stop.eps_free;
  stop.verdict = Verdict::fallback;
  stop.warnings.push_back("out-of-model option; not rated by the predictor");
  out.push_back(std::move(stop));
  return out;
}

std::string assessment_json(const SceneContext& scene, double alpha, std::span<const ActionAssessment> actions) {
  using Json = nlohmann::ordered_json;
  const auto& d = scene.degradation;
  Json j;
  j["scene"] = {{"segment_id", scene.segment.id},
                {"w_min_m", scene.segment.w_min},
                {"w_max_m", scene.segment.w_max},
                {"k_min_1pm", scene.segment.k_min},
                {"k_max_1pm", scene.segment.k_max},
                {"vehicle_width_m", scene.vehicle_width},
                {"speed_kmh", scene.speed_kmh},
                {"degradation",
                 {{"steer_angle", d.steer_angle}, {"steer_rate", d.steer_rate}, {"torque", d.torque}}}};
  j["alpha"] = alpha;
  Json arr = Json::array();
  for (const auto& a : actions) {
    Json c;
    c["option"] = a.label;
    c["a_max"] = a.params.a_max;
    c["v_end_kmh"] = a.params.v_end_kmh;
    if (a.verdict == Verdict::fallback) {
      c["lo_m"] = nullptr;
      c["hi_m"] = nullptr;
    } else {
      c["lo_m"] = a.interval.lo;
      c["hi_m"] = a.interval.infinite ? Json(nullptr) : Json(a.interval.hi);
    }
    c["eps_free_m"] = a.eps_free;
    c["margin_m"] = a.verdict == Verdict::fallback || a.interval.infinite ? Json(nullptr) : Json(a.margin);
    c["verdict"] = to_string(a.verdict);
    c["warnings"] = a.warnings;
    arr.push_back(std::move(c));
  }
  j["candidates"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace selfrep
