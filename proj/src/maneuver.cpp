#include "selfrep/maneuver.hpp"

#include <algorithm>
#include <cmath>

#include "selfrep/errors.hpp"
#include "selfrep/text_io.hpp"
#include "selfrep/units.hpp"

namespace selfrep {
namespace {

// Rest-to-rest quintic in normalized time and its derivatives.
double quintic(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double quintic_d1(double u) { return u * u * (30.0 + u * (-60.0 + 30.0 * u)); }
double quintic_d2(double u) { return u * (60.0 + u * (-180.0 + 120.0 * u)); }

double accel_budget(double lat_abs, double a_max, double a_curve) {
  const double ay = lat_abs + a_curve;
  return std::sqrt(std::max(0.0, a_max * a_max - ay * ay));
}

constexpr int kBudgetIntervals = 4096;
constexpr int kFineSubsteps = 16;

}  // namespace

ManeuverParams sample_maneuver_params(Rng& rng, const ManeuverRanges& r) {
  ManeuverParams p;
  p.direction = Direction::left;
  p.mu = 1.0;
  p.v_init_kmh = rng.uniform(r.v_lo_kmh, r.v_hi_kmh);
  p.v_end_kmh = rng.uniform(r.v_lo_kmh, r.v_hi_kmh);
  p.a_max = rng.uniform(r.a_lo, r.a_hi);
  return p;
}

double resolve_lane_offset(const RoadSegment& segment, double start_s) { return segment.width_at(start_s); }

double longitudinal_budget(double T, double w, double a_max, double a_curve) {
  const double scale = w / (T * T);
  double sum = 0.0;
  for (int i = 0; i <= kBudgetIntervals; ++i) {
    const double u = static_cast<double>(i) / kBudgetIntervals;
    const double f = accel_budget(scale * std::abs(quintic_d2(u)), a_max, a_curve);
    sum += (i == 0 || i == kBudgetIntervals) ? 0.5 * f : f;
  }
  return T * sum / kBudgetIntervals;
}

ReferenceTrajectory generate_lane_change(const RoadSegment& seg, const ManeuverParams& params,
                                         const LaneChangeOptions& opt) {
  if (params.direction != Direction::left) throw ValidationError("only left lane changes are supported");
  if (!(params.a_max > 0.0) || !(params.v_init_kmh > 0.0) || !(params.v_end_kmh > 0.0))
    throw ValidationError("maneuver parameters must be positive");
  if (!(opt.dt > 0.0) || !(opt.tolerance > 0.0)) throw ValidationError("invalid lane-change options");

  const double w = resolve_lane_offset(seg, opt.start_s);
  const double v0 = units::kmh_to_mps(params.v_init_kmh);
  const double v1 = units::kmh_to_mps(params.v_end_kmh);
  const double dv = v1 - v0;
  const double a = params.a_max;
  // Conservative bound on the curvature-induced lateral acceleration.
  const double k_abs = std::max(std::abs(seg.k_min), std::abs(seg.k_max));
  const double v_hi = std::max(v0, v1);
  const double a_curve = v_hi * v_hi * k_abs;
  if (a_curve >= a) throw InfeasibleManeuver("road curvature consumes the acceleration limit");

  const double t_lat = std::sqrt(kQuinticPeakAccel * w / (a - a_curve));
  double T = t_lat;
  if (dv != 0.0) {
    const double need = std::abs(dv);
    double lo = t_lat, hi = t_lat;
    while (longitudinal_budget(hi, w, a, a_curve) < need) {
      lo = hi;
      hi *= 1.5;
      if (hi > 600.0) throw InfeasibleManeuver("speed change not reachable");
    }
    while (hi - lo > opt.tolerance) {
      const double mid = 0.5 * (lo + hi);
      if (longitudinal_budget(mid, w, a, a_curve) >= need)
        hi = mid;
      else
        lo = mid;
    }
    T = hi;
  }

  const int K = std::max(1, static_cast<int>(std::ceil(T / opt.dt - 1e-9)));
  const int N = K * kFineSubsteps;
  const double hf = T / N;
  const double lat_scale = w / (T * T);
  auto budget_at = [&](double t) { return accel_budget(lat_scale * std::abs(quintic_d2(t / T)), a, a_curve); };

  std::vector<double> G(N + 1, 0.0);
  double prev = budget_at(0.0);
  for (int j = 1; j <= N; ++j) {
    const double cur = budget_at(j == N ? T : j * hf);
    G[j] = G[j - 1] + 0.5 * hf * (prev + cur);
    prev = cur;
  }
  const double sign = dv > 0.0 ? 1.0 : (dv < 0.0 ? -1.0 : 0.0);
  const double gain = dv != 0.0 ? std::abs(dv) / G[N] : 0.0;

  std::vector<double> vf(N + 1), sf(N + 1, 0.0);
  for (int j = 0; j <= N; ++j) vf[j] = v0 + sign * gain * G[j];
  vf[N] = v1;
  for (int j = 1; j <= N; ++j) sf[j] = sf[j - 1] + 0.5 * hf * (vf[j - 1] + vf[j]);
  if (opt.start_s + sf[N] > seg.length)
    throw InfeasibleManeuver("lane change needs " + std::to_string(sf[N]) + " m, segment offers " +
                             std::to_string(seg.length - opt.start_s) + " m");

  ReferenceTrajectory ref;
  ref.lane_ = std::make_shared<LaneFrame>(seg);
  ref.start_s_ = opt.start_s;
  ref.dt = T / K;
  ref.duration = T;
  ref.lane_offset = w;
  ref.params = params;
  ref.states.reserve(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    const int j = k * kFineSubsteps;
    ReferenceSample r;
    r.t = k == K ? T : k * ref.dt;
    double d_ddot;
    ref.lateral(r.t, r.d, r.d_dot, d_ddot);
    r.v = vf[j];
    r.s = opt.start_s + sf[j];
    r.ax = sign * gain * budget_at(r.t);
    const double kappa = ref.lane_->curvature(r.s);
    r.ay = d_ddot + r.v * r.v * kappa;
    r.psi_rel = std::atan2(r.d_dot, r.v);
    r.psi = ref.lane_->heading(r.s) + r.psi_rel;
    r.psidot = kappa * r.v + (d_ddot * r.v - r.d_dot * r.ax) / (r.v * r.v + r.d_dot * r.d_dot);
    ref.states.push_back(r);
  }
  return ref;
}

void ReferenceTrajectory::lateral(double t, double& d, double& d_dot, double& d_ddot) const {
  if (t <= 0.0 || duration <= 0.0) {
    d = d_dot = d_ddot = 0.0;
    return;
  }
  if (t >= duration) {
    d = lane_offset;
    d_dot = d_ddot = 0.0;
    return;
  }
  const double u = t / duration;
  d = lane_offset * quintic(u);
  d_dot = lane_offset * quintic_d1(u) / duration;
  d_ddot = lane_offset * quintic_d2(u) / (duration * duration);
}

ReferenceSample ReferenceTrajectory::at(double t) const {
  if (states.empty()) return {};
  if (t <= 0.0) return states.front();
  if (t >= duration) {
    const auto& end = states.back();
    ReferenceSample r;
    r.t = t;
    r.v = end.v;
    r.s = end.s + end.v * (t - duration);
    r.d = lane_offset;
    const double kappa = lane_->curvature(r.s);
    r.ay = r.v * r.v * kappa;
    r.psi = lane_->heading(r.s);
    r.psidot = kappa * r.v;
    return r;
  }
  const auto i = std::min(states.size() - 2, static_cast<std::size_t>(t / dt));
  const auto& p = states[i];
  const auto& q = states[i + 1];
  const double h = q.t - p.t;
  const double u = (t - p.t) / h;
  ReferenceSample r;
  r.t = t;
  // Cubic Hermite on s with v as its derivative.
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  r.s = h00 * p.s + h10 * h * p.v + h01 * q.s + h11 * h * q.v;
  r.v = p.v + u * (q.v - p.v);
  r.ax = p.ax + u * (q.ax - p.ax);
  double d_ddot;
  lateral(t, r.d, r.d_dot, d_ddot);
  const double kappa = lane_->curvature(r.s);
  r.ay = d_ddot + r.v * r.v * kappa;
  r.psi_rel = std::atan2(r.d_dot, r.v);
  r.psi = lane_->heading(r.s) + r.psi_rel;
  r.psidot = kappa * r.v + (d_ddot * r.v - r.d_dot * r.ax) / (r.v * r.v + r.d_dot * r.d_dot);
  return r;
}

void ReferenceTrajectory::lateral_at_arclength(double s, double& d, double& slope) const {
  if (states.empty() || s <= states.front().s) {
    d = 0.0;
    slope = 0.0;
    return;
  }
  if (s >= states.back().s) {
    d = lane_offset;
    slope = 0.0;
    return;
  }
  const auto it = std::upper_bound(states.begin(), states.end(), s,
                                   [](double value, const ReferenceSample& r) { return value < r.s; });
  const auto& q = *it;
  const auto& p = *(it - 1);
  double t = p.t + (s - p.s) / (q.s - p.s) * (q.t - p.t);
  // One Newton step on s(t) = s.
  const auto r = at(t);
  if (r.v > 0.0) t = std::clamp(t - (r.s - s) / r.v, p.t, q.t);
  double d_dot, d_ddot;
  lateral(t, d, d_dot, d_ddot);
  const double v = at(t).v;
  slope = v > 0.0 ? d_dot / v : 0.0;
}

void ReferenceTrajectory::write_csv(const std::filesystem::path& path) const {
  std::string out = "t_s,s_m,d_m,v_mps,ax_mps2,ay_mps2,psi_rad,psidot_radps\n";
  for (const auto& r : states) {
    for (double v : {r.t, r.s, r.d, r.v, r.ax, r.ay, r.psi}) {
      out += io::format_double(v);
      out += ',';
    }
    out += io::format_double(r.psidot);
    out += '\n';
  }
  io::write_file(path, out);
}

}  // namespace selfrep
