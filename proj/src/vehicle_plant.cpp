#include "selfrep/vehicle_plant.hpp"

#include <algorithm>
#include <cmath>

#include "selfrep/errors.hpp"

namespace selfrep {
namespace {

constexpr std::size_t kDim = 6 + kWheels;
using Vec = std::array<double, kDim>;

// Slip angles use max(|v_long|, kSlipSpeedFloor) so standstill stays well defined.
constexpr double kSlipSpeedFloor = 0.5;

Vec pack(const VehicleState& x) {
  return {x.s, x.d, x.psi, x.vx, x.vy, x.yaw_rate, x.steer[0], x.steer[1], x.steer[2], x.steer[3]};
}

VehicleState unpack(const Vec& v) {
  VehicleState x;
  x.s = v[0];
  x.d = v[1];
  x.psi = v[2];
  x.vx = v[3];
  x.vy = v[4];
  x.yaw_rate = v[5];
  for (std::size_t w = 0; w < kWheels; ++w) x.steer[w] = v[6 + w];
  return x;
}

double wheel_x(const PlantConfig& c, std::size_t w) { return w < 2 ? c.lf : -c.lr; }
double wheel_y(const PlantConfig& c, std::size_t w) { return (w == FL || w == RL) ? 0.5 * c.track : -0.5 * c.track; }

Vec derivative(const Vec& v, const ActuatorCommand& cmd, const PlantConfig& cfg, double kappa) {
  const VehicleState x = unpack(v);
  const auto forces = tire_forces(x, cmd, cfg);
  double fx = 0.0, fy = 0.0, mz = 0.0;
  for (std::size_t w = 0; w < kWheels; ++w) {
    const double c = std::cos(x.steer[w]), s = std::sin(x.steer[w]);
    const double bx = forces[w].fx * c - forces[w].fy * s;
    const double by = forces[w].fx * s + forces[w].fy * c;
    fx += bx;
    fy += by;
    mz += wheel_x(cfg, w) * by - wheel_y(cfg, w) * bx;
  }
  const double rolling = cfg.rolling_resistance * cfg.mass * units::kGravity * std::clamp(x.vx, -1.0, 1.0);
  const double aero = 0.5 * cfg.air_density * cfg.drag_area * x.vx * std::abs(x.vx);

  Vec dv{};
  const double cp = std::cos(x.psi), sp = std::sin(x.psi);
  const double s_dot = (x.vx * cp - x.vy * sp) / (1.0 - kappa * x.d);
  dv[0] = s_dot;
  dv[1] = x.vx * sp + x.vy * cp;
  dv[2] = x.yaw_rate - kappa * s_dot;
  dv[3] = (fx - rolling - aero) / cfg.mass + x.yaw_rate * x.vy;
  dv[4] = fy / cfg.mass - x.yaw_rate * x.vx;
  dv[5] = mz / cfg.yaw_inertia;
  for (std::size_t w = 0; w < kWheels; ++w) dv[6 + w] = cmd.steer_rate[w];
  return dv;
}

Vec axpy(const Vec& x, double a, const Vec& y) {
  Vec out;
  for (std::size_t i = 0; i < kDim; ++i) out[i] = x[i] + a * y[i];
  return out;
}

}  // namespace

DegradationSet DegradationSet::uniform(double f) {
  DegradationSet d;
  d.steer_angle.fill(f);
  d.steer_rate.fill(f);
  d.torque.fill(f);
  return d;
}

bool DegradationSet::valid() const {
  for (const auto* arr : {&steer_angle, &steer_rate, &torque})
    for (double f : *arr)
      if (!(f >= 0.0 && f <= 1.0)) return false;
  return true;
}

void PlantConfig::validate() const {
  for (double v : {mass, yaw_inertia, lf, lr, track, vehicle_width, cornering_stiffness, mu, wheel_radius, dt})
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("plant parameters must be positive and finite");
  for (double v : {rolling_resistance, drag_area, air_density})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("plant resistance parameters must be >= 0");
}

void steer_rate_window(double steer, double angle_limit, double dt, double& lo, double& hi) {
  hi = std::max(0.0, (angle_limit - steer) / dt);
  lo = std::min(0.0, (-angle_limit - steer) / dt);
}

ActuatorCommand apply_degradation(const ActuatorCommand& cmd, const VehicleState& state, const DegradationSet& deg,
                                  double dt, const ActuatorLimits& limits) {
  ActuatorCommand out;
  for (std::size_t w = 0; w < kWheels; ++w) {
    const double tmax = deg.torque[w] * limits.torque;
    out.torque[w] = std::clamp(cmd.torque[w], -tmax, tmax);

    const double rmax = deg.steer_rate[w] * limits.steer_rate;
    double lo, hi;
    steer_rate_window(state.steer[w], deg.steer_angle[w] * limits.steer_angle, dt, lo, hi);
    lo = std::max(lo, -rmax);
    hi = std::min(hi, rmax);
    out.steer_rate[w] = std::clamp(cmd.steer_rate[w], lo, hi);
  }
  return out;
}

int count_bound_violations(const ActuatorCommand& cmd, const VehicleState& state, const DegradationSet& deg,
                           double dt, const ActuatorLimits& limits) {
  int n = 0;
  for (std::size_t w = 0; w < kWheels; ++w) {
    const double t = cmd.torque[w], r = cmd.steer_rate[w];
    if (!std::isfinite(t) || std::abs(t) > deg.torque[w] * limits.torque) ++n;
    if (!std::isfinite(r) || std::abs(r) > deg.steer_rate[w] * limits.steer_rate) ++n;
    double lo, hi;
    steer_rate_window(state.steer[w], deg.steer_angle[w] * limits.steer_angle, dt, lo, hi);
    if (r < lo || r > hi) ++n;
  }
  return n;
}

double brush_lateral_force(double alpha, double c, double f_max) {
  if (f_max <= 0.0) return 0.0;
  const double z = std::tan(alpha);
  const double z_slide = 3.0 * f_max / c;
  if (std::abs(z) >= z_slide) return z > 0.0 ? f_max : -f_max;
  return c * z - c * c * std::abs(z) * z / (3.0 * f_max) + c * c * c * z * z * z / (27.0 * f_max * f_max);
}

std::array<TireForce, kWheels> tire_forces(const VehicleState& x, const ActuatorCommand& cmd, const PlantConfig& cfg) {
  std::array<TireForce, kWheels> out{};
  const double wheelbase = cfg.lf + cfg.lr;
  const double fz_front = cfg.mass * units::kGravity * cfg.lr / (2.0 * wheelbase);
  const double fz_rear = cfg.mass * units::kGravity * cfg.lf / (2.0 * wheelbase);
  for (std::size_t w = 0; w < kWheels; ++w) {
    const double xw = wheel_x(cfg, w), yw = wheel_y(cfg, w);
    const double vwx = x.vx - x.yaw_rate * yw;
    const double vwy = x.vy + x.yaw_rate * xw;
    const double c = std::cos(x.steer[w]), s = std::sin(x.steer[w]);
    const double v_long = vwx * c + vwy * s;
    const double v_lat = -vwx * s + vwy * c;
    const double alpha = std::atan2(-v_lat, std::max(std::abs(v_long), kSlipSpeedFloor));

    TireForce& f = out[w];
    f.fz = w < 2 ? fz_front : fz_rear;
    const double f_max = cfg.mu * f.fz;
    f.fx = std::clamp(cmd.torque[w] / cfg.wheel_radius, -f_max, f_max);
    const double lat_cap = std::sqrt(std::max(0.0, f_max * f_max - f.fx * f.fx));
    f.fy = std::clamp(brush_lateral_force(alpha, cfg.cornering_stiffness, f_max), -lat_cap, lat_cap);
  }
  return out;
}

VehicleState step(const VehicleState& state, const ActuatorCommand& cmd, const PlantConfig& cfg, double curvature) {
  return step(state, cmd, cfg, curvature, cfg.dt);
}

VehicleState step(const VehicleState& state, const ActuatorCommand& cmd, const PlantConfig& cfg, double curvature,
                  double h) {
  const Vec x0 = pack(state);
  const Vec k1 = derivative(x0, cmd, cfg, curvature);
  const Vec k2 = derivative(axpy(x0, 0.5 * h, k1), cmd, cfg, curvature);
  const Vec k3 = derivative(axpy(x0, 0.5 * h, k2), cmd, cfg, curvature);
  const Vec k4 = derivative(axpy(x0, h, k3), cmd, cfg, curvature);
  Vec x1;
  for (std::size_t i = 0; i < kDim; ++i) x1[i] = x0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  const double hard_stop = ActuatorLimits{}.steer_angle;
  for (std::size_t w = 0; w < kWheels; ++w) x1[6 + w] = std::clamp(x1[6 + w], -hard_stop, hard_stop);
  for (double v : x1)
    if (!std::isfinite(v)) throw SimulationDiverged("non-finite vehicle state");
  return unpack(x1);
}

}  // namespace selfrep
