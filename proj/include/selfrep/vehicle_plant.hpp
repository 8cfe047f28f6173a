#pragma once

#include <array>
#include <cstddef>

#include "selfrep/units.hpp"

namespace selfrep {

enum Wheel : std::size_t { FL = 0, FR = 1, RL = 2, RR = 3 };
inline constexpr std::size_t kWheels = 4;

/// Plant state in the current lane's Frenet frame.
/// `d` is the left offset from the lane center and `psi` the heading relative to the
/// lane tangent; velocities are body-frame, steering angles per wheel.
struct VehicleState {
  double s = 0.0;
  double d = 0.0;
  double psi = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  std::array<double, kWheels> steer{};
};

struct ActuatorCommand {
  std::array<double, kWheels> torque{};      // [N m]
  std::array<double, kWheels> steer_rate{};  // [rad/s]
};

/// Normalized per-wheel degradation factors; 1 is nominal, 0 a failed channel.
struct DegradationSet {
  std::array<double, kWheels> steer_angle{1.0, 1.0, 1.0, 1.0};
  std::array<double, kWheels> steer_rate{1.0, 1.0, 1.0, 1.0};
  std::array<double, kWheels> torque{1.0, 1.0, 1.0, 1.0};

  static DegradationSet nominal() { return {}; }
  static DegradationSet uniform(double factor);
  bool valid() const;
  bool operator==(const DegradationSet&) const = default;
};

/// Nominal technical actuator limits (symmetric around zero).
struct ActuatorLimits {
  double steer_angle = units::deg_to_rad(30.0);
  double steer_rate = units::deg_to_rad(120.0);
  double torque = 2000.0;
};

struct PlantConfig {
  double mass = 1800.0;               // [kg]
  double yaw_inertia = 2500.0;        // [kg m^2]
  double lf = 1.5;                    // CoG to front axle [m]
  double lr = 1.5;                    // CoG to rear axle [m]
  double track = 1.6;                 // [m]
  double vehicle_width = 1.96;        // [m]
  double cornering_stiffness = 60e3;  // per tire [N/rad]
  double mu = 1.0;
  double wheel_radius = 0.31;         // [m]
  double dt = 0.01;                   // integration step [s]
  double rolling_resistance = 0.012;  // coefficient
  double drag_area = 0.7;             // c_d * A [m^2]
  double air_density = 1.2;           // [kg/m^3]

  void validate() const;
};

/// Steering-rate interval that keeps |steer + rate*dt| within `angle_limit`
/// (only inward motion is allowed once the limit is reached). Always contains 0.
void steer_rate_window(double steer, double angle_limit, double dt, double& lo, double& hi);

/// Clamps a command to the degraded actuator ranges. `dt` is the interval over which
/// the command is held, used for the steering-angle limit.
ActuatorCommand apply_degradation(const ActuatorCommand& cmd, const VehicleState& state,
                                  const DegradationSet& deg, double dt, const ActuatorLimits& limits = {});

/// Number of degraded bounds violated by a command (0 when admissible).
int count_bound_violations(const ActuatorCommand& cmd, const VehicleState& state, const DegradationSet& deg,
                           double dt, const ActuatorLimits& limits = {});

struct TireForce {
  double fx = 0.0;  // wheel frame, longitudinal [N]
  double fy = 0.0;  // wheel frame, lateral [N]
  double fz = 0.0;  // static load [N]
};

std::array<TireForce, kWheels> tire_forces(const VehicleState& state, const ActuatorCommand& cmd,
                                           const PlantConfig& cfg);

/// Brush-model lateral force for slip angle `alpha` saturating at `f_max`.
double brush_lateral_force(double alpha, double cornering_stiffness, double f_max);

/// Advances one integration step (RK4, cfg.dt). Throws SimulationDiverged on non-finite output.
VehicleState step(const VehicleState& state, const ActuatorCommand& cmd, const PlantConfig& cfg, double curvature);

/// Same as `step` with an explicit step size (used by the controller's prediction model).
VehicleState step(const VehicleState& state, const ActuatorCommand& cmd, const PlantConfig& cfg, double curvature,
                  double dt);

}  // namespace selfrep
