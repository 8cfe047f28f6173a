#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "selfrep/maneuver.hpp"
#include "selfrep/vehicle_plant.hpp"

namespace selfrep {

struct ControllerConfig {
  int horizon = 20;           // prediction steps
  double dt = 0.05;           // control period [s]
  double w_s = 1.0;
  double w_d = 10.0;
  double w_psi = 5.0;
  double w_effort = 0.1;      // on inputs normalized by the nominal limits, per held step
  double w_speed = 1.0;
  double w_steer_angle = 0.05;  // on steering angle relative to its degraded limit
  int max_iterations = 50;
  double settle_time = 1.0;   // closed-loop tail after the maneuver [s]

  void validate() const;
};

/// Piecewise-constant input blocks over the horizon: 1,1,2,4,4,8,8,... with the last
/// block shortened to fit.
std::vector<int> move_blocks(int horizon);

/// Targets for the prediction horizon starting at time t: `target[k]` is the reference at
/// t + (k+1)·dt, `curvature[k]` the lane curvature used for the k-th predicted step.
struct ReferenceWindow {
  std::vector<ReferenceSample> target;
  std::vector<double> curvature;
};

ReferenceWindow make_window(const ReferenceTrajectory& ref, double t, double s_now, const ControllerConfig& cfg);

/// Receding-horizon tracking controller. Each call linearizes one control-period step of
/// the plant around the current state, condenses the box-constrained QP over move-blocked
/// inputs and runs a budgeted projected-gradient solve warm-started from the previous
/// solution. The controller is given the true degradation set.
class TrackingController {
 public:
  TrackingController(PlantConfig plant, ControllerConfig cfg, ActuatorLimits limits = {});

  ActuatorCommand solve_step(const VehicleState& state, const ReferenceWindow& window, const DegradationSet& deg);

  void reset();

  const ControllerConfig& config() const { return cfg_; }

 private:
  PlantConfig plant_;
  ControllerConfig cfg_;
  ActuatorLimits limits_;
  std::vector<int> blocks_;
  std::vector<int> block_of_step_;
  Eigen::VectorXd warm_;
  ActuatorCommand last_{};
  bool has_warm_ = false;
};

struct SimulationTrace {
  std::vector<double> t;
  std::vector<ReferenceSample> reference;
  std::vector<VehicleState> states;
  std::vector<ActuatorCommand> commands;
  std::vector<double> eps_long, eps_lat, eps_yaw;
  int bound_violations = 0;

  bool empty() const { return t.empty(); }
  std::size_t size() const { return t.size(); }
  void write_csv(const std::filesystem::path& path) const;
};

struct DeviationMax {
  double eps_long = 0.0;
  double eps_lat = 0.0;
  double eps_yaw = 0.0;
};

/// Componentwise maxima of the deviation series; throws ValidationError on an empty trace.
DeviationMax max_deviation(const SimulationTrace& trace);

/// Start pose on the reference: on the lane center, aligned with it, at v_init.
VehicleState initial_state(const ReferenceTrajectory& ref);

/// Deviations of a plant state from the reference at time t.
void deviations(const ReferenceTrajectory& ref, double t, const VehicleState& x, double& eps_long, double& eps_lat,
                double& eps_yaw);

/// Closed-loop rollout over the maneuver plus the settling tail, sampled at the plant step.
/// Throws SimulationDiverged when the plant blows up.
SimulationTrace track_trajectory(const ReferenceTrajectory& ref, const DegradationSet& deg, const PlantConfig& plant,
                                 const ControllerConfig& cfg);

}  // namespace selfrep
