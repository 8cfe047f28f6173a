#include "selfrep/tracking_controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "selfrep/errors.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep {
namespace {

constexpr int kNx = 6 + static_cast<int>(kWheels);
constexpr int kNu = 2 * static_cast<int>(kWheels);
using StateVec = Eigen::Matrix<double, kNx, 1>;
using InputVec = Eigen::Matrix<double, kNu, 1>;

// Rows of the state that enter the tracking cost: s, d, psi, vx and the four steering angles.
constexpr std::array<int, 8> kTracked{0, 1, 2, 3, 6, 7, 8, 9};

StateVec to_vec(const VehicleState& x) {
  StateVec v;
  v << x.s, x.d, x.psi, x.vx, x.vy, x.yaw_rate, x.steer[0], x.steer[1], x.steer[2], x.steer[3];
  return v;
}

VehicleState from_vec(const StateVec& v) {
  VehicleState x;
  x.s = v[0];
  x.d = v[1];
  x.psi = v[2];
  x.vx = v[3];
  x.vy = v[4];
  x.yaw_rate = v[5];
  for (std::size_t w = 0; w < kWheels; ++w) x.steer[w] = v[6 + static_cast<int>(w)];
  return x;
}

// Inputs are normalized by the nominal limits so every box is within [-1, 1].
ActuatorCommand to_command(const InputVec& u, const ActuatorLimits& lim) {
  ActuatorCommand c;
  for (std::size_t w = 0; w < kWheels; ++w) {
    c.torque[w] = u[static_cast<int>(w)] * lim.torque;
    c.steer_rate[w] = u[4 + static_cast<int>(w)] * lim.steer_rate;
  }
  return c;
}

InputVec to_normalized(const ActuatorCommand& c, const ActuatorLimits& lim) {
  InputVec u;
  for (std::size_t w = 0; w < kWheels; ++w) {
    u[static_cast<int>(w)] = c.torque[w] / lim.torque;
    u[4 + static_cast<int>(w)] = c.steer_rate[w] / lim.steer_rate;
  }
  return u;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

}  // namespace

void ControllerConfig::validate() const {
  if (horizon < 5) throw ValidationError("controller horizon must be >= 5");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("controller dt must be positive");
  for (double w : {w_s, w_d, w_psi, w_effort, w_speed, w_steer_angle})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("controller weights must be >= 0");
  if (!(w_d > 0.0)) throw ValidationError("lateral weight must be > 0");
  if (max_iterations < 1) throw ValidationError("iteration budget must be >= 1");
  if (!(settle_time >= 0.0)) throw ValidationError("settle time must be >= 0");
}

std::vector<int> move_blocks(int horizon) {
  static constexpr int kPattern[] = {1, 1, 2, 4, 4};
  std::vector<int> blocks;
  int used = 0;
  for (std::size_t i = 0; used < horizon; ++i) {
    int len = i < std::size(kPattern) ? kPattern[i] : 8;
    len = std::min(len, horizon - used);
    blocks.push_back(len);
    used += len;
  }
  return blocks;
}

ReferenceWindow make_window(const ReferenceTrajectory& ref, double t, double s_now, const ControllerConfig& cfg) {
  ReferenceWindow win;
  win.target.reserve(static_cast<std::size_t>(cfg.horizon));
  win.curvature.reserve(static_cast<std::size_t>(cfg.horizon));
  win.curvature.push_back(ref.lane().curvature(s_now));
  for (int k = 1; k <= cfg.horizon; ++k) {
    win.target.push_back(ref.at(t + k * cfg.dt));
    if (k < cfg.horizon) win.curvature.push_back(ref.lane().curvature(win.target.back().s));
  }
  return win;
}

TrackingController::TrackingController(PlantConfig plant, ControllerConfig cfg, ActuatorLimits limits)
    : plant_(plant), cfg_(cfg), limits_(limits), blocks_(move_blocks(cfg.horizon)) {
  plant_.validate();
  cfg_.validate();
  for (int b = 0; b < static_cast<int>(blocks_.size()); ++b)
    for (int i = 0; i < blocks_[static_cast<std::size_t>(b)]; ++i) block_of_step_.push_back(b);
}

void TrackingController::reset() {
  has_warm_ = false;
  last_ = {};
}

ActuatorCommand TrackingController::solve_step(const VehicleState& state, const ReferenceWindow& window,
                                               const DegradationSet& deg) {
  const int H = cfg_.horizon;
  if (static_cast<int>(window.target.size()) < H || static_cast<int>(window.curvature.size()) < H)
    throw ValidationError("reference window shorter than the horizon");
  const int nb = static_cast<int>(blocks_.size());
  const int nz = nb * kNu;
  const double h = cfg_.dt;

  // Box on the normalized inputs; the first block also carries the steering-angle window.
  Eigen::VectorXd lo(nz), hi(nz);
  for (int b = 0; b < nb; ++b) {
    for (std::size_t w = 0; w < kWheels; ++w) {
      const int it = b * kNu + static_cast<int>(w), ir = it + 4;
      lo[it] = -deg.torque[w];
      hi[it] = deg.torque[w];
      lo[ir] = -deg.steer_rate[w];
      hi[ir] = deg.steer_rate[w];
      if (b == 0) {
        double wl, wh;
        steer_rate_window(state.steer[w], deg.steer_angle[w] * limits_.steer_angle, h, wl, wh);
        lo[ir] = std::max(lo[ir], wl / limits_.steer_rate);
        hi[ir] = std::min(hi[ir], wh / limits_.steer_rate);
        if (lo[ir] > hi[ir]) lo[ir] = hi[ir] = 0.0;
      }
    }
  }

  // Linearize one control period around (x0, u0).
  const StateVec x0 = to_vec(state);
  const InputVec u0 = to_normalized(last_, limits_);
  auto propagate = [&](const StateVec& x, const InputVec& u, double kappa) {
    return to_vec(step(from_vec(x), to_command(u, limits_), plant_, kappa, h));
  };
  const double kappa0 = window.curvature[0];
  Eigen::Matrix<double, kNx, kNx> A;
  Eigen::Matrix<double, kNx, kNu> B;
  for (int i = 0; i < kNx; ++i) {
    const double eps = 1e-6 * std::max(1.0, std::abs(x0[i]));
    StateVec xp = x0, xm = x0;
    xp[i] += eps;
    xm[i] -= eps;
    A.col(i) = (propagate(xp, u0, kappa0) - propagate(xm, u0, kappa0)) / (2.0 * eps);
  }
  for (int j = 0; j < kNu; ++j) {
    const double eps = 1e-6;
    InputVec up = u0, um = u0;
    up[j] += eps;
    um[j] -= eps;
    B.col(j) = (propagate(x0, up, kappa0) - propagate(x0, um, kappa0)) / (2.0 * eps);
  }
  const StateVec Bu0 = B * u0;

  // Condense: e_k = x_k - x0 = S_k z + c_k.
  Eigen::Matrix<double, kNx, Eigen::Dynamic> S = Eigen::Matrix<double, kNx, Eigen::Dynamic>::Zero(kNx, nz);
  StateVec c = StateVec::Zero();
  Eigen::MatrixXd Hm = Eigen::MatrixXd::Zero(nz, nz);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nz);
  Eigen::Matrix<double, 8, Eigen::Dynamic> M(8, nz);
  Eigen::Matrix<double, 8, 1> wdiag;
  wdiag << cfg_.w_s, cfg_.w_d, cfg_.w_psi, cfg_.w_speed, 0, 0, 0, 0;
  for (std::size_t w = 0; w < kWheels; ++w) {
    const double lim = std::max(deg.steer_angle[w] * limits_.steer_angle, units::deg_to_rad(1.0));
    wdiag[4 + static_cast<int>(w)] = cfg_.w_steer_angle / (lim * lim);
  }
  for (int k = 0; k < H; ++k) {
    const StateVec drift = propagate(x0, u0, window.curvature[static_cast<std::size_t>(k)]) - x0;
    S = A * S;
    S.middleCols(block_of_step_[static_cast<std::size_t>(k)] * kNu, kNu) += B;
    c = A * c - Bu0 + drift;

    const auto& r = window.target[static_cast<std::size_t>(k)];
    Eigen::Matrix<double, 8, 1> resid;
    for (int i = 0; i < 8; ++i) {
      M.row(i) = S.row(kTracked[static_cast<std::size_t>(i)]);
      resid[i] = x0[kTracked[static_cast<std::size_t>(i)]] + c[kTracked[static_cast<std::size_t>(i)]];
    }
    resid[0] -= r.s;
    resid[1] -= r.d;
    resid[2] -= r.psi_rel;
    resid[3] -= r.v;
    Hm.noalias() += M.transpose() * wdiag.asDiagonal() * M;
    g.noalias() += M.transpose() * (wdiag.asDiagonal() * resid);
  }
  for (int b = 0; b < nb; ++b)
    for (int j = 0; j < kNu; ++j) Hm(b * kNu + j, b * kNu + j) += cfg_.w_effort * blocks_[static_cast<std::size_t>(b)];

  // Jacobi scaling keeps the box a box: y = D^{1/2} z.
  Eigen::VectorXd dsq(nz);
  for (int i = 0; i < nz; ++i) dsq[i] = std::sqrt(std::max(Hm(i, i), 1e-12));
  const Eigen::MatrixXd P = dsq.cwiseInverse().asDiagonal() * Hm * dsq.cwiseInverse().asDiagonal();
  const Eigen::VectorXd q = g.cwiseQuotient(dsq);
  const Eigen::VectorXd ylo = lo.cwiseProduct(dsq), yhi = hi.cwiseProduct(dsq);

  Eigen::VectorXd v = Eigen::VectorXd::Ones(nz);
  double L = 1.0;
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd pv = P * v;
    const double n = pv.norm();
    if (n == 0.0) break;
    L = n / v.norm();
    v = pv / n;
  }
  L *= 1.05;

  Eigen::VectorXd z0(nz);
  if (has_warm_) {
    // Shift the previous plan by one control period.
    int start = 0;
    for (int b = 0; b < nb; ++b) {
      const int src = block_of_step_[static_cast<std::size_t>(std::min(start + 1, H - 1))];
      z0.segment(b * kNu, kNu) = warm_.segment(src * kNu, kNu);
      start += blocks_[static_cast<std::size_t>(b)];
    }
  } else {
    for (int b = 0; b < nb; ++b) z0.segment(b * kNu, kNu) = u0;
  }

  auto project = [&](Eigen::VectorXd& y) { y = y.cwiseMax(ylo).cwiseMin(yhi); };
  auto objective = [&](const Eigen::VectorXd& y) { return y.dot(P * y) + 2.0 * q.dot(y); };

  Eigen::VectorXd y = z0.cwiseProduct(dsq);
  project(y);
  Eigen::VectorXd best = y, mom = y, prev = y;
  double best_f = objective(y), prev_f = best_f;
  double tk = 1.0;
  for (int it = 0; it < cfg_.max_iterations; ++it) {
    Eigen::VectorXd next = mom - (P * mom + q) / L;
    project(next);
    const double f = objective(next);
    if (f < best_f) {
      best_f = f;
      best = next;
    }
    if (f > prev_f) {
      // Function-value restart of the momentum.
      tk = 1.0;
      mom = next;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      mom = next + ((tk - 1.0) / tn) * (next - prev);
      tk = tn;
    }
    prev = next;
    prev_f = f;
  }

  warm_ = best.cwiseQuotient(dsq);
  has_warm_ = true;
  const InputVec u_first = warm_.head(kNu);
  const ActuatorCommand cmd = apply_degradation(to_command(u_first, limits_), state, deg, h, limits_);
  last_ = cmd;
  return cmd;
}

VehicleState initial_state(const ReferenceTrajectory& ref) {
  VehicleState x;
  if (ref.empty()) return x;
  const auto& r0 = ref.states.front();
  x.s = r0.s;
  x.d = r0.d;
  x.psi = r0.psi_rel;
  x.vx = r0.v;
  x.yaw_rate = ref.lane().curvature(r0.s) * r0.v;
  return x;
}

void deviations(const ReferenceTrajectory& ref, double t, const VehicleState& x, double& eps_long, double& eps_lat,
                double& eps_yaw) {
  const ReferenceSample r = ref.at(t);
  eps_long = std::abs(x.s - r.s);
  // Lateral deviation is measured normal to the planned path at the vehicle's arc length.
  double d_ref, slope;
  ref.lateral_at_arclength(x.s, d_ref, slope);
  eps_lat = std::abs(x.d - d_ref) / std::sqrt(1.0 + slope * slope);
  eps_yaw = std::abs(wrap_angle(ref.lane().heading(x.s) + x.psi - r.psi));
}

SimulationTrace track_trajectory(const ReferenceTrajectory& ref, const DegradationSet& deg, const PlantConfig& plant,
                                 const ControllerConfig& cfg) {
  SimulationTrace trace;
  if (ref.empty() || !(ref.duration > 0.0)) return trace;
  if (!deg.valid()) throw ValidationError("degradation factors must lie in [0, 1]");
  plant.validate();
  cfg.validate();
  const int sub = static_cast<int>(std::lround(cfg.dt / plant.dt));
  if (sub < 1 || std::abs(sub * plant.dt - cfg.dt) > 1e-9 * cfg.dt)
    throw ValidationError("controller dt must be an integer multiple of the plant dt");

  const int n_ctrl = static_cast<int>(std::ceil((ref.duration + cfg.settle_time) / cfg.dt - 1e-9));
  const std::size_t n = static_cast<std::size_t>(n_ctrl) * static_cast<std::size_t>(sub) + 1;
  trace.t.reserve(n);
  trace.reference.reserve(n);
  trace.states.reserve(n);
  trace.commands.reserve(n);
  trace.eps_long.reserve(n);
  trace.eps_lat.reserve(n);
  trace.eps_yaw.reserve(n);

  TrackingController ctrl(plant, cfg);
  const ActuatorLimits limits;
  VehicleState x = initial_state(ref);
  auto record = [&](double t, const ActuatorCommand& cmd) {
    double el, ela, ey;
    deviations(ref, t, x, el, ela, ey);
    trace.t.push_back(t);
    trace.reference.push_back(ref.at(t));
    trace.states.push_back(x);
    trace.commands.push_back(cmd);
    trace.eps_long.push_back(el);
    trace.eps_lat.push_back(ela);
    trace.eps_yaw.push_back(ey);
  };

  ActuatorCommand cmd{};
  for (int k = 0; k < n_ctrl; ++k) {
    const double t = k * cfg.dt;
    cmd = ctrl.solve_step(x, make_window(ref, t, x.s, cfg), deg);
    trace.bound_violations += count_bound_violations(cmd, x, deg, cfg.dt, limits);
    for (int j = 0; j < sub; ++j) {
      const double tj = (static_cast<double>(k) * sub + j) * plant.dt;
      record(tj, cmd);
      x = step(x, cmd, plant, ref.lane().curvature(x.s));
    }
  }
  record(static_cast<double>(n_ctrl) * sub * plant.dt, cmd);
  return trace;
}

DeviationMax max_deviation(const SimulationTrace& trace) {
  if (trace.empty()) throw ValidationError("max_deviation of an empty trace");
  DeviationMax m;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    m.eps_long = std::max(m.eps_long, trace.eps_long[i]);
    m.eps_lat = std::max(m.eps_lat, trace.eps_lat[i]);
    m.eps_yaw = std::max(m.eps_yaw, trace.eps_yaw[i]);
  }
  return m;
}

void SimulationTrace::write_csv(const std::filesystem::path& path) const {
  std::string out =
      "t_s,s_ref,s_act,d_act,psi_ref,psi_act,eps_long,eps_lat,eps_yaw,"
      "tau_fl,tau_fr,tau_rl,tau_rr,steer_rate_fl,steer_rate_fr,steer_rate_rl,steer_rate_rr\n";
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& x = states[i];
    const auto& r = reference[i];
    std::vector<double> row{t[i], r.s, x.s, x.d, r.psi_rel, x.psi, eps_long[i], eps_lat[i], eps_yaw[i]};
    for (double v : commands[i].torque) row.push_back(v);
    for (double v : commands[i].steer_rate) row.push_back(v);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += io::format_double(row[j]);
    }
    out += '\n';
  }
  io::write_file(path, out);
}

}  // namespace selfrep
