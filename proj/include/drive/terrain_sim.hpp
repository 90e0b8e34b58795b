#pragma once

// Deterministic planar robot-terrain simulator. A terrain is described by
// two steady-state slip surfaces (wheel frame and body frame) and one
// first-order powertrain lag; the simulator realises them at a fixed rate and
// adds Gaussian noise to the reported velocities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "drive/ssmr_model.hpp"

namespace drive {

inline constexpr double kSampleRate = 20.0;
inline constexpr double kSamplePeriod = 1.0 / kSampleRate;

/// Standard deviation of the additive measurement noise per channel.
struct NoiseStd {
  double wheel = 0.0;    // rad/s
  double linear = 0.0;   // m/s
  double angular = 0.0;  // rad/s
};

/// Parametric slip surfaces. Every term is off at its default value.
///
/// Wheel frame (per side, command w):
///   slip = w - clamp(w, +-wheel_limit)                     (saturating motor)
///        + torque_slip * |wr - wl| / (2 omega_max) * w       (torque starvation)
/// Body frame residual (command vx, wz), applied on top of the IDD image of
/// the realised wheel speeds:
///   g_vx = longitudinal_slip*vx + turn_longitudinal_slip*vx*|wz|
///        + (vx - linear_cap*tanh(vx/linear_cap))
///   g_vy = lateral_drift*vx*wz
///   g_wz = angular_slip*wz + (wz - angular_cap*tanh(wz/angular_cap))
///        + backlash*wz*exp(-(vx/backlash_speed)^2)
struct TerrainParams {
  std::string name = "perfect";
  double time_constant = 0.02;  // s
  NoiseStd noise;

  double wheel_limit_left = std::numeric_limits<double>::infinity();
  double wheel_limit_right = std::numeric_limits<double>::infinity();
  double torque_slip = 0.0;

  double longitudinal_slip = 0.0;
  double turn_longitudinal_slip = 0.0;
  double linear_cap = 0.0;  // m/s, 0 disables
  double lateral_drift = 0.0;
  double angular_slip = 0.0;
  double angular_cap = 0.0;  // rad/s, 0 disables
  double backlash = 0.0;
  double backlash_speed = 0.5;  // m/s

  void validate() const {
    if (!(time_constant > 0.0) || !std::isfinite(time_constant)) {
      throw std::invalid_argument("terrain '" + name + "': time_constant must be positive");
    }
    if (!(noise.wheel >= 0.0) || !(noise.linear >= 0.0) || !(noise.angular >= 0.0)) {
      throw std::invalid_argument("terrain '" + name + "': noise std must be non-negative");
    }
    if (!(wheel_limit_left > 0.0) || !(wheel_limit_right > 0.0)) {
      throw std::invalid_argument("terrain '" + name + "': wheel limits must be positive");
    }
    if (linear_cap < 0.0 || angular_cap < 0.0 || !(backlash_speed > 0.0)) {
      throw std::invalid_argument("terrain '" + name + "': caps must be non-negative");
    }
  }
};

/// Ground-truth terrain: steady-state slip functions plus lag and noise.
struct TerrainModel {
  std::string name;
  /// Wheel-frame steady-state slip for a wheel command.
  std::function<WheelCommand(const WheelCommand&)> wheel_slip_fn;
  /// Body-frame residual slip for a body command, on top of the wheel slip.
  std::function<BodyVelocity(const BodyVelocity&)> body_slip_fn;
  double time_constant = 0.02;
  NoiseStd noise;
};

namespace detail {
inline double saturation_excess(double x, double cap) {
  return cap > 0.0 ? x - cap * std::tanh(x / cap) : 0.0;
}
}  // namespace detail

inline TerrainModel make_terrain(const TerrainParams& p, const RobotGeometry& geom) {
  p.validate();
  TerrainModel t;
  t.name = p.name;
  t.time_constant = p.time_constant;
  t.noise = p.noise;
  const double omega_max = geom.max_wheel_speed;
  t.wheel_slip_fn = [p, omega_max](const WheelCommand& w) {
    const double torque = p.torque_slip * std::abs(w.right - w.left) / (2.0 * omega_max);
    auto side = [&](double cmd, double limit) {
      return cmd - std::clamp(cmd, -limit, limit) + torque * cmd;
    };
    return WheelCommand{side(w.left, p.wheel_limit_left), side(w.right, p.wheel_limit_right)};
  };
  t.body_slip_fn = [p](const BodyVelocity& u) {
    BodyVelocity g;
    g.vx = p.longitudinal_slip * u.vx + p.turn_longitudinal_slip * u.vx * std::abs(u.wz) +
           detail::saturation_excess(u.vx, p.linear_cap);
    g.vy = p.lateral_drift * u.vx * u.wz;
    const double rest = u.vx / p.backlash_speed;
    g.wz = p.angular_slip * u.wz + detail::saturation_excess(u.wz, p.angular_cap) +
           p.backlash * u.wz * std::exp(-rest * rest);
    return g;
  };
  return t;
}

/// Planar pose in the global frame G.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // wrapped to (-pi, pi]
};

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::remainder(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

/// True (noise-free) simulator state.
struct SimState {
  Pose2 pose;
  BodyVelocity body;
  WheelCommand wheels;
  BodyVelocity residual;  // body slip not explained by the wheels, lagged
  long long tick = 0;     // clock = tick * dt

  double clock(double dt = kSamplePeriod) const { return static_cast<double>(tick) * dt; }
};

/// What the robot's state estimator reports after a step.
struct Measurement {
  WheelCommand wheels;
  BodyVelocity body;
  Pose2 pose;
};

struct StepResult {
  SimState state;
  Measurement measurement;
};

/// Fixed point of the lag for a constant command: the ground truth.
struct SteadyState {
  WheelCommand wheels;
  BodyVelocity body;
};

inline SteadyState steady_state_velocity(const RobotGeometry& geom, const TerrainModel& terrain,
                                         const WheelCommand& cmd) {
  const WheelCommand wheels = cmd - terrain.wheel_slip_fn(cmd);
  const BodyVelocity residual = terrain.body_slip_fn(idd_forward(geom, cmd));
  return {wheels, idd_forward(geom, wheels) - residual};
}

/// Advances the simulator by one tick of length dt in (0, 0.1].
template <class Engine>
StepResult step(const SimState& state, const RobotGeometry& geom, const TerrainModel& terrain,
                const WheelCommand& cmd, double dt, Engine& rng) {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("step: dt must be in (0, 0.1]");

  const WheelCommand wheel_target = cmd - terrain.wheel_slip_fn(cmd);
  const BodyVelocity residual_target = terrain.body_slip_fn(idd_forward(geom, cmd));
  // Exact discretisation of the first-order lag; decay == 0 snaps to target.
  const double decay = std::exp(-dt / terrain.time_constant);
  // Fraction of the initial gap still contributing to the tick-average.
  const double carry = terrain.time_constant * (1.0 - decay) / dt;
  auto lag = [decay](double current, double goal) { return goal + (current - goal) * decay; };
  auto mean = [carry](double current, double goal) { return goal + (current - goal) * carry; };

  SimState next = state;
  next.wheels = {lag(state.wheels.left, wheel_target.left),
                 lag(state.wheels.right, wheel_target.right)};
  next.residual = {lag(state.residual.vx, residual_target.vx),
                   lag(state.residual.vy, residual_target.vy),
                   lag(state.residual.wz, residual_target.wz)};
  next.body = idd_forward(geom, next.wheels) - next.residual;

  // Pose: tick-averaged body velocity, heading at the tick midpoint.
  const BodyVelocity avg =
      idd_forward(geom, {mean(state.wheels.left, wheel_target.left),
                         mean(state.wheels.right, wheel_target.right)}) -
      BodyVelocity{mean(state.residual.vx, residual_target.vx),
                   mean(state.residual.vy, residual_target.vy),
                   mean(state.residual.wz, residual_target.wz)};
  const double vx = avg.vx;
  const double vy = avg.vy;
  const double wz = avg.wz;
  const double mid_yaw = state.pose.yaw + 0.5 * wz * dt;
  const double c = std::cos(mid_yaw);
  const double s = std::sin(mid_yaw);
  next.pose.x = state.pose.x + (c * vx - s * vy) * dt;
  next.pose.y = state.pose.y + (s * vx + c * vy) * dt;
  next.pose.yaw = wrap_angle(state.pose.yaw + wz * dt);
  next.tick = state.tick + 1;

  auto noisy = [&rng](double value, double sd) {
    if (sd <= 0.0) return value;
    return value + std::normal_distribution<double>(0.0, sd)(rng);
  };
  Measurement m;
  m.wheels = {noisy(next.wheels.left, terrain.noise.wheel),
              noisy(next.wheels.right, terrain.noise.wheel)};
  m.body = {noisy(next.body.vx, terrain.noise.linear), noisy(next.body.vy, terrain.noise.linear),
            noisy(next.body.wz, terrain.noise.angular)};
  m.pose = next.pose;
  return {next, m};
}

/// Rectangular safe perimeter centred on the origin of G.
struct SafeZone {
  double half_x = 0.0;
  double half_y = 0.0;

  static SafeZone from_size(double width, double height) {
    if (!(width > 0.0) || !(height > 0.0)) {
      throw std::invalid_argument("safe zone: both dimensions must be positive");
    }
    return {width / 2.0, height / 2.0};
  }

  bool inside(double x, double y) const { return std::abs(x) <= half_x && std::abs(y) <= half_y; }
};

enum class OperatorAction { proceed, interrupt };

/// Operator stand-in: interrupt when the straight-line extrapolation of the
/// current velocity over `horizon` seconds leaves the zone. A vehicle already
/// outside but heading back in is left alone.
inline OperatorAction operator_check(const SimState& state, const SafeZone& zone, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("operator_check: horizon must be positive");
  const double c = std::cos(state.pose.yaw);
  const double s = std::sin(state.pose.yaw);
  const double gx = c * state.body.vx - s * state.body.vy;
  const double gy = s * state.body.vx + c * state.body.vy;
  const double ex = state.pose.x + gx * horizon;
  const double ey = state.pose.y + gy * horizon;
  const bool exits_x = std::abs(ex) > zone.half_x && ex * gx > 0.0;
  const bool exits_y = std::abs(ey) > zone.half_y && ey * gy > 0.0;
  return exits_x || exits_y ? OperatorAction::interrupt : OperatorAction::proceed;
}

/// At least one zone dimension must cover 1.5x the distance driven at top
/// linear speed over one full command hold.
inline bool minimum_area_check(const RobotGeometry& geom, const SafeZone& zone,
                               double hold_seconds = 6.0) {
  const double longest = 2.0 * std::max(zone.half_x, zone.half_y);
  return longest >= 1.5 * geom.max_linear_speed * hold_seconds;
}

}  // namespace drive
