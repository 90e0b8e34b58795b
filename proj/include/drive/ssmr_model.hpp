#pragma once

// Skid-steer geometry and the ideal differential-drive (IDD) map between the
// wheel frame and the body frame.

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace drive {

/// Physical description and command limits of a skid-steer robot.
///
/// All quantities are SI: kg, m, rad/s, m/s, m/s^2.
struct RobotGeometry {
  double mass = 0.0;
  double base_width = 0.0;
  double wheel_radius = 0.0;
  double body_depth = 0.0;
  double body_height = 0.0;
  double max_wheel_speed = 0.0;    // rad/s, per side
  double max_linear_speed = 0.0;   // m/s, body frame
  double max_angular_speed = 0.0;  // rad/s, body frame
  double max_linear_accel = 0.0;   // m/s^2, body frame

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const {
    auto check = [](double v, const char* name) {
      if (!std::isfinite(v) || !(v > 0.0)) {
        throw std::invalid_argument(std::string("robot geometry: '") + name +
                                    "' must be finite and strictly positive");
      }
    };
    check(mass, "mass");
    check(base_width, "base_width");
    check(wheel_radius, "wheel_radius");
    check(body_depth, "body_depth");
    check(body_height, "body_height");
    check(max_wheel_speed, "max_wheel_speed");
    check(max_linear_speed, "max_linear_speed");
    check(max_angular_speed, "max_angular_speed");
    check(max_linear_accel, "max_linear_accel");
  }
};

/// Wheel-frame command or measurement, rad/s per side.
struct WheelCommand {
  double left = 0.0;
  double right = 0.0;

  friend bool operator==(const WheelCommand&, const WheelCommand&) = default;
};

/// Body-frame planar velocity. Commands always carry vy == 0.
struct BodyVelocity {
  double vx = 0.0;  // m/s
  double vy = 0.0;  // m/s
  double wz = 0.0;  // rad/s

  friend bool operator==(const BodyVelocity&, const BodyVelocity&) = default;
};

inline BodyVelocity operator-(const BodyVelocity& a, const BodyVelocity& b) {
  return {a.vx - b.vx, a.vy - b.vy, a.wz - b.wz};
}
inline BodyVelocity operator+(const BodyVelocity& a, const BodyVelocity& b) {
  return {a.vx + b.vx, a.vy + b.vy, a.wz + b.wz};
}
inline WheelCommand operator-(const WheelCommand& a, const WheelCommand& b) {
  return {a.left - b.left, a.right - b.right};
}

/// Wheel speeds to body velocity: vx = r(wl + wr)/2, wz = r(wr - wl)/b.
inline BodyVelocity idd_forward(const RobotGeometry& geom, WheelCommand cmd) {
  const double r = geom.wheel_radius;
  return {r * (cmd.left + cmd.right) / 2.0, 0.0, r * (cmd.right - cmd.left) / geom.base_width};
}

/// Inverse of idd_forward on the (vx, wz) sub-map. The lateral row of the
/// IDD matrix is identically zero, so a command with vy != 0 has no preimage;
/// passing a measured (slipping) velocity here is a caller bug.
inline WheelCommand idd_inverse(const RobotGeometry& geom, BodyVelocity vel) {
  if (vel.vy != 0.0) {
    throw std::invalid_argument(
        "idd_inverse: lateral velocity must be zero (measured velocities are not invertible)");
  }
  const double half_turn = vel.wz * geom.base_width / 2.0;
  return {(vel.vx - half_turn) / geom.wheel_radius, (vel.vx + half_turn) / geom.wheel_radius};
}

/// Inertia of a uniform rectangular box of width b, depth d and height c,
/// expressed in the body frame.
inline Eigen::Matrix3d inertia_matrix(const RobotGeometry& geom) {
  const double b2 = geom.base_width * geom.base_width;
  const double d2 = geom.body_depth * geom.body_depth;
  const double c2 = geom.body_height * geom.body_height;
  const double k = geom.mass / 12.0;
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
  inertia(0, 0) = k * (b2 + c2);
  inertia(1, 1) = k * (d2 + c2);
  inertia(2, 2) = k * (d2 + b2);
  return inertia;
}

// Approximate platform presets. Limits follow the manufacturer-level values
// used for field deployments (Warthog: 5 m/s, 4 rad/s, 4 m/s^2; Husky: 1 m/s,
// 2 rad/s); wheel limits are top speed over wheel radius.

inline RobotGeometry warthog_geometry() {
  RobotGeometry g;
  g.mass = 470.0;
  g.base_width = 1.08;
  g.wheel_radius = 0.3;
  g.body_depth = 1.52;
  g.body_height = 0.83;
  g.max_wheel_speed = 5.0 / 0.3;
  g.max_linear_speed = 5.0;
  g.max_angular_speed = 4.0;
  g.max_linear_accel = 4.0;
  return g;
}

inline RobotGeometry husky_geometry() {
  RobotGeometry g;
  g.mass = 75.0;
  g.base_width = 0.555;
  g.wheel_radius = 0.165;
  g.body_depth = 0.99;
  g.body_height = 0.39;
  g.max_wheel_speed = 1.0 / 0.165;
  g.max_linear_speed = 1.0;
  g.max_angular_speed = 2.0;
  g.max_linear_accel = 2.0;
  return g;
}

}  // namespace drive
