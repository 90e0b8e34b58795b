#pragma once

// Terrain archetypes and the calibration helpers that pin a preset to a
// target statistic (median angular slip, median rho ratio).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drive/command_space.hpp"
#include "drive/slip_analysis.hpp"
#include "drive/stats.hpp"
#include "drive/terrain_sim.hpp"
#include "drive/unpredictability.hpp"

namespace drive {

inline constexpr double kDefaultNoise = 0.05;

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"perfect", "asphalt", "asphalt-weak-left",
                                              "grass",   "gravel",  "sand",
                                              "mud",     "ice"};
  return names;
}

/// Parameters of a named archetype, scaled to the robot's limits.
inline TerrainParams terrain_preset(std::string_view name, const RobotGeometry& geom) {
  TerrainParams p;
  p.name = std::string(name);
  const NoiseStd noisy{kDefaultNoise, kDefaultNoise, kDefaultNoise};
  const double vmax = geom.max_linear_speed;
  const double wmax = geom.max_angular_speed;

  auto hard_ground = [&](double angular, double longitudinal, double tau) {
    p.time_constant = tau;
    p.noise = noisy;
    p.longitudinal_slip = longitudinal;
    p.turn_longitudinal_slip = 0.2 / wmax;
    p.lateral_drift = 0.03 / wmax;
    p.angular_slip = angular;
  };

  if (name == "perfect") {
    p.time_constant = 0.02;
  } else if (name == "asphalt" || name == "asphalt-weak-left") {
    hard_ground(0.15, 0.03, 0.25);
    if (name == "asphalt-weak-left") p.wheel_limit_left = 0.85 * geom.max_wheel_speed;
  } else if (name == "grass") {
    hard_ground(0.17, 0.04, 0.3);
  } else if (name == "gravel") {
    hard_ground(0.16, 0.035, 0.3);
  } else if (name == "sand") {
    hard_ground(0.22, 0.08, 0.35);
    p.lateral_drift = 0.06 / wmax;
  } else if (name == "mud") {
    hard_ground(0.2, 0.06, 0.4);
    p.torque_slip = 0.3;
  } else if (name == "ice") {
    // Wheels spin freely; the body loses a large share of every command,
    // saturates towards the limits and drifts sideways.
    p.time_constant = 0.5;
    p.noise = noisy;
    p.longitudinal_slip = 0.2;
    p.angular_slip = 0.25;
    p.linear_cap = vmax;
    p.angular_cap = wmax;
    p.lateral_drift = 0.5 / wmax;
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown terrain preset '" + std::string(name) +
                                "' (known: " + known + ")");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Calibration on the noise-free ground truth over a dense uniform grid of the
// command polygon.

/// Grid nodes inside the polygon, used as a deterministic uniform sample.
inline std::vector<BodyVelocity> uniform_commands(const CommandPolygon& polygon,
                                                  std::size_t per_axis = 81) {
  const poly::Box box = poly::bounding_box(polygon.body);
  std::vector<BodyVelocity> out;
  for (std::size_t i = 0; i < per_axis; ++i) {
    const double vx = box.lo.x() + (box.hi.x() - box.lo.x()) * (i + 0.5) / per_axis;
    for (std::size_t j = 0; j < per_axis; ++j) {
      const double wz = box.lo.y() + (box.hi.y() - box.lo.y()) * (j + 0.5) / per_axis;
      if (poly::contains(polygon.body, {vx, wz})) out.push_back({vx, 0.0, wz});
    }
  }
  return out;
}

/// Median |g_wz| of the ground truth over the filtered command polygon.
inline double truth_angular_slip_median(const TerrainParams& p, const RobotGeometry& geom,
                                        const CommandFilter& filter = {}) {
  const TerrainModel t = make_terrain(p, geom);
  std::vector<double> g;
  for (const auto& u : uniform_commands(build_polygon(geom))) {
    if (!filter.accepts(u)) continue;
    const SteadyState ss = steady_state_velocity(geom, t, idd_inverse(geom, u));
    g.push_back(std::abs(u.wz - ss.body.wz));
  }
  return stats::median(g);
}

/// Median rho of the ground truth over the command polygon.
inline double truth_rho_median(const TerrainParams& p, const RobotGeometry& geom) {
  const TerrainModel t = make_terrain(p, geom);
  std::vector<double> rho;
  for (const auto& u : uniform_commands(build_polygon(geom))) {
    const SteadyState ss = steady_state_velocity(geom, t, idd_inverse(geom, u));
    rho.push_back(unpredictability(geom, {planar(u), planar(ss.body)}));
  }
  return stats::median(rho);
}

/// Ground-truth slip channel at every grid node inside the polygon. Support
/// is 1 at those nodes; nothing is flagged as low support.
inline SlipGrid truth_slip_grid(const RobotGeometry& geom, const TerrainModel& terrain,
                                const CommandPolygon& polygon, double resolution, Channel c) {
  SlipGrid g = make_grid(polygon, resolution);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.inside[k]) continue;
    const poly::Point n = g.node(k);
    const BodyVelocity u{n.x(), 0.0, n.y()};
    const WheelCommand w = idd_inverse(geom, u);
    const SteadyState ss = steady_state_velocity(geom, terrain, w);
    g.value[k] = channel_value(w - ss.wheels, u - ss.body, c);
    g.support[k] = 1.0;
  }
  return g;
}

namespace detail {
// Bisection for an increasing function f on [lo, hi].
template <class F>
double solve_increasing(F f, double target, double lo, double hi) {
  if (f(lo) > target || f(hi) < target) {
    throw std::invalid_argument("calibration target outside the reachable range");
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

/// Sets `angular_slip` so the median |g_wz| of the ground truth hits `target`.
inline TerrainParams tune_angular_slip_median(TerrainParams p, const RobotGeometry& geom,
                                              double target) {
  p.angular_slip = detail::solve_increasing(
      [&](double k) {
        TerrainParams q = p;
        q.angular_slip = k;
        return truth_angular_slip_median(q, geom);
      },
      target, 0.0, 1.0);
  return p;
}

/// Scales the ice saturation caps so that median rho on `ice` is `ratio`
/// times the median rho on `reference`.
inline TerrainParams tune_rho_ratio(TerrainParams ice, const TerrainParams& reference,
                                    const RobotGeometry& geom, double ratio) {
  const double base = truth_rho_median(reference, geom);
  const double linear = ice.linear_cap;
  const double angular = ice.angular_cap;
  if (!(linear > 0.0) || !(angular > 0.0)) {
    throw std::invalid_argument("tune_rho_ratio: terrain needs both saturation caps");
  }
  auto scaled = [&](double s) {
    TerrainParams q = ice;
    q.linear_cap = linear * s;
    q.angular_cap = angular * s;
    return q;
  };
  // rho falls as the caps grow; solve on the negated ratio.
  const double s = detail::solve_increasing(
      [&](double s) { return -truth_rho_median(scaled(s), geom) / base; }, -ratio, 0.05, 20.0);
  return scaled(s);
}

/// Backlash fraction that yields `rho` for a pure turn in place on otherwise
/// perfect ground: (1 - f)^-2 = tan(pi/4 (1 + rho)).
inline double backlash_for_rho_floor(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho floor must be in [0, 1)");
  return 1.0 - 1.0 / std::sqrt(std::tan(std::numbers::pi / 4.0 * (1.0 + rho)));
}

}  // namespace drive
