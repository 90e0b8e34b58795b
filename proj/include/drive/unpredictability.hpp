#pragma once

// Kinetic-energy based unpredictability metric rho in [0, 1] and the
// (rho, measured energy) risk coordinates built on top of it.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "drive/command_space.hpp"
#include "drive/slip_analysis.hpp"
#include "drive/ssmr_model.hpp"
#include "drive/stats.hpp"

namespace drive {

/// Rigid-body velocity split into translation (m/s) and rotation (rad/s).
struct MotionVector {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
};

/// Flat-ground embedding: translation (vx, vy, 0), rotation (0, 0, wz).
inline MotionVector planar(const BodyVelocity& v) {
  MotionVector m;
  m.translation = {v.vx, v.vy, 0.0};
  m.rotation = {0.0, 0.0, v.wz};
  return m;
}

struct VelocityPair {
  MotionVector commanded;
  MotionVector measured;
};

struct KineticEnergy {
  double translational = 0.0;  // J
  double rotational = 0.0;     // J

  double total() const { return translational + rotational; }
};

inline KineticEnergy kinetic_energies(const RobotGeometry& geom, const MotionVector& v) {
  const Eigen::Matrix3d inertia = inertia_matrix(geom);
  return {0.5 * geom.mass * v.translation.squaredNorm(),
          0.5 * v.rotation.dot(inertia * v.rotation)};
}

/// alpha, beta = (cos(angle between commanded and measured) + 1) / 2 for the
/// translation and rotation parts. A zero vector carries no direction, so
/// its penalty is 1.
struct Alignment {
  double alpha = 1.0;
  double beta = 1.0;
};

inline Alignment alignment_penalties(const MotionVector& u, const MotionVector& x) {
  auto penalty = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 1.0;
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return 0.5 * (c + 1.0);
  };
  return {penalty(u.translation, x.translation), penalty(u.rotation, x.rotation)};
}

/// How rho treats a hold where both energies are zero. `still_is_predictable`
/// gives 0; `literal` follows arctan2(0, 0) = 0 and gives 1.
enum class ZeroMotion { still_is_predictable, literal };

/// rho = (4/pi) |arctan2(Ku, Kx) - pi/4| for Ku, Kx >= 0.
///
/// Evaluated as (4/pi) arctan2(|Ku - Kx|, Ku + Kx), the same quantity by the
/// tangent subtraction identity, which is exactly symmetric in its arguments
/// and exactly 0 when Ku == Kx > 0.
inline double unpredictability_from_energies(double commanded, double measured,
                                             ZeroMotion zero = ZeroMotion::still_is_predictable) {
  if (!(commanded >= 0.0) || !(measured >= 0.0)) {
    throw std::invalid_argument("unpredictability: energies must be non-negative");
  }
  const double sum = commanded + measured;
  if (sum == 0.0) return zero == ZeroMotion::literal ? 1.0 : 0.0;
  const double rho = std::atan2(std::abs(commanded - measured), sum) / (std::numbers::pi / 4.0);
  return std::min(rho, 1.0);
}

/// Commanded and alignment-weighted measured energies for one pair.
struct EnergyBalance {
  double commanded = 0.0;
  double measured = 0.0;
};

inline EnergyBalance energy_balance(const RobotGeometry& geom, const VelocityPair& pair) {
  const KineticEnergy ku = kinetic_energies(geom, pair.commanded);
  const KineticEnergy kx = kinetic_energies(geom, pair.measured);
  const Alignment a = alignment_penalties(pair.commanded, pair.measured);
  return {ku.total(), a.alpha * kx.translational + a.beta * kx.rotational};
}

inline double unpredictability(const RobotGeometry& geom, const VelocityPair& pair,
                               ZeroMotion zero = ZeroMotion::still_is_predictable) {
  const EnergyBalance e = energy_balance(geom, pair);
  return unpredictability_from_energies(e.commanded, e.measured, zero);
}

inline double unpredictability(const RobotGeometry& geom, const SlipSample& s,
                               ZeroMotion zero = ZeroMotion::still_is_predictable) {
  return unpredictability(geom, {planar(s.command_body), planar(s.measured_body)}, zero);
}

inline SlipGrid metric_grid(const std::vector<SlipSample>& samples, const RobotGeometry& geom,
                            const CommandPolygon& polygon, double resolution,
                            const KernelCovariance& cov) {
  std::vector<ScatterPoint> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) {
    pts.push_back({{s.command_body.vx, s.command_body.wz}, unpredictability(geom, s)});
  }
  return smooth_grid(pts, polygon, resolution, cov);
}

// ---------------------------------------------------------------------------
// Risk coordinates

enum class MotionFilter { all, forward, turning };

inline MotionFilter parse_motion(std::string_view s) {
  if (s == "all") return MotionFilter::all;
  if (s == "forward") return MotionFilter::forward;
  if (s == "turning") return MotionFilter::turning;
  throw std::invalid_argument("unknown motion filter '" + std::string(s) + "'");
}

inline std::string_view motion_name(MotionFilter m) {
  switch (m) {
    case MotionFilter::all: return "all";
    case MotionFilter::forward: return "forward";
    case MotionFilter::turning: return "turning";
  }
  return "?";
}

/// forward: |vx| >= half the linear limit and |wz| <= a quarter of the
/// angular limit; turning: the converse.
inline bool motion_accepts(MotionFilter m, const RobotGeometry& geom, const BodyVelocity& u) {
  const double fv = std::abs(u.vx) / geom.max_linear_speed;
  const double fw = std::abs(u.wz) / geom.max_angular_speed;
  switch (m) {
    case MotionFilter::all: return true;
    case MotionFilter::forward: return fv >= 0.5 && fw <= 0.25;
    case MotionFilter::turning: return fw >= 0.5 && fv <= 0.25;
  }
  return false;
}

struct RiskPoint {
  double rho = 0.0;
  double kinetic_energy = 0.0;  // measured, J
  std::string terrain;
  MotionFilter motion = MotionFilter::all;
};

/// Covariance ellipse holding 95 % of a bivariate normal fit.
struct RiskEllipse {
  double center_rho = 0.0;
  double center_energy = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // rad, major axis from the rho axis
};

struct RiskSummary {
  std::string label;
  std::string terrain;
  MotionFilter motion = MotionFilter::all;
  std::size_t count = 0;
  double median_rho = 0.0;
  double median_energy = 0.0;
  RiskEllipse ellipse;
  /// Largest commanded kinetic energy over the command polygon.
  double max_kinetic_energy = 0.0;
};

struct RiskScenario {
  std::string label;
  std::string terrain;
  RobotGeometry geometry;
  std::vector<SlipSample> samples;
  MotionFilter motion = MotionFilter::all;
};

/// Kinetic energy is convex in the command, so its maximum over the polygon
/// sits on a vertex.
inline double max_kinetic_energy(const RobotGeometry& geom, const CommandPolygon& polygon) {
  double best = 0.0;
  for (const auto& p : polygon.body) {
    best = std::max(best, kinetic_energies(geom, planar({p.x(), 0.0, p.y()})).total());
  }
  return best;
}

inline RiskEllipse covariance_ellipse(const std::vector<RiskPoint>& pts) {
  constexpr double kChi2Two95 = 5.991464547107979;  // -2 ln 0.05
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += Eigen::Vector2d(p.rho, p.kinetic_energy);
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector2d d = Eigen::Vector2d(p.rho, p.kinetic_energy) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d lambda = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const Eigen::Vector2d major = eig.eigenvectors().col(1);
  RiskEllipse e;
  e.center_rho = mean.x();
  e.center_energy = mean.y();
  e.semi_major = std::sqrt(kChi2Two95 * lambda(1));
  e.semi_minor = std::sqrt(kChi2Two95 * lambda(0));
  e.angle = std::atan2(major.y(), major.x());
  if (e.angle > std::numbers::pi / 2.0) e.angle -= std::numbers::pi;
  if (e.angle <= -std::numbers::pi / 2.0) e.angle += std::numbers::pi;
  return e;
}

struct RiskMap {
  std::vector<RiskPoint> points;
  std::vector<RiskSummary> summaries;
};

inline RiskMap risk_points(const std::vector<RiskScenario>& scenarios) {
  RiskMap map;
  for (const auto& sc : scenarios) {
    std::vector<RiskPoint> pts;
    for (const auto& s : sc.samples) {
      if (!motion_accepts(sc.motion, sc.geometry, s.command_body)) continue;
      const double energy = kinetic_energies(sc.geometry, planar(s.measured_body)).total();
      pts.push_back({unpredictability(sc.geometry, s), energy, sc.terrain, sc.motion});
    }
    if (pts.size() < 5) {
      throw std::invalid_argument("risk map: scenario '" + sc.label + "' has " +
                                  std::to_string(pts.size()) + " samples, need at least 5");
    }
    RiskSummary sum;
    sum.label = sc.label;
    sum.terrain = sc.terrain;
    sum.motion = sc.motion;
    sum.count = pts.size();
    std::vector<double> rho;
    std::vector<double> energy;
    for (const auto& p : pts) {
      rho.push_back(p.rho);
      energy.push_back(p.kinetic_energy);
    }
    sum.median_rho = stats::median(rho);
    sum.median_energy = stats::median(energy);
    sum.ellipse = covariance_ellipse(pts);
    sum.max_kinetic_energy = max_kinetic_energy(sc.geometry, build_polygon(sc.geometry));
    map.summaries.push_back(sum);
    map.points.insert(map.points.end(), pts.begin(), pts.end());
  }
  return map;
}

}  // namespace drive
