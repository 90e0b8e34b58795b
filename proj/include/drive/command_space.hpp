#pragma once

// Admissible command space of a skid-steer robot: the body-frame speed box
// intersected with the image of the wheel-speed square, plus a seeded uniform
// sampler over it and the linear-acceleration ramp between commands.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "drive/polygon.hpp"
#include "drive/ssmr_model.hpp"

namespace drive {

/// Convex command polygon. `body` holds (vx, wz) vertices, `wheel` the same
/// vertices mapped to (wl, wr); both counter-clockwise.
struct CommandPolygon {
  poly::Vertices body;
  poly::Vertices wheel;

  double area_body() const { return poly::signed_area(body); }
  double area_wheel() const { return poly::signed_area(wheel); }

  bool contains_body(const BodyVelocity& v, double tol = 0.0) const {
    return poly::contains(body, {v.vx, v.wz}, tol);
  }
  bool contains_wheel(const WheelCommand& w, double tol = 0.0) const {
    return poly::contains(wheel, {w.left, w.right}, tol);
  }
};

/// Builds the command polygon for `geom`.
///
/// Starts from the body rectangle |vx| <= vmax, |wz| <= wmax and clips it by
/// the four wheel constraints |wl|, |wr| <= omega_max, each of which is a
/// half-plane in (vx, wz) through the IDD map. The result has 4 to 8 vertices.
inline CommandPolygon build_polygon(const RobotGeometry& geom) {
  geom.validate();
  const double vmax = geom.max_linear_speed;
  const double wmax = geom.max_angular_speed;
  const double reach = geom.max_wheel_speed * geom.wheel_radius;
  const double half_b = geom.base_width / 2.0;

  poly::Vertices body{{-vmax, -wmax}, {vmax, -wmax}, {vmax, wmax}, {-vmax, wmax}};
  // r*wl = vx - wz*b/2, r*wr = vx + wz*b/2
  const poly::HalfPlane wheel_limits[] = {
      {{1.0, -half_b}, reach},
      {{-1.0, half_b}, reach},
      {{1.0, half_b}, reach},
      {{-1.0, -half_b}, reach},
  };
  for (const auto& h : wheel_limits) body = poly::clip(body, h);
  body = poly::simplify(body);
  assert(body.size() >= 3 && poly::signed_area(body) > 0.0);

  CommandPolygon out;
  out.body = body;
  out.wheel.reserve(body.size());
  for (const auto& p : body) {
    const WheelCommand w = idd_inverse(geom, {p.x(), 0.0, p.y()});
    out.wheel.emplace_back(w.left, w.right);
  }
  return out;
}

/// Sampled command set; `commands` are wheel-frame and `body` their IDD images.
struct SampleSet {
  std::vector<WheelCommand> commands;
  std::vector<BodyVelocity> body;
  std::uint64_t seed = 0;
};

/// Uniform sampler over the wheel-frame polygon by rejection from its
/// bounding box. Single owner: the engine state is not shared.
class CommandSampler {
 public:
  CommandSampler(CommandPolygon polygon, std::uint64_t seed)
      : polygon_(std::move(polygon)), engine_(seed) {
    const poly::Box box = poly::bounding_box(polygon_.wheel);
    left_ = std::uniform_real_distribution<double>(box.lo.x(), box.hi.x());
    right_ = std::uniform_real_distribution<double>(box.lo.y(), box.hi.y());
  }

  WheelCommand next() {
    for (;;) {
      const WheelCommand w{left_(engine_), right_(engine_)};
      if (polygon_.contains_wheel(w)) return w;
    }
  }

  const CommandPolygon& polygon() const { return polygon_; }

 private:
  CommandPolygon polygon_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> left_;
  std::uniform_real_distribution<double> right_;
};

inline SampleSet sample_uniform(const RobotGeometry& geom, const CommandPolygon& polygon,
                                std::size_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_uniform: count must be at least 1");
  CommandSampler sampler(polygon, seed);
  SampleSet out;
  out.seed = seed;
  out.commands.reserve(count);
  out.body.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.commands.push_back(sampler.next());
    out.body.push_back(idd_forward(geom, out.commands.back()));
  }
  return out;
}

/// One control tick of the linear-acceleration ramp from `prev` towards
/// `next`. The command moves along the straight segment prev -> next so it
/// stays inside the (convex) command polygon; only |d vx / dt| is bounded.
inline BodyVelocity clamp_transition(const RobotGeometry& geom, const BodyVelocity& prev,
                                     const BodyVelocity& next, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("clamp_transition: dt must be positive");
  const double dvx = next.vx - prev.vx;
  const double max_step = geom.max_linear_accel * dt;
  // Relative slack absorbs round-off from repeated increments.
  if (std::abs(dvx) <= max_step * (1.0 + 1e-9)) return next;
  const double frac = max_step / std::abs(dvx);
  return {prev.vx + frac * dvx, prev.vy + frac * (next.vy - prev.vy),
          prev.wz + frac * (next.wz - prev.wz)};
}

}  // namespace drive
