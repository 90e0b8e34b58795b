#pragma once

// The identification protocol: draw commands uniformly from the command
// polygon, hold each one for a fixed calibration duration, restart a hold from
// scratch whenever the safety operator interrupts it, and split every finished
// hold into one transient window followed by two steady-state windows.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <utility>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "drive/command_space.hpp"
#include "drive/ssmr_model.hpp"
#include "drive/terrain_sim.hpp"

namespace drive {

struct ProtocolConfig {
  std::size_t steps = 150;
  double hold_seconds = 6.0;
  double window_seconds = 2.0;
  double dt = kSamplePeriod;
  std::uint64_t seed = 0;
  double operator_horizon = 1.0;  // s of straight-line look-ahead
  int max_interrupts_per_command = 50;

  std::size_t samples_per_window() const {
    return static_cast<std::size_t>(std::llround(window_seconds / dt));
  }
  std::size_t samples_per_episode() const { return 3 * samples_per_window(); }

  void validate() const {
    if (steps < 1) throw std::invalid_argument("protocol: at least one command is required");
    if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("protocol: dt must be in (0, 0.1]");
    if (!(window_seconds > 0.0) || std::abs(hold_seconds - 3.0 * window_seconds) > 1e-9) {
      throw std::invalid_argument("protocol: hold duration must equal three windows");
    }
    const double per_window = window_seconds / dt;
    if (std::abs(per_window - std::round(per_window)) > 1e-9) {
      throw std::invalid_argument("protocol: window duration must be a multiple of dt");
    }
    if (!(operator_horizon > 0.0)) throw std::invalid_argument("protocol: horizon must be positive");
  }
};

/// One recorded tick. `command` is the sampled (target) wheel command; the
/// motors receive its acceleration-limited ramp.
struct EpisodeSample {
  double t = 0.0;
  WheelCommand command;
  BodyVelocity command_body;
  Measurement measured;
};

struct Episode {
  std::size_t id = 0;
  WheelCommand command;
  BodyVelocity command_body;
  std::vector<EpisodeSample> samples;
  int interrupted_count = 0;
};

/// Everything one protocol run produces; also the in-memory form of a log.
struct DriveRun {
  RobotGeometry geometry;
  std::string terrain;
  ProtocolConfig config;
  SafeZone zone;
  SampleSet commands;
  std::vector<Episode> episodes;
  double idle_time = 0.0;  // s spent outside completed holds
  double distance = 0.0;   // m, integrated over every tick
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t noise_seed(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x6e6f6973u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Drives the simulator tick by tick while keeping the bookkeeping that the
// protocol needs (ramped command, travelled distance).
class Vehicle {
 public:
  Vehicle(const RobotGeometry& geom, const TerrainModel& terrain, double dt, std::uint64_t seed)
      : geom_(geom), terrain_(terrain), dt_(dt), rng_(noise_seed(seed)) {}

  Measurement tick(const BodyVelocity& target) {
    applied_ = clamp_transition(geom_, applied_, target, dt_);
    const StepResult r = step(state_, geom_, terrain_, idd_inverse(geom_, applied_), dt_, rng_);
    distance_ += std::hypot(r.state.pose.x - state_.pose.x, r.state.pose.y - state_.pose.y);
    state_ = r.state;
    return r.measurement;
  }

  bool at_rest(double tol = 0.02) const {
    return applied_ == BodyVelocity{} && std::abs(state_.body.vx) < tol &&
           std::abs(state_.body.vy) < tol && std::abs(state_.body.wz) < tol;
  }

  const SimState& state() const { return state_; }
  double clock() const { return state_.clock(dt_); }
  double distance() const { return distance_; }
  const RobotGeometry& geometry() const { return geom_; }

 private:
  const RobotGeometry& geom_;
  const TerrainModel& terrain_;
  double dt_;
  std::mt19937_64 rng_;
  SimState state_;
  BodyVelocity applied_;
  double distance_ = 0.0;
};

inline void come_to_rest(Vehicle& v, double timeout) {
  const double until = v.clock() + timeout;
  while (!v.at_rest() && v.clock() < until) v.tick({});
}

// Smallest distance to the zone edge, over one hold of `command` started from
// rest at `start`, of the point the operator extrapolates `horizon` seconds
// ahead. Nominal kinematics; the terrain is unknown to the operator.
inline double hold_clearance(const RobotGeometry& geom, const SafeZone& zone, Pose2 start,
                             const BodyVelocity& command, const ProtocolConfig& config) {
  BodyVelocity v;
  double worst = std::numeric_limits<double>::infinity();
  const auto ticks = static_cast<long long>(std::llround(config.hold_seconds / config.dt));
  for (long long k = 0; k < ticks; ++k) {
    v = clamp_transition(geom, v, command, config.dt);
    const double yaw = start.yaw + 0.5 * v.wz * config.dt;
    start.x += v.vx * std::cos(yaw) * config.dt;
    start.y += v.vx * std::sin(yaw) * config.dt;
    start.yaw += v.wz * config.dt;
    const double ex = start.x + v.vx * std::cos(start.yaw) * config.operator_horizon;
    const double ey = start.y + v.vx * std::sin(start.yaw) * config.operator_horizon;
    worst = std::min({worst, zone.half_x - std::abs(start.x), zone.half_y - std::abs(start.y),
                      zone.half_x - std::abs(ex), zone.half_y - std::abs(ey)});
  }
  return worst;
}

// Heading, out of 72 candidates, with the largest hold clearance.
inline std::pair<double, double> best_heading(const RobotGeometry& geom, const SafeZone& zone,
                                              const Pose2& at, const BodyVelocity& command,
                                              const ProtocolConfig& config) {
  double best_yaw = at.yaw;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 72; ++i) {
    const double yaw = wrap_angle(i * std::numbers::pi / 36.0);
    const double c = hold_clearance(geom, zone, {at.x, at.y, yaw}, command, config);
    if (c > best) {
      best = c;
      best_yaw = yaw;
    }
  }
  return {best_yaw, best};
}

// Turn in place at half the angular limit, then correct the overshoot the
// lag leaves behind with slower passes.
inline void turn_to(Vehicle& v, double goal) {
  double rate = v.geometry().max_angular_speed / 2.0;
  for (int pass = 0; pass < 6; ++pass) {
    const double first = wrap_angle(goal - v.state().pose.yaw);
    if (std::abs(first) < 0.05) break;
    const double direction = first >= 0.0 ? 1.0 : -1.0;
    const double until = v.clock() + 60.0;
    while (v.clock() < until) {
      const double err = wrap_angle(goal - v.state().pose.yaw);
      if (std::abs(err) < 0.05 || err * direction < 0.0) break;
      v.tick({0.0, 0.0, direction * rate});
    }
    come_to_rest(v, 20.0);
    rate /= 2.0;
  }
}

// Drive at half speed to `goal`, steering on the bearing.
inline void drive_to(Vehicle& v, double gx, double gy) {
  const RobotGeometry& g = v.geometry();
  const double until = v.clock() + 120.0;
  while (v.clock() < until) {
    const Pose2& p = v.state().pose;
    const double dist = std::hypot(gx - p.x, gy - p.y);
    if (dist < 0.5) break;
    const double err = wrap_angle(std::atan2(gy - p.y, gx - p.x) - p.yaw);
    const double wz = std::clamp(2.0 * err, -g.max_angular_speed / 2.0, g.max_angular_speed / 2.0);
    const double vx = std::abs(err) > 0.5 ? 0.0 : std::min(g.max_linear_speed / 2.0, dist);
    v.tick({vx, 0.0, wz});
  }
  come_to_rest(v, 20.0);
}

// Start spot for the coming hold when none is available from here: the
// point of a grid over the zone with the largest clearance, nearest first
// among ties.
inline std::pair<double, double> best_start(const RobotGeometry& geom, const SafeZone& zone,
                                            const Pose2& at, const BodyVelocity& command,
                                            const ProtocolConfig& config) {
  constexpr int kCells = 10;
  double best = -std::numeric_limits<double>::infinity();
  double best_dist = 0.0;
  std::pair<double, double> spot{0.0, 0.0};
  for (int i = 0; i <= kCells; ++i) {
    for (int j = 0; j <= kCells; ++j) {
      const double x = zone.half_x * 0.8 * (2.0 * i / kCells - 1.0);
      const double y = zone.half_y * 0.8 * (2.0 * j / kCells - 1.0);
      const double c = best_heading(geom, zone, {x, y, 0.0}, command, config).second;
      const double d = std::hypot(x - at.x, y - at.y);
      if (c > best + 1e-9 || (c > best - 1e-9 && d < best_dist)) {
        best = c;
        best_dist = d;
        spot = {x, y};
      }
    }
  }
  return spot;
}

// Operator reset after an interrupt: stop, and turn in place towards the
// heading that keeps the coming hold inside the zone. When no heading from
// the current spot does, first drive to a spot from which one does.
inline void reorient(Vehicle& v, const BodyVelocity& command, const SafeZone& zone,
                     const ProtocolConfig& config) {
  come_to_rest(v, 20.0);
  auto [yaw, clearance] = best_heading(v.geometry(), zone, v.state().pose, command, config);
  if (clearance <= 0.0) {
    const auto [x, y] = best_start(v.geometry(), zone, v.state().pose, command, config);
    turn_to(v, std::atan2(y - v.state().pose.y, x - v.state().pose.x));
    drive_to(v, x, y);
    yaw = best_heading(v.geometry(), zone, v.state().pose, command, config).first;
  }
  turn_to(v, yaw);
}

}  // namespace detail

/// Runs the protocol on the simulator and returns the completed holds
/// together with the sampled command set.
inline DriveRun run_drive(const RobotGeometry& geom, const CommandPolygon& polygon,
                          const TerrainModel& terrain, const SafeZone& zone,
                          const ProtocolConfig& config) {
  geom.validate();
  config.validate();
  if (!minimum_area_check(geom, zone, config.hold_seconds)) {
    throw ProtocolError("safe zone too small: one side must be at least " +
                        std::to_string(1.5 * geom.max_linear_speed * config.hold_seconds) + " m");
  }

  DriveRun run;
  run.geometry = geom;
  run.terrain = terrain.name;
  run.config = config;
  run.zone = zone;
  run.commands.seed = config.seed;

  CommandSampler sampler(polygon, config.seed);
  detail::Vehicle vehicle(geom, terrain, config.dt, config.seed);
  const std::size_t n_samples = config.samples_per_episode();

  for (std::size_t n = 0; n < config.steps; ++n) {
    Episode ep;
    ep.id = n;
    ep.command = sampler.next();
    ep.command_body = idd_forward(geom, ep.command);
    run.commands.commands.push_back(ep.command);
    run.commands.body.push_back(ep.command_body);
    ep.samples.reserve(n_samples);

    double hold_start = vehicle.clock();
    while (ep.samples.size() < n_samples) {
      const Measurement m = vehicle.tick(ep.command_body);
      if (operator_check(vehicle.state(), zone, config.operator_horizon) ==
          OperatorAction::interrupt) {
        ep.samples.clear();
        if (++ep.interrupted_count > config.max_interrupts_per_command) {
          throw ProtocolError("command " + std::to_string(n) + " interrupted more than " +
                              std::to_string(config.max_interrupts_per_command) + " times");
        }
        detail::reorient(vehicle, ep.command_body, zone, config);
        run.idle_time += vehicle.clock() - hold_start;
        hold_start = vehicle.clock();
        continue;
      }
      ep.samples.push_back({vehicle.clock(), ep.command, ep.command_body, m});
    }
    run.episodes.push_back(std::move(ep));
  }
  run.distance = vehicle.distance();
  return run;
}

/// Transient window followed by two steady windows, with steady means.
struct WindowedEpisode {
  std::size_t id = 0;
  WheelCommand command;
  BodyVelocity command_body;
  std::vector<EpisodeSample> transient;
  std::vector<EpisodeSample> steady_first;
  std::vector<EpisodeSample> steady_second;
  BodyVelocity steady_mean_body;
  WheelCommand steady_mean_wheels;
  /// std/|mean| of measured vx over the last window; large values flag holds
  /// that had not settled.
  double steadiness = 0.0;
};

namespace detail {
// Shifted mean: exact when all values are equal.
template <class Range, class Get>
double shifted_mean(const Range& a, const Range& b, Get get) {
  const double origin = get(a.front());
  double acc = 0.0;
  for (const auto& s : a) acc += get(s) - origin;
  for (const auto& s : b) acc += get(s) - origin;
  return origin + acc / static_cast<double>(a.size() + b.size());
}
}  // namespace detail

inline WindowedEpisode segment(const Episode& ep, std::size_t window = 40) {
  if (window == 0 || ep.samples.size() != 3 * window) {
    throw std::invalid_argument("segment: episode " + std::to_string(ep.id) + " has " +
                                std::to_string(ep.samples.size()) + " samples, expected " +
                                std::to_string(3 * window));
  }
  WindowedEpisode w;
  w.id = ep.id;
  w.command = ep.command;
  w.command_body = ep.command_body;
  const auto first = ep.samples.begin();
  w.transient.assign(first, first + window);
  w.steady_first.assign(first + window, first + 2 * window);
  w.steady_second.assign(first + 2 * window, ep.samples.end());

  const auto& a = w.steady_first;
  const auto& b = w.steady_second;
  w.steady_mean_body = {
      detail::shifted_mean(a, b, [](const EpisodeSample& s) { return s.measured.body.vx; }),
      detail::shifted_mean(a, b, [](const EpisodeSample& s) { return s.measured.body.vy; }),
      detail::shifted_mean(a, b, [](const EpisodeSample& s) { return s.measured.body.wz; })};
  w.steady_mean_wheels = {
      detail::shifted_mean(a, b, [](const EpisodeSample& s) { return s.measured.wheels.left; }),
      detail::shifted_mean(a, b, [](const EpisodeSample& s) { return s.measured.wheels.right; })};

  double mean = 0.0;
  for (const auto& s : b) mean += s.measured.body.vx;
  mean /= static_cast<double>(b.size());
  double var = 0.0;
  for (const auto& s : b) var += (s.measured.body.vx - mean) * (s.measured.body.vx - mean);
  const double sd = std::sqrt(var / static_cast<double>(b.size()));
  w.steadiness = std::abs(mean) > 0.0 ? sd / std::abs(mean) : (sd > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return w;
}

inline std::vector<WindowedEpisode> segment_all(const DriveRun& run) {
  std::vector<WindowedEpisode> out;
  out.reserve(run.episodes.size());
  for (const auto& ep : run.episodes) out.push_back(segment(ep, run.config.samples_per_window()));
  return out;
}

struct EfficiencyReport {
  double data_time_fraction = 1.0;
  double distance_m = 0.0;
  double total_time_s = 0.0;
  int interrupts = 0;
};

inline EfficiencyReport efficiency_report(const DriveRun& run) {
  EfficiencyReport r;
  const double data_time = static_cast<double>(run.episodes.size()) * run.config.hold_seconds;
  r.total_time_s = data_time + run.idle_time;
  r.data_time_fraction = r.total_time_s > 0.0 ? data_time / r.total_time_s : 1.0;
  r.distance_m = run.distance;
  for (const auto& ep : run.episodes) r.interrupts += ep.interrupted_count;
  return r;
}

}  // namespace drive
