#pragma once

// `drive` command-line front end. Kept in a header so tests can call
// cli_dispatch directly.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drive/command_space.hpp"
#include "drive/config.hpp"
#include "drive/dataset_io.hpp"
#include "drive/drive_protocol.hpp"
#include "drive/slip_analysis.hpp"
#include "drive/ssmr_model.hpp"
#include "drive/stats.hpp"
#include "drive/terrain_presets.hpp"
#include "drive/terrain_sim.hpp"
#include "drive/unpredictability.hpp"

namespace drive {

/// Square zone 20 % larger than the minimum side, so holds at top speed have
/// room in every direction.
inline SafeZone default_zone(const RobotGeometry& geom, double hold_seconds = 6.0) {
  const double side = 1.2 * 1.5 * geom.max_linear_speed * hold_seconds;
  return SafeZone::from_size(side, side);
}

/// "20x45" -> 20 m by 45 m.
inline SafeZone parse_zone(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("zone must look like WxH, got '" + text + "'");
  return SafeZone::from_size(parse_double(text.substr(0, x), "zone width"),
                             parse_double(text.substr(x + 1), "zone height"));
}

namespace detail {

class Output {
 public:
  explicit Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }
  void finish(const std::string& path) {
    stream_->flush();
    if (!*stream_) throw std::runtime_error("write to '" + (path.empty() ? "stdout" : path) + "' failed");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline KernelCovariance pick_covariance(const std::optional<double>& sigma,
                                        const std::vector<SlipSample>& samples,
                                        const CommandPolygon& polygon, double res) {
  if (sigma) return KernelCovariance::isotropic(*sigma);
  return KernelCovariance::isotropic(auto_isotropic_variance(commands_of(samples), polygon, res));
}

inline std::string stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace detail

inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Terrain-aware slip identification for skid-steering robots", "drive"};
  app.require_subcommand(1);

  // run-sim
  std::string terrain_arg = "perfect";
  std::string robot_arg = "warthog";
  std::size_t steps = 150;
  std::uint64_t seed = 0;
  std::string zone_arg;
  std::optional<double> noise;
  std::string out_path;
  auto* sim = app.add_subcommand("run-sim", "simulate the identification protocol and write a log");
  sim->add_option("--terrain", terrain_arg, "terrain preset or key=value file")->capture_default_str();
  sim->add_option("--robot", robot_arg, "warthog, husky or a key=value file")->capture_default_str();
  sim->add_option("--steps", steps, "number of commands")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "sampling and noise seed")->capture_default_str();
  sim->add_option("--zone", zone_arg, "safe zone WxH in metres (default: square, 1.8 x top speed x hold)");
  sim->add_option("--noise", noise, "measurement noise std on every channel");
  sim->add_option("--out", out_path, "output log (default stdout)");

  // analyze
  std::string in_path;
  std::string channel_arg = "gtheta";
  double res = 0.1;
  std::optional<double> sigma;
  bool magnitude = false;
  auto* analyze = app.add_subcommand("analyze", "smooth one slip channel over the command space");
  analyze->add_option("--in", in_path, "input log")->required();
  analyze->add_option("--channel", channel_arg, "gx, gy, gtheta, wheel_l or wheel_r")->capture_default_str();
  analyze->add_option("--res", res, "grid resolution")->capture_default_str()->check(CLI::PositiveNumber);
  analyze->add_option("--sigma", sigma, "kernel variance on both axes (default: auto)")->check(CLI::PositiveNumber);
  analyze->add_flag("--magnitude", magnitude, "summarise |slip| instead of signed slip");
  analyze->add_option("--out", out_path, "grid CSV (default stdout)");

  // metric
  std::string geom_path;
  auto* metric = app.add_subcommand("metric", "smooth the unpredictability metric over the command space");
  metric->add_option("--in", in_path, "input log")->required();
  metric->add_option("--geom", geom_path, "robot config overriding the log's geometry");
  metric->add_option("--res", res, "grid resolution")->capture_default_str()->check(CLI::PositiveNumber);
  metric->add_option("--sigma", sigma, "kernel variance on both axes (default: auto)")->check(CLI::PositiveNumber);
  metric->add_option("--out", out_path, "grid CSV (default stdout)");

  // riskmap
  std::vector<std::string> inputs;
  std::string motion_arg = "all";
  std::string points_path;
  auto* risk = app.add_subcommand("riskmap", "per-log rho and kinetic energy summaries");
  risk->add_option("--in", inputs, "comma-separated logs")->required()->delimiter(',');
  risk->add_option("--motion", motion_arg, "all, forward or turning")->capture_default_str();
  risk->add_option("--out", out_path, "summary CSV (default stdout)");
  risk->add_option("--points", points_path, "also write every (rho, energy) point");

  // export-polygon
  auto* epoly = app.add_subcommand("export-polygon", "write the command polygon in both frames");
  epoly->add_option("--robot", robot_arg, "warthog, husky or a key=value file")->capture_default_str();
  epoly->add_option("--out", out_path, "polygon CSV (default stdout)");

  // export-grid
  auto* egrid = app.add_subcommand("export-grid", "write a terrain's ground-truth slip grid");
  egrid->add_option("--terrain", terrain_arg, "terrain preset or key=value file")->capture_default_str();
  egrid->add_option("--robot", robot_arg, "warthog, husky or a key=value file")->capture_default_str();
  egrid->add_option("--channel", channel_arg, "gx, gy, gtheta, wheel_l or wheel_r")->capture_default_str();
  egrid->add_option("--res", res, "grid resolution")->capture_default_str()->check(CLI::PositiveNumber);
  egrid->add_option("--out", out_path, "grid CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*sim) {
      const RobotGeometry geom = resolve_robot(robot_arg);
      TerrainParams params = resolve_terrain(terrain_arg, geom);
      if (noise) params.noise = {*noise, *noise, *noise};
      ProtocolConfig config;
      config.steps = steps;
      config.seed = seed;
      const SafeZone zone = zone_arg.empty() ? default_zone(geom, config.hold_seconds)
                                             : parse_zone(zone_arg);
      const DriveRun run =
          run_drive(geom, build_polygon(geom), make_terrain(params, geom), zone, config);
      detail::Output o(out_path, out);
      write_log(o.get(), run);
      o.finish(out_path);
      const EfficiencyReport eff = efficiency_report(run);
      err << "run-sim: " << run.episodes.size() << " commands, " << eff.interrupts
          << " interrupts, data time " << format_double(eff.data_time_fraction * 100.0)
          << " %, distance " << format_double(eff.distance_m) << " m\n";
    } else if (*analyze) {
      const Channel channel = parse_channel(channel_arg);
      const DriveRun run = read_log(in_path);
      const std::vector<SlipSample> samples = compute_slips(run);
      const CommandPolygon polygon = build_polygon(run.geometry);
      const KernelCovariance cov = detail::pick_covariance(sigma, samples, polygon, res);
      const SlipGrid grid = smooth_slip_grid(samples, channel, polygon, res, cov);
      detail::Output o(out_path, out);
      write_grid(o.get(), grid);
      o.finish(out_path);
      std::ostream& report = out_path.empty() || out_path == "-" ? err : out;
      const stats::Distribution d = slip_distribution(samples, channel, {}, magnitude);
      report << channel_name(channel) << (magnitude ? " |slip|" : " slip") << ": n=" << d.count
             << " median=" << format_double(d.median) << " q1=" << format_double(d.q1)
             << " q3=" << format_double(d.q3) << " p2.5=" << format_double(d.p2_5)
             << " p97.5=" << format_double(d.p97_5) << " sigma=" << format_double(cov.var_vx)
             << '\n';
    } else if (*metric) {
      DriveRun run = read_log(in_path);
      if (!geom_path.empty()) run.geometry = resolve_robot(geom_path);
      const std::vector<SlipSample> samples = compute_slips(run);
      const CommandPolygon polygon = build_polygon(run.geometry);
      const KernelCovariance cov = detail::pick_covariance(sigma, samples, polygon, res);
      const SlipGrid grid = metric_grid(samples, run.geometry, polygon, res, cov);
      detail::Output o(out_path, out);
      write_grid(o.get(), grid);
      o.finish(out_path);
    } else if (*risk) {
      const MotionFilter motion = parse_motion(motion_arg);
      std::vector<RiskScenario> scenarios;
      for (const auto& path : inputs) {
        const DriveRun run = read_log(path);
        RiskScenario sc;
        sc.label = detail::stem(path);
        sc.terrain = run.terrain;
        sc.geometry = run.geometry;
        sc.samples = compute_slips(run);
        sc.motion = motion;
        scenarios.push_back(std::move(sc));
      }
      const RiskMap map = risk_points(scenarios);
      detail::Output o(out_path, out);
      write_risk(o.get(), map);
      o.finish(out_path);
      if (!points_path.empty()) {
        detail::Output p(points_path, out);
        write_risk_points(p.get(), map);
        p.finish(points_path);
      }
    } else if (*epoly) {
      const RobotGeometry geom = resolve_robot(robot_arg);
      detail::Output o(out_path, out);
      write_polygon(o.get(), build_polygon(geom));
      o.finish(out_path);
    } else if (*egrid) {
      const Channel channel = parse_channel(channel_arg);
      const RobotGeometry geom = resolve_robot(robot_arg);
      const TerrainModel terrain = make_terrain(resolve_terrain(terrain_arg, geom), geom);
      detail::Output o(out_path, out);
      write_grid(o.get(), truth_slip_grid(geom, terrain, build_polygon(geom), res, channel));
      o.finish(out_path);
    }
  } catch (const std::exception& e) {
    err << "drive: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace drive
