#pragma once

// CSV log of a protocol run plus the small CSV writers used by the CLI.
//
// Log layout: `# key=value` metadata lines, the column header, then one row
// per recorded tick grouped by episode. Numbers are written in the shortest
// form that parses back to the same double, so write/read is lossless.

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drive/command_space.hpp"
#include "drive/config.hpp"
#include "drive/drive_protocol.hpp"
#include "drive/slip_analysis.hpp"
#include "drive/unpredictability.hpp"

namespace drive {

inline constexpr std::string_view kLogHeader =
    "t,episode_id,cmd_wl,cmd_wr,meas_wl,meas_wr,cmd_vx,cmd_wz,meas_vx,meas_vy,meas_wz,"
    "pose_x,pose_y,pose_yaw";
inline constexpr std::size_t kLogColumns = 14;

class LogParseError : public std::runtime_error {
 public:
  LogParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line),
        detail_(what) {}
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

inline void write_log(std::ostream& out, const DriveRun& run) {
  const auto f = [](double v) { return format_double(v); };
  const RobotGeometry& g = run.geometry;
  out << "# mass=" << f(g.mass) << '\n'
      << "# base_width=" << f(g.base_width) << '\n'
      << "# wheel_radius=" << f(g.wheel_radius) << '\n'
      << "# body_depth=" << f(g.body_depth) << '\n'
      << "# body_height=" << f(g.body_height) << '\n'
      << "# max_wheel_speed=" << f(g.max_wheel_speed) << '\n'
      << "# max_linear_speed=" << f(g.max_linear_speed) << '\n'
      << "# max_angular_speed=" << f(g.max_angular_speed) << '\n'
      << "# max_linear_accel=" << f(g.max_linear_accel) << '\n'
      << "# terrain=" << run.terrain << '\n'
      << "# seed=" << run.config.seed << '\n'
      << "# steps=" << run.config.steps << '\n'
      << "# h_calib=" << f(run.config.hold_seconds) << '\n'
      << "# window=" << f(run.config.window_seconds) << '\n'
      << "# dt=" << f(run.config.dt) << '\n'
      << "# operator_horizon=" << f(run.config.operator_horizon) << '\n'
      << "# zone_width=" << f(2.0 * run.zone.half_x) << '\n'
      << "# zone_height=" << f(2.0 * run.zone.half_y) << '\n'
      << "# idle_time=" << f(run.idle_time) << '\n'
      << "# distance=" << f(run.distance) << '\n'
      << "# interrupts=";
  for (std::size_t i = 0; i < run.episodes.size(); ++i) {
    out << (i ? "," : "") << run.episodes[i].interrupted_count;
  }
  out << '\n' << kLogHeader << '\n';

  for (const auto& ep : run.episodes) {
    for (const auto& s : ep.samples) {
      const Measurement& m = s.measured;
      out << f(s.t) << ',' << ep.id << ',' << f(s.command.left) << ',' << f(s.command.right)
          << ',' << f(m.wheels.left) << ',' << f(m.wheels.right) << ',' << f(s.command_body.vx)
          << ',' << f(s.command_body.wz) << ',' << f(m.body.vx) << ',' << f(m.body.vy) << ','
          << f(m.body.wz) << ',' << f(m.pose.x) << ',' << f(m.pose.y) << ','
          << f(m.pose.yaw) << '\n';
    }
  }
}

inline void write_log(const std::string& path, const DriveRun& run) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_log(out, run);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline unsigned long long parse_count(std::string_view text, const std::string& what) {
  unsigned long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("invalid integer '" + std::string(text) + "' for " + what);
  }
  return v;
}

}  // namespace detail

/// Parses a log. Metadata is optional (external field logs may carry only
/// the rows); missing keys keep their defaults.
inline DriveRun read_log(std::istream& in) {
  DriveRun run;
  std::string line;
  std::size_t number = 0;
  std::vector<int> interrupts;
  bool have_interrupts = false;

  // Metadata, then the header.
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') {
      const std::string_view body = trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;  // free-form comment
      const std::string key(trim(body.substr(0, eq)));
      const std::string_view value = trim(body.substr(eq + 1));
      try {
        RobotGeometry& g = run.geometry;
        ProtocolConfig& c = run.config;
        auto num = [&] { return parse_double(value, key); };
        if (key == "mass") g.mass = num();
        else if (key == "base_width") g.base_width = num();
        else if (key == "wheel_radius") g.wheel_radius = num();
        else if (key == "body_depth") g.body_depth = num();
        else if (key == "body_height") g.body_height = num();
        else if (key == "max_wheel_speed") g.max_wheel_speed = num();
        else if (key == "max_linear_speed") g.max_linear_speed = num();
        else if (key == "max_angular_speed") g.max_angular_speed = num();
        else if (key == "max_linear_accel") g.max_linear_accel = num();
        else if (key == "terrain") run.terrain = std::string(value);
        else if (key == "seed") c.seed = detail::parse_count(value, key);
        else if (key == "steps") c.steps = detail::parse_count(value, key);
        else if (key == "h_calib") c.hold_seconds = num();
        else if (key == "window") c.window_seconds = num();
        else if (key == "dt") c.dt = num();
        else if (key == "operator_horizon") c.operator_horizon = num();
        else if (key == "zone_width") run.zone.half_x = num() / 2.0;
        else if (key == "zone_height") run.zone.half_y = num() / 2.0;
        else if (key == "idle_time") run.idle_time = num();
        else if (key == "distance") run.distance = num();
        else if (key == "interrupts") {
          have_interrupts = true;
          if (!value.empty()) {
            for (auto item : detail::split(value, ',')) {
              interrupts.push_back(static_cast<int>(detail::parse_count(trim(item), key)));
            }
          }
        }
        // Unknown metadata is tolerated so other tools can annotate logs.
      } catch (const ConfigError& e) {
        throw LogParseError(number, e.what());
      }
      continue;
    }
    if (line != kLogHeader) throw LogParseError(number, "malformed header '" + line + "'");
    header = true;
    break;
  }
  if (!header) throw LogParseError(number + 1, "missing header");

  const double dt = run.config.dt;
  const std::size_t per_episode = run.config.samples_per_episode();
  Episode current;
  bool open = false;

  auto close = [&](std::size_t at_line) {
    if (current.samples.size() != per_episode) {
      throw LogParseError(at_line, "episode " + std::to_string(current.id) + " has " +
                                       std::to_string(current.samples.size()) +
                                       " rows, expected " + std::to_string(per_episode));
    }
    run.commands.commands.push_back(current.command);
    run.commands.body.push_back(current.command_body);
    run.episodes.push_back(std::move(current));
    current = Episode{};
    open = false;
  };

  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != kLogColumns) {
      throw LogParseError(number, "expected " + std::to_string(kLogColumns) + " columns, got " +
                                      std::to_string(cells.size()));
    }
    double v[kLogColumns];
    std::size_t id = 0;
    try {
      for (std::size_t i = 0; i < kLogColumns; ++i) {
        if (i == 1) {
          id = detail::parse_count(cells[i], "episode_id");
        } else {
          v[i] = parse_double(cells[i], std::string(detail::split(kLogHeader, ',')[i]));
        }
      }
    } catch (const ConfigError& e) {
      throw LogParseError(number, e.what());
    }

    if (open && id != current.id) {
      if (id < current.id) {
        throw LogParseError(number, "episode " + std::to_string(id) + " appears out of order");
      }
      close(number);
    }
    EpisodeSample s;
    s.t = v[0];
    s.command = {v[2], v[3]};
    s.command_body = {v[6], 0.0, v[7]};
    s.measured.wheels = {v[4], v[5]};
    s.measured.body = {v[8], v[9], v[10]};
    s.measured.pose = {v[11], v[12], v[13]};
    if (!open) {
      if (!run.episodes.empty() && id == run.episodes.back().id) {
        throw LogParseError(number, "episode " + std::to_string(id) + " appears out of order");
      }
      open = true;
      current.id = id;
      current.command = s.command;
      current.command_body = s.command_body;
      if (run.episodes.size() < interrupts.size()) {
        current.interrupted_count = interrupts[run.episodes.size()];
      }
    } else {
      const double gap = s.t - current.samples.back().t;
      if (!(std::abs(gap - dt) <= 1e-6)) {
        throw LogParseError(number, "timestamp " + std::string(cells[0]) +
                                        " does not follow the previous row by " +
                                        format_double(dt) + " s");
      }
    }
    current.samples.push_back(s);
  }
  if (open) close(number + 1);

  if (have_interrupts && interrupts.size() != run.episodes.size()) {
    throw LogParseError(number, "interrupts metadata lists " + std::to_string(interrupts.size()) +
                                    " episodes, log has " +
                                    std::to_string(run.episodes.size()));
  }
  run.commands.seed = run.config.seed;
  return run;
}

inline DriveRun read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log '" + path + "'");
  try {
    return read_log(in);
  } catch (const LogParseError& e) {
    throw LogParseError(e.line(), path + ": " + e.detail());
  }
}

// ---------------------------------------------------------------------------
// Analysis outputs

/// Nodes inside the polygon only; low-support nodes carry `nan`.
inline void write_grid(std::ostream& out, const SlipGrid& grid) {
  out << "vx,wz,value,support\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.inside[k]) continue;
    const poly::Point p = grid.node(k);
    out << format_double(p.x()) << ',' << format_double(p.y()) << ','
        << (grid.low_support[k] ? std::string("nan") : format_double(grid.value[k])) << ','
        << format_double(grid.support[k]) << '\n';
  }
}

inline void write_polygon(std::ostream& out, const CommandPolygon& polygon) {
  out << "frame,v1,v2\n";
  for (const auto& p : polygon.body) {
    out << "body," << format_double(p.x()) << ',' << format_double(p.y()) << '\n';
  }
  for (const auto& p : polygon.wheel) {
    out << "wheel," << format_double(p.x()) << ',' << format_double(p.y()) << '\n';
  }
}

inline void write_risk(std::ostream& out, const RiskMap& map) {
  out << "label,terrain,motion,count,median_rho,median_energy,center_rho,center_energy,"
         "semi_major,semi_minor,angle,max_kinetic_energy\n";
  for (const auto& s : map.summaries) {
    const RiskEllipse& e = s.ellipse;
    out << s.label << ',' << s.terrain << ',' << motion_name(s.motion) << ',' << s.count << ','
        << format_double(s.median_rho) << ',' << format_double(s.median_energy) << ','
        << format_double(e.center_rho) << ',' << format_double(e.center_energy) << ','
        << format_double(e.semi_major) << ',' << format_double(e.semi_minor) << ','
        << format_double(e.angle) << ',' << format_double(s.max_kinetic_energy) << '\n';
  }
}

inline void write_risk_points(std::ostream& out, const RiskMap& map) {
  out << "terrain,motion,rho,kinetic_energy\n";
  for (const auto& p : map.points) {
    out << p.terrain << ',' << motion_name(p.motion) << ',' << format_double(p.rho) << ','
        << format_double(p.kinetic_energy) << '\n';
  }
}

}  // namespace drive
