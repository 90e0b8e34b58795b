#pragma once

// Plain key=value configuration files for robots and terrains, plus the
// round-trip-exact number formatting shared by every text output.

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

#include "drive/ssmr_model.hpp"
#include "drive/terrain_presets.hpp"
#include "drive/terrain_sim.hpp"

namespace drive {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || first == last) {
    throw ConfigError("invalid number '" + std::string(text) + "' for " + std::string(what));
  }
  return v;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Ordered key=value pairs. '#' starts a comment line.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& source) {
    KeyValues kv;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const std::string_view t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(source + ":" + std::to_string(number) + ": expected key=value");
      }
      const std::string key(trim(t.substr(0, eq)));
      const std::string value(trim(t.substr(eq + 1)));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
      if (!kv.values_.emplace(key, value).second) {
        throw ConfigError(source + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
      }
    }
    kv.source_ = source;
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& text(const std::string& key) const {
    used_.insert(key);
    return values_.at(key);
  }

  double number(const std::string& key) const {
    return parse_double(text(key), "'" + key + "' in " + source_);
  }

  /// Overwrites `target` when the key is present.
  void maybe(const std::string& key, double& target) const {
    if (has(key)) target = number(key);
  }

  /// Every key must have been read; catches typos.
  void reject_unused() const {
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) throw ConfigError(source_ + ": unknown key '" + k + "'");
    }
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string source_ = "<config>";
};

inline RobotGeometry robot_preset(std::string_view name) {
  if (name == "warthog") return warthog_geometry();
  if (name == "husky") return husky_geometry();
  throw ConfigError("unknown robot preset '" + std::string(name) + "' (known: warthog, husky)");
}

inline RobotGeometry robot_from_config(const KeyValues& kv) {
  RobotGeometry g;
  if (kv.has("preset")) g = robot_preset(kv.text("preset"));
  kv.maybe("mass", g.mass);
  kv.maybe("base_width", g.base_width);
  kv.maybe("wheel_radius", g.wheel_radius);
  kv.maybe("body_depth", g.body_depth);
  kv.maybe("body_height", g.body_height);
  kv.maybe("max_wheel_speed", g.max_wheel_speed);
  kv.maybe("max_linear_speed", g.max_linear_speed);
  kv.maybe("max_angular_speed", g.max_angular_speed);
  kv.maybe("max_linear_accel", g.max_linear_accel);
  kv.reject_unused();
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return g;
}

inline void robot_to_config(const RobotGeometry& g, KeyValues& kv) {
  kv.set("mass", format_double(g.mass));
  kv.set("base_width", format_double(g.base_width));
  kv.set("wheel_radius", format_double(g.wheel_radius));
  kv.set("body_depth", format_double(g.body_depth));
  kv.set("body_height", format_double(g.body_height));
  kv.set("max_wheel_speed", format_double(g.max_wheel_speed));
  kv.set("max_linear_speed", format_double(g.max_linear_speed));
  kv.set("max_angular_speed", format_double(g.max_angular_speed));
  kv.set("max_linear_accel", format_double(g.max_linear_accel));
}

/// `name_or_path` is a preset name or a key=value file.
inline RobotGeometry resolve_robot(const std::string& name_or_path) {
  if (name_or_path == "warthog" || name_or_path == "husky") return robot_preset(name_or_path);
  return robot_from_config(KeyValues::load(name_or_path));
}

/// Terrain file: `preset=<name>` followed by parameter overrides. Optional
/// calibration keys run after the overrides:
///   target_angular_slip_median=<rad/s>
///   target_rho_ratio=<x>   (relative to `rho_reference`, default asphalt)
inline TerrainParams terrain_from_config(const KeyValues& kv, const RobotGeometry& geom) {
  TerrainParams p = terrain_preset(kv.has("preset") ? kv.text("preset") : "perfect", geom);
  if (kv.has("name")) p.name = kv.text("name");
  kv.maybe("time_constant", p.time_constant);
  if (kv.has("noise_std")) {
    const double n = kv.number("noise_std");
    p.noise = {n, n, n};
  }
  kv.maybe("noise_wheel", p.noise.wheel);
  kv.maybe("noise_linear", p.noise.linear);
  kv.maybe("noise_angular", p.noise.angular);
  kv.maybe("wheel_limit_left", p.wheel_limit_left);
  kv.maybe("wheel_limit_right", p.wheel_limit_right);
  kv.maybe("torque_slip", p.torque_slip);
  kv.maybe("longitudinal_slip", p.longitudinal_slip);
  kv.maybe("turn_longitudinal_slip", p.turn_longitudinal_slip);
  kv.maybe("linear_cap", p.linear_cap);
  kv.maybe("lateral_drift", p.lateral_drift);
  kv.maybe("angular_slip", p.angular_slip);
  kv.maybe("angular_cap", p.angular_cap);
  kv.maybe("backlash", p.backlash);
  kv.maybe("backlash_speed", p.backlash_speed);
  if (kv.has("backlash_rho_floor")) p.backlash = backlash_for_rho_floor(kv.number("backlash_rho_floor"));

  if (kv.has("target_angular_slip_median")) {
    p = tune_angular_slip_median(p, geom, kv.number("target_angular_slip_median"));
  }
  if (kv.has("target_rho_ratio")) {
    const std::string ref = kv.has("rho_reference") ? kv.text("rho_reference") : "asphalt";
    p = tune_rho_ratio(p, terrain_preset(ref, geom), geom, kv.number("target_rho_ratio"));
  } else if (kv.has("rho_reference")) {
    kv.text("rho_reference");
  }
  kv.reject_unused();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline TerrainParams resolve_terrain(const std::string& name_or_path, const RobotGeometry& geom) {
  for (const auto& n : preset_names()) {
    if (n == name_or_path) return terrain_preset(n, geom);
  }
  std::ifstream probe(name_or_path);
  if (!probe) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("'" + name_or_path + "' is neither a terrain preset (" + known +
                      ") nor a readable file");
  }
  return terrain_from_config(KeyValues::parse(probe, name_or_path), geom);
}

}  // namespace drive
