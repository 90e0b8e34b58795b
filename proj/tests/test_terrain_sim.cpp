#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "drive/command_space.hpp"
#include "drive/terrain_presets.hpp"
#include "drive/terrain_sim.hpp"

using namespace drive;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TerrainModel instant_perfect(const RobotGeometry& g) {
  TerrainParams p;
  p.time_constant = 1e-12;
  return make_terrain(p, g);
}

template <class Engine>
SimState hold(SimState s, const RobotGeometry& g, const TerrainModel& t, WheelCommand cmd,
              int ticks, Engine& rng, std::vector<Measurement>* out = nullptr) {
  for (int i = 0; i < ticks; ++i) {
    const StepResult r = step(s, g, t, cmd, kSamplePeriod, rng);
    s = r.state;
    if (out) out->push_back(r.measurement);
  }
  return s;
}

}  // namespace

TEST_CASE("instant perfect terrain reports the IDD image") {
  const RobotGeometry g = warthog_geometry();
  const TerrainModel t = instant_perfect(g);
  std::mt19937_64 rng(1);
  const WheelCommand cmd{4.0, 9.0};
  const StepResult r = step(SimState{}, g, t, cmd, kSamplePeriod, rng);
  CHECK(r.state.wheels == cmd);
  CHECK(r.measurement.wheels == cmd);
  const BodyVelocity u = idd_forward(g, cmd);
  CHECK(r.measurement.body == u);
  CHECK(r.state.tick == 1);
}

TEST_CASE("holding a zero command decays to rest") {
  const RobotGeometry g = warthog_geometry();
  const TerrainModel t = make_terrain(terrain_preset("ice", g), g);
  std::mt19937_64 rng(2);
  SimState s;
  s.wheels = {10.0, -5.0};
  s.body = idd_forward(g, s.wheels);
  s = hold(s, g, t, {}, 200, rng);
  CHECK(std::abs(s.wheels.left) < 1e-6);
  CHECK(std::abs(s.wheels.right) < 1e-6);
  CHECK(std::abs(s.body.vx) < 1e-6);
  CHECK(std::abs(s.body.wz) < 1e-6);
}

TEST_CASE("first-order lag reaches 1 - 1/e after one time constant") {
  const RobotGeometry g = warthog_geometry();
  TerrainParams p;
  p.time_constant = 0.5;
  const TerrainModel t = make_terrain(p, g);
  std::mt19937_64 rng(3);
  const SimState s = hold(SimState{}, g, t, {10.0, 10.0}, 10, rng);  // 10 ticks = 0.5 s
  CHECK_THAT(s.wheels.left / 10.0, WithinAbs(1.0 - std::exp(-1.0), 1e-12));
  CHECK_THAT(s.wheels.left / 10.0, WithinAbs(0.632, 5e-4));
}

TEST_CASE("steady state of the presets") {
  const RobotGeometry g = warthog_geometry();

  SECTION("perfect terrain is the command") {
    const TerrainModel t = make_terrain(terrain_preset("perfect", g), g);
    const WheelCommand cmd{3.0, -7.0};
    const SteadyState ss = steady_state_velocity(g, t, cmd);
    CHECK(ss.wheels == cmd);
    CHECK(ss.body == idd_forward(g, cmd));
  }
  SECTION("ice: wheels follow, body is attenuated and drifts") {
    const TerrainModel t = make_terrain(terrain_preset("ice", g), g);
    const WheelCommand cmd = idd_inverse(g, {3.0, 0.0, 1.0});
    const SteadyState ss = steady_state_velocity(g, t, cmd);
    CHECK(ss.wheels == cmd);
    CHECK(ss.body.vx > 0.0);
    CHECK(ss.body.vx < 0.8 * 3.0);
    CHECK(ss.body.wz > 0.0);
    CHECK(ss.body.wz < 0.75 * 1.0);
    CHECK(ss.body.vy != 0.0);
  }
  SECTION("asphalt with a weak left motor saturates only the left wheel") {
    const TerrainModel t = make_terrain(terrain_preset("asphalt-weak-left", g), g);
    const double top = g.max_wheel_speed;
    const SteadyState ss = steady_state_velocity(g, t, {top, top});
    CHECK_THAT(ss.wheels.left, WithinRel(0.85 * top, 1e-12));
    CHECK(ss.wheels.right == top);
    const SteadyState slow = steady_state_velocity(g, t, {0.5 * top, 0.5 * top});
    CHECK(slow.wheels.left == 0.5 * top);
  }
  SECTION("every preset keeps zero command at rest") {
    for (const auto& name : preset_names()) {
      const TerrainModel t = make_terrain(terrain_preset(name, g), g);
      const SteadyState ss = steady_state_velocity(g, t, {});
      CHECK(ss.wheels == WheelCommand{});
      CHECK(ss.body.vx == 0.0);
      CHECK(ss.body.vy == 0.0);
      CHECK(ss.body.wz == 0.0);
    }
  }
  SECTION("the lag converges to the steady state") {
    for (const auto& name : preset_names()) {
      TerrainParams p = terrain_preset(name, g);
      p.noise = {};
      const TerrainModel t = make_terrain(p, g);
      const WheelCommand cmd = idd_inverse(g, {2.0, 0.0, -1.5});
      std::mt19937_64 rng(4);
      const SimState s = hold(SimState{}, g, t, cmd, 400, rng);
      const SteadyState ss = steady_state_velocity(g, t, cmd);
      CHECK_THAT(s.body.vx, WithinAbs(ss.body.vx, 1e-9));
      CHECK_THAT(s.body.vy, WithinAbs(ss.body.vy, 1e-9));
      CHECK_THAT(s.body.wz, WithinAbs(ss.body.wz, 1e-9));
    }
  }
}

TEST_CASE("unknown preset lists the known ones") {
  CHECK_THROWS_WITH(terrain_preset("lava", warthog_geometry()),
                    Catch::Matchers::ContainsSubstring("asphalt"));
}

TEST_CASE("noise is zero-mean around the steady state") {
  const RobotGeometry g = husky_geometry();
  TerrainParams p = terrain_preset("perfect", g);
  p.noise = {0.05, 0.05, 0.05};
  const TerrainModel t = make_terrain(p, g);
  std::mt19937_64 rng(5);
  const WheelCommand cmd = idd_inverse(g, {0.6, 0.0, 0.4});
  SimState s = hold(SimState{}, g, t, cmd, 40, rng);
  std::vector<Measurement> m;
  hold(s, g, t, cmd, 400, rng, &m);
  double vx = 0.0, vy = 0.0, wz = 0.0;
  for (const auto& x : m) {
    vx += x.body.vx;
    vy += x.body.vy;
    wz += x.body.wz;
  }
  const double n = static_cast<double>(m.size());
  const double bound = 3.0 * 0.05 / std::sqrt(n);
  CHECK(std::abs(vx / n - 0.6) < bound);
  CHECK(std::abs(vy / n) < bound);
  CHECK(std::abs(wz / n - 0.4) < bound);
}

TEST_CASE("same seed gives the same trajectory") {
  const RobotGeometry g = warthog_geometry();
  const TerrainModel t = make_terrain(terrain_preset("sand", g), g);
  std::vector<Measurement> a, b;
  std::mt19937_64 r1(77), r2(77);
  hold(SimState{}, g, t, {5.0, 12.0}, 100, r1, &a);
  hold(SimState{}, g, t, {5.0, 12.0}, 100, r2, &b);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].body == b[i].body);
    CHECK(a[i].wheels == b[i].wheels);
    CHECK(a[i].pose.x == b[i].pose.x);
  }
}

TEST_CASE("pose integration") {
  const RobotGeometry g = husky_geometry();
  const TerrainModel t = instant_perfect(g);
  std::mt19937_64 rng(6);

  SECTION("straight line at 1 m/s for 1 s") {
    const SimState s = hold(SimState{}, g, t, idd_inverse(g, {1.0, 0.0, 0.0}), 20, rng);
    CHECK_THAT(s.pose.x, WithinAbs(1.0, 1e-9));
    CHECK_THAT(s.pose.y, WithinAbs(0.0, 1e-12));
    CHECK(s.clock() == 1.0);
  }
  SECTION("constant arc matches the closed form") {
    // Midpoint heading: chord error per tick is O((w dt)^2).
    const double v = 0.8;
    const double w = 0.5;
    const SimState s = hold(SimState{}, g, t, idd_inverse(g, {v, 0.0, w}), 40, rng);
    const double T = 2.0;
    CHECK_THAT(s.pose.yaw, WithinAbs(w * T, 1e-9));
    CHECK_THAT(s.pose.x, WithinAbs(v / w * std::sin(w * T), 1e-4));
    CHECK_THAT(s.pose.y, WithinAbs(v / w * (1.0 - std::cos(w * T)), 1e-4));
  }
  SECTION("heading stays wrapped") {
    const SimState s = hold(SimState{}, g, t, idd_inverse(g, {0.0, 0.0, 2.0}), 200, rng);
    CHECK(s.pose.yaw > -std::numbers::pi);
    CHECK(s.pose.yaw <= std::numbers::pi);
    CHECK_THAT(s.pose.yaw, WithinAbs(wrap_angle(20.0), 1e-9));
  }
}

TEST_CASE("reported speeds stay near the command polygon") {
  const RobotGeometry g = warthog_geometry();
  const CommandPolygon poly = build_polygon(g);
  double vmax = 0.0;
  double wmax = 0.0;
  for (const auto& p : poly.body) {
    vmax = std::max(vmax, std::abs(p.x()));
    wmax = std::max(wmax, std::abs(p.y()));
  }
  for (const auto& name : preset_names()) {
    const TerrainModel t = make_terrain(terrain_preset(name, g), g);
    std::mt19937_64 rng(8);
    const SampleSet cmds = sample_uniform(g, poly, 30, 8);
    SimState s;
    for (const auto& c : cmds.commands) {
      std::vector<Measurement> m;
      s = hold(s, g, t, c, 40, rng, &m);
      for (const auto& x : m) {
        CHECK(std::abs(x.body.vx) <= vmax + 5.0 * kDefaultNoise);
        CHECK(std::abs(x.body.wz) <= wmax + 5.0 * kDefaultNoise);
      }
    }
  }
}

TEST_CASE("wrap_angle") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(std::numbers::pi) == std::numbers::pi);
  CHECK_THAT(wrap_angle(-std::numbers::pi), WithinAbs(std::numbers::pi, 1e-15));
  CHECK_THAT(wrap_angle(3.0 * std::numbers::pi / 2.0), WithinAbs(-std::numbers::pi / 2.0, 1e-12));
  CHECK_THAT(wrap_angle(7.0), WithinAbs(7.0 - 2.0 * std::numbers::pi, 1e-12));
}

TEST_CASE("step validates dt") {
  const RobotGeometry g = husky_geometry();
  const TerrainModel t = instant_perfect(g);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(step(SimState{}, g, t, {}, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(step(SimState{}, g, t, {}, 0.2, rng), std::invalid_argument);
}

TEST_CASE("operator check") {
  const SafeZone zone = SafeZone::from_size(20.0, 20.0);
  SimState s;

  SECTION("at rest in the middle") {
    CHECK(operator_check(s, zone, 1.0) == OperatorAction::proceed);
  }
  SECTION("heading out near the edge") {
    s.pose.x = 9.0;
    s.body.vx = 2.0;
    CHECK(operator_check(s, zone, 1.0) == OperatorAction::interrupt);
    CHECK(operator_check(s, zone, 0.4) == OperatorAction::proceed);
  }
  SECTION("near the edge but heading in") {
    s.pose.x = 9.0;
    s.body.vx = -2.0;
    CHECK(operator_check(s, zone, 1.0) == OperatorAction::proceed);
  }
  SECTION("heading is applied") {
    s.pose.y = -9.0;
    s.pose.yaw = -std::numbers::pi / 2.0;
    s.body.vx = 2.0;
    CHECK(operator_check(s, zone, 1.0) == OperatorAction::interrupt);
    s.pose.yaw = std::numbers::pi / 2.0;
    CHECK(operator_check(s, zone, 1.0) == OperatorAction::proceed);
  }
  SECTION("lateral drift counts") {
    s.pose.y = 9.5;
    s.body.vy = 1.0;
    CHECK(operator_check(s, zone, 1.0) == OperatorAction::interrupt);
  }
  SECTION("outside but coming back is left alone") {
    s.pose.x = 10.5;
    s.body.vx = -0.1;
    CHECK(operator_check(s, zone, 1.0) == OperatorAction::proceed);
  }
  SECTION("non-positive horizon") {
    CHECK_THROWS_AS(operator_check(s, zone, 0.0), std::invalid_argument);
  }
}

TEST_CASE("minimum area check") {
  const RobotGeometry w = warthog_geometry();  // 1.5 * 5 m/s * 6 s = 45 m
  CHECK(minimum_area_check(w, SafeZone::from_size(20.0, 45.0)));
  CHECK(minimum_area_check(w, SafeZone::from_size(45.0, 1.0)));
  CHECK_FALSE(minimum_area_check(w, SafeZone::from_size(20.0, 44.0)));
  CHECK_FALSE(minimum_area_check(w, SafeZone::from_size(1.0, 1.0)));
  const RobotGeometry h = husky_geometry();  // 9 m
  CHECK(minimum_area_check(h, SafeZone::from_size(9.0, 6.0)));
  CHECK_FALSE(minimum_area_check(h, SafeZone::from_size(8.9, 8.9)));
  CHECK_THROWS_AS(SafeZone::from_size(0.0, 10.0), std::invalid_argument);
}

TEST_CASE("terrain parameter validation") {
  TerrainParams p;
  p.time_constant = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = TerrainParams{};
  p.noise.linear = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = TerrainParams{};
  p.wheel_limit_left = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
