#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "drive/cli.hpp"

using namespace drive;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "drive");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("drive_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t data_rows(const std::string& log) {
  std::istringstream in(log);
  std::string line;
  bool header = false;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (header && !line.empty()) ++n;
    if (line == kLogHeader) header = true;
  }
  return n;
}

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST_CASE("run-sim writes a log to stdout") {
  const Result r = run({"run-sim", "--terrain", "perfect", "--steps", "1", "--seed", "7"});
  REQUIRE(r.code == 0);
  CHECK(data_rows(r.out) == 120);
  CHECK_THAT(r.err, ContainsSubstring("1 commands"));
  std::istringstream in(r.out);
  const DriveRun back = read_log(in);
  CHECK(back.config.seed == 7);
  CHECK(back.terrain == "perfect");
}

TEST_CASE("run-sim is deterministic for a seed") {
  const Result a = run({"run-sim", "--terrain", "sand", "--robot", "husky", "--steps", "3", "--seed", "5"});
  const Result b = run({"run-sim", "--terrain", "sand", "--robot", "husky", "--steps", "3", "--seed", "5"});
  const Result c = run({"run-sim", "--terrain", "sand", "--robot", "husky", "--steps", "3", "--seed", "6"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("argument and input errors") {
  SECTION("missing input file is named") {
    const Result r = run({"analyze", "--in", "missing.csv"});
    CHECK(r.code != 0);
    CHECK_THAT(r.err, ContainsSubstring("missing.csv"));
  }
  SECTION("unknown flag") {
    CHECK(run({"run-sim", "--frobnicate"}).code != 0);
  }
  SECTION("no subcommand") {
    CHECK(run({}).code != 0);
  }
  SECTION("unknown terrain lists presets") {
    const Result r = run({"run-sim", "--terrain", "lava", "--steps", "1"});
    CHECK(r.code != 0);
    CHECK_THAT(r.err, ContainsSubstring("asphalt"));
  }
  SECTION("zone below the minimum") {
    const Result r = run({"run-sim", "--steps", "1", "--zone", "20x44"});
    CHECK(r.code != 0);
    CHECK_THAT(r.err, ContainsSubstring("safe zone"));
  }
  SECTION("bad zone text") {
    CHECK(run({"run-sim", "--steps", "1", "--zone", "20by45"}).code != 0);
  }
  SECTION("unknown channel") {
    const fs::path dir = scratch("channel");
    const std::string log = (dir / "a.csv").string();
    REQUIRE(run({"run-sim", "--robot", "husky", "--steps", "5", "--out", log}).code == 0);
    const Result r = run({"analyze", "--in", log, "--channel", "gz"});
    CHECK(r.code != 0);
    CHECK_THAT(r.err, ContainsSubstring("gz"));
    fs::remove_all(dir);
  }
  SECTION("help exits cleanly") {
    const Result r = run({"--help"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("run-sim"));
  }
}

TEST_CASE("pipeline on ice") {
  const fs::path dir = scratch("pipeline");
  const std::string log = (dir / "ice.csv").string();
  const auto start = std::chrono::steady_clock::now();
  REQUIRE(run({"run-sim", "--terrain", "ice", "--steps", "150", "--seed", "3", "--out", log}).code == 0);
  CHECK(data_rows(slurp(log)) == 150 * 120);

  const std::string grid = (dir / "gtheta.csv").string();
  const Result a = run({"analyze", "--in", log, "--channel", "gtheta", "--out", grid});
  REQUIRE(a.code == 0);
  CHECK_THAT(a.out, ContainsSubstring("gtheta slip: n="));
  const std::string grid_text = slurp(grid);
  CHECK(grid_text.rfind("vx,wz,value,support\n", 0) == 0);

  const std::string metric = (dir / "rho.csv").string();
  REQUIRE(run({"metric", "--in", log, "--out", metric}).code == 0);
  std::istringstream rows(slurp(metric));
  std::string line;
  std::getline(rows, line);
  std::size_t n = 0;
  while (std::getline(rows, line)) {
    ++n;
    const auto c = line.find(',', line.find(',') + 1);
    const std::string value = line.substr(c + 1, line.find(',', c + 1) - c - 1);
    if (value == "nan") continue;
    const double rho = parse_double(value, "rho");
    CHECK(rho >= 0.0);
    CHECK(rho <= 1.0);
  }
  CHECK(n > 100);

  const Result risk = run({"riskmap", "--in", log, "--motion", "all"});
  REQUIRE(risk.code == 0);
  CHECK_THAT(risk.out, ContainsSubstring("ice,ice,all,150,"));

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 60.0);
  fs::remove_all(dir);
}

TEST_CASE("export commands") {
  const Result poly = run({"export-polygon", "--robot", "husky"});
  REQUIRE(poly.code == 0);
  CHECK(poly.out.rfind("frame,v1,v2\n", 0) == 0);

  const Result grid = run({"export-grid", "--terrain", "ice", "--channel", "gx", "--res", "0.5"});
  REQUIRE(grid.code == 0);
  CHECK(grid.out.rfind("vx,wz,value,support\n", 0) == 0);
  CHECK(grid.out.find("nan") == std::string::npos);
}

TEST_CASE("config files on the command line") {
  const fs::path dir = scratch("configs");
  {
    std::ofstream r(dir / "robot.cfg");
    r << "preset=husky\nmax_linear_speed=0.8\n";
    std::ofstream t(dir / "terrain.cfg");
    t << "preset=grass\nname=lawn\nnoise_std=0\n";
  }
  const Result r = run({"run-sim", "--robot", (dir / "robot.cfg").string(), "--terrain",
                        (dir / "terrain.cfg").string(), "--steps", "2"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const DriveRun back = read_log(in);
  CHECK(back.terrain == "lawn");
  CHECK(back.geometry.max_linear_speed == 0.8);
  fs::remove_all(dir);
}

TEST_CASE("installed binary") {
  const char* bin = std::getenv("DRIVE_BIN");
  if (bin == nullptr) SKIP("DRIVE_BIN not set");
  const fs::path dir = scratch("binary");
  const fs::path log = dir / "p.csv";
  const std::string cmd = shell_quote(bin) + " run-sim --terrain perfect --steps 1 --seed 7 --out " +
                          shell_quote(log.string()) + " 2>/dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(data_rows(slurp(log)) == 120);
  // Same bytes as the in-process front end.
  CHECK(slurp(log) == run({"run-sim", "--terrain", "perfect", "--steps", "1", "--seed", "7"}).out);

  const std::string bad = shell_quote(bin) + " analyze --in " +
                          shell_quote((dir / "missing.csv").string()) + " 2>" +
                          shell_quote((dir / "err.txt").string());
  CHECK(std::system(bad.c_str()) != 0);
  CHECK_THAT(slurp(dir / "err.txt"), ContainsSubstring("missing.csv"));
  fs::remove_all(dir);
}
