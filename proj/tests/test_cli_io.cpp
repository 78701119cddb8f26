#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quadplan/scenario_io.hpp"

using namespace quadplan;

namespace {

std::string scenario_path(const std::string& name) {
  return std::string(QUADPLAN_SCENARIO_DIR) + "/" + name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QUADPLAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("quadplan_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

bool scenarios_equal(const Scenario& a, const Scenario& b) {
  return serialize_scenario(a) == serialize_scenario(b);
}

}  // namespace

TEST_CASE("scenario round trip: serialize then parse is the identity") {
  auto loaded = load_scenario_file(scenario_path("fig4_sim.json"));
  REQUIRE(loaded.has_value());
  const Scenario& s = loaded.value();

  CHECK(s.seed == 2024);
  CHECK(s.obstacles.size() == 4);
  CHECK(s.obstacles[3].appears_at == 5.66);
  CHECK(s.planner.rrt.steer_length == 0.8);
  CHECK(s.planner.position_spline.continuity == 4);
  CHECK(s.planner.yaw_spline.weights[1] == 1.0);
  CHECK(s.detection.delta == 0.3);

  const std::string text = serialize_scenario(s);
  const auto reparsed = parse_scenario(text);
  REQUIRE(reparsed.has_value());
  CHECK(scenarios_equal(s, reparsed.value()));
  CHECK(serialize_scenario(reparsed.value()) == text);
}

TEST_CASE("scenario parse failures are reported, not thrown") {
  CHECK_FALSE(parse_scenario("{ not json").has_value());
  CHECK_FALSE(parse_scenario("{}").has_value());  // missing required blocks
  CHECK_FALSE(parse_scenario(R"({"space": {"min_m": [0, 0]}})").has_value());
  CHECK_FALSE(load_scenario_file("/nonexistent/file.json").has_value());
}

TEST_CASE("full-precision round trip of awkward doubles") {
  auto loaded = load_scenario_file(scenario_path("empty_space.json"));
  REQUIRE(loaded.has_value());
  Scenario s = loaded.value();
  s.start_yaw = 0.1 + 0.2;  // not exactly 0.3
  s.planner.inflation_margin = 1.0 / 3.0;
  s.target_position = Vec3(1e-13, 2.0000000000000004, 3);
  const auto back = parse_scenario(serialize_scenario(s));
  REQUIRE(back.has_value());
  CHECK(back.value().start_yaw == s.start_yaw);
  CHECK(back.value().planner.inflation_margin == s.planner.inflation_margin);
  CHECK(back.value().target_position == s.target_position);
}

TEST_CASE("cli plan: empty space gives exactly two post-LOS waypoints") {
  const auto dir = temp_dir("plan_empty");
  const int code =
      run_cli("plan --scenario " + scenario_path("empty_space.json") + " --out " + dir.string());
  CHECK(code == 0);
  const std::string plan = slurp(dir / "plan.json");
  // Count post-LOS waypoint rows.
  const auto pos = plan.find("\"post_los_waypoints_m\"");
  REQUIRE(pos != std::string::npos);
  const auto open = plan.find('[', pos);
  int depth = 0, rows = 0;
  std::size_t i = open;
  do {
    if (plan[i] == '[') {
      ++depth;
      if (depth == 2) ++rows;
    } else if (plan[i] == ']') {
      --depth;
    }
    ++i;
  } while (depth > 0 && i < plan.size());
  CHECK(rows == 2);
  CHECK(std::filesystem::exists(dir / "trajectory.csv"));
}

TEST_CASE("cli plan on the cluttered scenario: pruning shortens the path") {
  const auto dir = temp_dir("plan_fig4");
  const int code =
      run_cli("plan --scenario " + scenario_path("fig4_sim.json") + " --out " + dir.string());
  REQUIRE(code == 0);
  const std::string plan = slurp(dir / "plan.json");

  auto count_rows = [&](const std::string& key) {
    const auto pos = plan.find(key);
    REQUIRE(pos != std::string::npos);
    const auto open = plan.find('[', pos);
    int depth = 0, rows = 0;
    std::size_t i = open;
    do {
      if (plan[i] == '[') {
        ++depth;
        if (depth == 2) ++rows;
      } else if (plan[i] == ']') {
        --depth;
      }
      ++i;
    } while (depth > 0 && i < plan.size());
    return rows;
  };
  const int pre = count_rows("\"pre_los_waypoints_m\"");
  const int post = count_rows("\"post_los_waypoints_m\"");
  CHECK(post < pre);
  CHECK(post >= 2);
}

TEST_CASE("cli plan: start inside an obstacle exits with the validation code") {
  const auto dir = temp_dir("plan_bad");
  const auto bad = dir / "bad.json";
  {
    auto loaded = load_scenario_file(scenario_path("empty_space.json"));
    REQUIRE(loaded.has_value());
    Scenario s = loaded.value();
    s.obstacles.push_back({Cuboid{Vec3(0.5, 0.5, 0.5), Vec3(2, 2, 2)}, 0.0});
    std::ofstream(bad) << serialize_scenario(s);
  }
  CHECK(run_cli("plan --scenario " + bad.string() + " --out " + dir.string()) == 3);
}

TEST_CASE("scenario validation rejects bad geometry and parameters") {
  auto loaded = load_scenario_file(scenario_path("empty_space.json"));
  REQUIRE(loaded.has_value());
  const Scenario base = loaded.value();
  CHECK(validate_scenario(base).has_value());

  Scenario outside = base;
  outside.start_position = Vec3(-1, 0, 0);
  CHECK_FALSE(validate_scenario(outside).has_value());

  Scenario bad_space = base;
  bad_space.space.bounds = Cuboid{Vec3(5, 5, 5), Vec3(0, 0, 0)};
  CHECK_FALSE(validate_scenario(bad_space).has_value());

  Scenario bad_rate = base;
  bad_rate.sim_step = 0.0;
  CHECK_FALSE(validate_scenario(bad_rate).has_value());

  Scenario target_blocked = base;
  // Appearing later still disqualifies the target's resting spot.
  target_blocked.obstacles.push_back(
      {Cuboid{base.target_position - Vec3(0.2, 0.2, 0.2), base.target_position + Vec3(0.2, 0.2, 0.2)},
       60.0});
  CHECK_FALSE(validate_scenario(target_blocked).has_value());
}

TEST_CASE("cli simulate: a wall sealing off the target exits with the mission code") {
  const auto dir = temp_dir("sim_fail");
  const auto bad = dir / "walled_in.json";
  {
    auto loaded = load_scenario_file(scenario_path("empty_space.json"));
    REQUIRE(loaded.has_value());
    Scenario s = loaded.value();
    // A wall across the whole room appears once airborne; the target stays
    // outside every box (validation passes) but becomes unreachable.
    s.obstacles.push_back({Cuboid{Vec3(7.0, 0, 0), Vec3(7.5, 10, 3)}, 2.0});
    std::ofstream(bad) << serialize_scenario(s);
  }
  const int code = run_cli("simulate --scenario " + bad.string() + " --out " + dir.string());
  CHECK(code == 5);
}

TEST_CASE("cli: malformed scenario exits with the parse code") {
  const auto dir = temp_dir("parse_bad");
  const auto bad = dir / "broken.json";
  std::ofstream(bad) << "{ definitely not json";
  CHECK(run_cli("plan --scenario " + bad.string() + " --out " + dir.string()) == 2);
  CHECK(run_cli("simulate --scenario " + bad.string() + " --out " + dir.string()) == 2);
}

TEST_CASE("cli simulate: summary exists and reruns are byte-identical") {
  const auto dir1 = temp_dir("sim_a");
  const auto dir2 = temp_dir("sim_b");
  const std::string scn = scenario_path("empty_space.json");
  REQUIRE(run_cli("simulate --scenario " + scn + " --out " + dir1.string()) == 0);
  REQUIRE(run_cli("simulate --scenario " + scn + " --out " + dir2.string()) == 0);
  CHECK(slurp(dir1 / "trace.csv") == slurp(dir2 / "trace.csv"));

  const std::string summary = slurp(dir1 / "summary.json");
  CHECK(summary.find("\"replan_count\": 0") != std::string::npos);
  CHECK(summary.find("\"min_clearance_m\": \"inf\"") != std::string::npos);

  // In empty space every seed prunes to the same two waypoints, so the seed
  // must show up in a scenario where the tree shape matters.
  const auto dir3 = temp_dir("sim_c");
  const auto dir4 = temp_dir("sim_d");
  const std::string fig4 = scenario_path("fig4_sim.json");
  REQUIRE(run_cli("simulate --scenario " + fig4 + " --out " + dir3.string()) == 0);
  REQUIRE(run_cli("simulate --scenario " + fig4 + " --seed 123 --out " + dir4.string()) == 0);
  CHECK(slurp(dir3 / "trace.csv") != slurp(dir4 / "trace.csv"));
}

TEST_CASE("cli bench-detect: one frame and one trial produce the two-row table") {
  const auto dir = temp_dir("bench");
  const auto out = dir / "stats.csv";
  const int code = run_cli("bench-detect --scenario " + scenario_path("fig4_sim.json") +
                           " --frames 1 --trials 1 --out " + out.string());
  CHECK(code == 0);
  const std::string table = slurp(out);
  CHECK(table.find("method,mean_ms,std_ms,frames,trials") == 0);
  CHECK(table.find("8corner,") != std::string::npos);
  CHECK(table.find("pointcloud_knn,") != std::string::npos);
  int lines = 0;
  for (char c : table)
    if (c == '\n') ++lines;
  CHECK(lines == 3);
}

TEST_CASE("event log serialization carries one record per line") {
  std::vector<SimEvent> events{{0.0, EventTag::scan, 2, 2, 0.0, "initial scan"},
                               {1.0, EventTag::detection, 1, 3, 0.0, ""},
                               {1.0, EventTag::replan, 1, 3, 12.5, ""}};
  const std::string log = events_to_jsonl(events);
  int lines = 0;
  for (char c : log)
    if (c == '\n') ++lines;
  CHECK(lines == 3);
  CHECK(log.find("\"type\":\"scan\"") != std::string::npos);
  CHECK(log.find("\"type\":\"detection\"") != std::string::npos);
  CHECK(log.find("\"wall_ms\":12.5") != std::string::npos);
}
