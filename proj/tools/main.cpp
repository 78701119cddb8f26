// Command-line front end: offline planning, full scenario simulation, and
// the obstacle-detection benchmark. Exit codes: 0 ok, 2 parse error,
// 3 validation error, 4 planning failure, 5 mid-mission failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "quadplan/los.hpp"
#include "quadplan/scenario_io.hpp"

namespace {

using namespace quadplan;

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitPlanning = 4;
constexpr int kExitMission = 5;

int exit_code_for(const Error& e) {
  switch (e.code) {
    case ErrorCode::invalid_input: return kExitValidation;
    case ErrorCode::planning_failure:
    case ErrorCode::sampling_exhausted:
    case ErrorCode::singular: return kExitPlanning;
    case ErrorCode::mission_failure:
    case ErrorCode::infeasible: return kExitMission;
  }
  return kExitMission;
}

void report(const Error& e) {
  std::cerr << "{\"error\":\"" << e.message << "\"}" << std::endl;
}

bool write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "{\"error\":\"cannot write " << path.string() << "\"}" << std::endl;
    return false;
  }
  out << content;
  return true;
}

std::optional<Scenario> load(const std::string& path, std::optional<std::uint64_t> seed,
                             int& exit_code) {
  auto loaded = load_scenario_file(path);
  if (!loaded) {
    report(loaded.error());
    exit_code = kExitParse;
    return std::nullopt;
  }
  Scenario s = std::move(loaded).value();
  if (seed) s.seed = *seed;
  if (auto v = validate_scenario(s); !v) {
    report(v.error());
    exit_code = kExitValidation;
    return std::nullopt;
  }
  return s;
}

int cmd_plan(const std::string& scenario_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed) {
  int code = kExitOk;
  const auto s = load(scenario_path, seed, code);
  if (!s) return code;

  // The offline block plans against what the first scan shows.
  Rng root(s->seed);
  Rng plan_rng = root.fork(1);
  Rng scan_rng = root.fork(2).fork(0);
  std::vector<Cuboid> initial;
  for (const auto& o : s->obstacles)
    if (o.appears_at <= 0.0) initial.push_back(o.box);
  const auto cloud = render_depth_scan(ScanPose{s->start_position, s->start_yaw}, initial,
                                       s->camera, scan_rng);
  const auto clusters = cluster_points(cloud, s->detection.cluster_radius,
                                       s->detection.min_cluster_pts);
  auto det = detect_obstacles_8corner({}, clusters, s->detection.delta);
  std::vector<Cuboid> known = std::move(det.known);
  known.insert(known.end(), det.new_obstacles.begin(), det.new_obstacles.end());

  const auto inflated = inflate_all(known, s->planner.inflation_margin);
  auto tree = build_tree_seeded(s->start_position, s->target_position, inflated, s->space,
                                s->planner.rrt, {}, plan_rng);
  if (!tree) {
    report(tree.error());
    return exit_code_for(tree.error());
  }
  const auto pre_los = tree.value().waypoints;
  const auto post_los = los_prune(pre_los, inflated);

  auto ctx = plan_offline(s->start_position, s->start_yaw, s->target_position, s->target_yaw,
                          known, s->space, s->planner, plan_rng, 0.0);
  if (!ctx) {
    report(ctx.error());
    return exit_code_for(ctx.error());
  }

  std::filesystem::create_directories(out_dir);
  if (!write_file(std::filesystem::path(out_dir) / "plan.json",
                  plan_to_json(pre_los, post_los, ctx.value().path, ctx.value().trajectory)))
    return kExitMission;
  if (!write_file(std::filesystem::path(out_dir) / "trajectory.csv",
                  trajectory_table_csv(ctx.value().trajectory, s->sim_step)))
    return kExitMission;
  std::cout << "plan: " << pre_los.size() << " waypoints before pruning, " << post_los.size()
            << " after; trajectory ends at "
            << ctx.value().trajectory.end_time() << " s" << std::endl;
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  int code = kExitOk;
  const auto s = load(scenario_path, seed, code);
  if (!s) return code;

  auto sim = run_scenario(*s);
  if (!sim) {
    report(sim.error());
    return exit_code_for(sim.error());
  }

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  if (!write_file(dir / "trace.csv", trace_to_csv(sim.value().trace))) return kExitMission;
  if (!write_file(dir / "events.jsonl", events_to_jsonl(sim.value().events)))
    return kExitMission;
  if (!write_file(dir / "summary.json", summary_to_json(sim.value().summary)))
    return kExitMission;
  std::cout << summary_to_json(sim.value().summary);
  return kExitOk;
}

int cmd_bench_detect(const std::string& scenario_path, int frames, int trials,
                     const std::string& out_path, std::optional<std::uint64_t> seed) {
  int code = kExitOk;
  const auto s = load(scenario_path, seed, code);
  if (!s) return code;
  if (frames < 1 || trials < 1) {
    report(Error{ErrorCode::invalid_input, "bench-detect: frames and trials must be >= 1"});
    return kExitValidation;
  }

  // Frames rendered along the straight start-target line, heading forward.
  std::vector<Cuboid> boxes;
  for (const auto& o : s->obstacles) boxes.push_back(o.box);
  Rng root(s->seed);
  Rng render_rng = root.fork(3);
  const Vec3 dir = s->target_position - s->start_position;
  const double heading = std::atan2(dir.y(), dir.x());
  std::vector<PointCloud> sequence;
  for (int f = 0; f < frames; ++f) {
    const double u = frames == 1 ? 0.0 : static_cast<double>(f) / (frames - 1);
    const ScanPose pose{s->start_position + 0.5 * u * dir, heading};
    sequence.push_back(render_depth_scan(pose, boxes, s->camera, render_rng));
  }

  Rng bench_rng = root.fork(4);
  const auto result = benchmark_detectors(sequence, s->detection, trials, bench_rng, 0.005);

  std::ostringstream os;
  os.precision(17);
  os << "method,mean_ms,std_ms,frames,trials\n";
  os << "8corner," << result.corner8.mean_ms << "," << result.corner8.std_ms << ","
     << result.frames << "," << result.trials << "\n";
  os << "pointcloud_knn," << result.baseline.mean_ms << "," << result.baseline.std_ms << ","
     << result.frames << "," << result.trials << "\n";
  if (!write_file(out_path, os.str())) return kExitMission;
  std::cout << os.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step online trajectory planner for a quadcopter"};
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  std::optional<std::uint64_t> seed;
  int frames = 81, trials = 20;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    cmd->add_option("--seed", seed, "Override the scenario seed");
  };

  auto* plan = app.add_subcommand("plan", "Run the offline planning block");
  add_common(plan);
  plan->add_option("--out", out_path, "Output directory")->required();

  auto* simulate = app.add_subcommand("simulate", "Run the full scenario");
  add_common(simulate);
  simulate->add_option("--out", out_path, "Output directory")->required();

  auto* bench = app.add_subcommand("bench-detect", "Benchmark the obstacle detectors");
  add_common(bench);
  bench->add_option("--out", out_path, "Output statistics CSV")->required();
  bench->add_option("--frames", frames, "Frame count");
  bench->add_option("--trials", trials, "Monte-Carlo trial count");

  CLI11_PARSE(app, argc, argv);

  if (plan->parsed()) return cmd_plan(scenario_path, out_path, seed);
  if (simulate->parsed()) return cmd_simulate(scenario_path, out_path, seed);
  return cmd_bench_detect(scenario_path, frames, trials, out_path, seed);
}
