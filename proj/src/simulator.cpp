#include "quadplan/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace quadplan {

namespace {

std::vector<Cuboid> obstacles_present_at(const Scenario& s, double t) {
  std::vector<Cuboid> out;
  for (const auto& o : s.obstacles)
    if (o.appears_at <= t + 1e-12) out.push_back(o.box);
  return out;
}

}  // namespace

Status validate_scenario(const Scenario& s) {
  auto fail = [](const std::string& msg) { return Error{ErrorCode::invalid_input, msg}; };

  if (!s.space.bounds.valid()) return fail("scenario: flight space min exceeds max");
  for (const auto& o : s.obstacles) {
    if (!o.box.valid()) return fail("scenario: obstacle min exceeds max");
    if (o.appears_at < 0.0) return fail("scenario: negative obstacle appearance time");
  }
  if (!s.space.contains(s.start_position)) return fail("scenario: start outside flight space");
  if (!s.space.contains(s.target_position)) return fail("scenario: target outside flight space");
  if (!s.camera.valid()) return fail("scenario: invalid camera model");
  if (!s.quad.valid()) return fail("scenario: invalid quad model");
  if (s.sensing_period <= 0.0 || s.sim_step <= 0.0) return fail("scenario: non-positive rates");
  if (s.planner.inflation_margin < 0.0) return fail("scenario: negative inflation margin");
  if (!s.planner.rrt.valid()) return fail("scenario: invalid tree parameters");
  if (s.detection.delta <= 0.0 || s.detection.cluster_radius <= 0.0 || s.detection.knn < 1)
    return fail("scenario: invalid detection parameters");

  const auto initial = inflate_all(obstacles_present_at(s, 0.0), s.planner.inflation_margin);
  for (const auto& box : initial)
    if (box.contains(s.start_position)) return fail("scenario: start inside an inflated obstacle");
  // The target has to stay clear of every obstacle it may ever face.
  for (const auto& o : s.obstacles)
    if (inflate(o.box, s.planner.inflation_margin).contains(s.target_position))
      return fail("scenario: target inside an inflated obstacle");
  return ok();
}

Result<SimOutput> run_scenario(const Scenario& s) {
  if (auto v = validate_scenario(s); !v) return v.error();

  Rng root_rng(s.seed);
  Rng plan_rng = root_rng.fork(1);
  Rng scan_rng_base = root_rng.fork(2);

  SimOutput out;
  std::vector<Cuboid> known;
  long scan_counter = 0;

  auto sense = [&](const ScanPose& pose, double t) {
    Rng scan_rng = scan_rng_base.fork(scan_counter++);
    const PointCloud cloud =
        render_depth_scan(pose, obstacles_present_at(s, t), s.camera, scan_rng);
    const auto clusters =
        cluster_points(cloud, s.detection.cluster_radius, s.detection.min_cluster_pts);
    auto det = detect_obstacles_8corner(std::move(known), clusters, s.detection.delta);
    known = std::move(det.known);
    known.insert(known.end(), det.new_obstacles.begin(), det.new_obstacles.end());
    return det.new_obstacles;
  };

  // Offline block: scan from the start pose, then plan against what was seen.
  auto first_new = sense(ScanPose{s.start_position, s.start_yaw}, 0.0);
  out.events.push_back({0.0, EventTag::scan, static_cast<int>(first_new.size()),
                        static_cast<int>(known.size()), 0.0, "initial scan"});

  auto planned = plan_offline(s.start_position, s.start_yaw, s.target_position, s.target_yaw,
                              known, s.space, s.planner, plan_rng, 0.0);
  if (!planned)
    return Error{planned.error().code, "t=0: " + planned.error().message};
  PlanContext ctx = std::move(planned).value();

  double first_replan_time = -1.0;
  int replan_count = 0;

  auto record = [&](double t, EventTag tag) -> Status {
    TraceRecord rec;
    rec.t = t;
    rec.flat = flat_sample_at(ctx.trajectory, t);
    auto mapped = flat_to_state_input(rec.flat, s.quad);
    if (!mapped)
      return Error{ErrorCode::mission_failure,
                   "t=" + std::to_string(t) + ": " + mapped.error().message};
    rec.state = mapped.value().first;
    rec.input = mapped.value().second;
    // Demanded forces, uncensored: ideal tracking can momentarily ask a
    // rotor to pull during the sharp post-replan yaw maneuver. The tracking
    // controller that would saturate this is out of scope.
    rec.rotor_forces = rotor_forces_unchecked(rec.input, s.quad);
    rec.tag = tag;
    out.trace.push_back(std::move(rec));

    const Vec3 p = out.trace.back().flat.value.head<3>();
    for (const auto& box : obstacles_present_at(s, t))
      out.summary.min_clearance = std::min(out.summary.min_clearance,
                                           point_to_cuboid_distance(p, box));
    if (first_replan_time >= 0.0)
      out.summary.peak_yaw_rate_post_replan =
          std::max(out.summary.peak_yaw_rate_post_replan, std::abs(out.trace.back().flat.d1[3]));
    return ok();
  };

  long step = 0;
  double next_scan = s.sensing_period;
  while (true) {
    const double t = static_cast<double>(step) * s.sim_step;
    const double t_end = ctx.trajectory.end_time();
    if (t > s.max_duration)
      return Error{ErrorCode::mission_failure,
                   "t=" + std::to_string(t) + ": mission exceeded the duration watchdog"};

    EventTag tag = EventTag::none;

    if (t >= next_scan - 1e-9 && t < t_end) {
      const ScanPose pose{ctx.trajectory.position(t), ctx.trajectory.yaw_value(t)};
      const auto fresh = sense(pose, t);
      tag = EventTag::scan;
      out.events.push_back({t, EventTag::scan, static_cast<int>(fresh.size()),
                            static_cast<int>(known.size()), 0.0, ""});
      if (!fresh.empty()) {
        tag = EventTag::detection;
        out.events.push_back({t, EventTag::detection, static_cast<int>(fresh.size()),
                              static_cast<int>(known.size()), 0.0, ""});

        const auto inflated = inflate_all(known, s.planner.inflation_margin);
        if (!trajectory_feasible(ctx.trajectory, inflated, 0.01, t).feasible) {
          ctx.obstacles = known;
          const auto wall0 = std::chrono::steady_clock::now();
          auto re = replan(ctx, t, fresh, plan_rng);
          const auto wall1 = std::chrono::steady_clock::now();
          if (!re)
            return Error{ErrorCode::mission_failure,
                         "t=" + std::to_string(t) + ": " + re.error().message};

          ReplanRecord rr;
          rr.t = t;
          rr.position_at_replan = ctx.trajectory.position(t);
          rr.old_path = ctx.path;
          rr.old_knots = ctx.trajectory.x.knots();
          rr.new_path = re.value().path;
          rr.new_obstacles = fresh;
          rr.known_obstacles = known;
          rr.used_fallback = re.value().last_repair_was_fallback;
          const PiecewiseTrajectory* old_out[4] = {&ctx.trajectory.x, &ctx.trajectory.y,
                                                   &ctx.trajectory.z, &ctx.trajectory.yaw};
          const PiecewiseTrajectory* new_out[4] = {&re.value().trajectory.x,
                                                   &re.value().trajectory.y,
                                                   &re.value().trajectory.z,
                                                   &re.value().trajectory.yaw};
          for (int k = 0; k <= 2; ++k)
            for (int axis = 0; axis < 4; ++axis)
              rr.handover_jump[k] =
                  std::max(rr.handover_jump[k],
                           std::abs(new_out[axis]->evaluate(t, k) - old_out[axis]->evaluate(t, k)));
          out.replans.push_back(std::move(rr));

          ctx = std::move(re).value();
          tag = EventTag::replan;
          ++replan_count;
          if (first_replan_time < 0.0) first_replan_time = t;
          out.events.push_back(
              {t, EventTag::replan, static_cast<int>(fresh.size()),
               static_cast<int>(known.size()),
               std::chrono::duration<double, std::milli>(wall1 - wall0).count(), ""});
        } else {
          ctx.obstacles = known;
        }
      }
      next_scan += s.sensing_period;
    }

    if (t >= ctx.trajectory.end_time() - 1e-9) {
      if (auto st = record(ctx.trajectory.end_time(), tag); !st) return st.error();
      out.summary.completed = true;
      out.summary.mission_duration = ctx.trajectory.end_time();
      break;
    }
    if (auto st = record(t, tag); !st) return st.error();
    ++step;
  }

  out.summary.replan_count = replan_count;
  out.summary.final_position = out.trace.back().flat.value.head<3>();
  return out;
}

}  // namespace quadplan
