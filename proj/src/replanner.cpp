#include "quadplan/replanner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "quadplan/los.hpp"

namespace quadplan {

FeasibilityReport trajectory_feasible(const FlatTrajectory& traj,
                                      const std::vector<Cuboid>& inflated_obstacles, double dt,
                                      double from_time) {
  if (dt <= 0.0) throw std::invalid_argument("trajectory_feasible: dt must be positive");
  const double t_end = traj.end_time();
  const double t0 = std::max(from_time, traj.start_time());

  auto hit = [&](const Vec3& p) {
    for (const auto& box : inflated_obstacles)
      if (box.contains(p)) return true;
    return false;
  };

  long steps = static_cast<long>(std::floor((t_end - t0) / dt));
  for (long i = 0; i <= steps; ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    if (hit(traj.position(t))) return {false, t};
  }
  if (t0 + static_cast<double>(steps) * dt < t_end - 1e-12 && hit(traj.position(t_end)))
    return {false, t_end};
  return {true, 0.0};
}

namespace {

// Yaw waypoints and heuristic times recomputed for an edited position list,
// keeping the caller-owned endpoint headings.
FlatPath rebuild_flat_path(std::vector<Vec3> positions, double psi_start, double psi_target,
                           const SplineConfig& position_config) {
  FlatPath out;
  out.yaws = yaw_waypoints(positions, psi_start, psi_target);
  out.segment_times = segment_times(positions, out.yaws, position_config);
  out.positions = std::move(positions);
  return out;
}

}  // namespace

FlatPath bisect_first_segments(const FlatPath& path, const SplineConfig& position_config) {
  if (path.waypoint_count() < 3) return path;

  std::vector<Vec3> positions;
  positions.reserve(path.positions.size() + 2);
  positions.push_back(path.positions[0]);
  positions.push_back(0.5 * (path.positions[0] + path.positions[1]));
  positions.push_back(path.positions[1]);
  positions.push_back(0.5 * (path.positions[1] + path.positions[2]));
  for (std::size_t i = 2; i < path.positions.size(); ++i) positions.push_back(path.positions[i]);

  return rebuild_flat_path(std::move(positions), path.yaws.front(), path.yaws.back(),
                           position_config);
}

namespace {

struct FlatBoundaries {
  std::array<BoundaryState, 4> start;
  std::array<BoundaryState, 4> end;
};

Result<FlatTrajectory> solve_four_outputs(const FlatPath& path, const FlatBoundaries& bounds,
                                          const PlannerConfig& config, double t0) {
  const int m = path.waypoint_count();
  std::array<std::vector<double>, 4> waypoints;
  for (int i = 0; i < m; ++i) {
    waypoints[0].push_back(path.positions[i].x());
    waypoints[1].push_back(path.positions[i].y());
    waypoints[2].push_back(path.positions[i].z());
    waypoints[3].push_back(path.yaws[i]);
  }

  std::array<PiecewiseTrajectory, 4> solved;
  for (int axis = 0; axis < 4; ++axis) {
    const SplineConfig& cfg = axis < 3 ? config.position_spline : config.yaw_spline;
    auto sol = optimize_spline(waypoints[axis], path.segment_times, bounds.start[axis],
                               bounds.end[axis], cfg, t0);
    if (!sol) return sol.error();
    solved[axis] = std::move(sol).value().trajectory;
  }
  return FlatTrajectory{std::move(solved[0]), std::move(solved[1]), std::move(solved[2]),
                        std::move(solved[3])};
}

FlatBoundaries rest_boundaries(const FlatPath& path, const PlannerConfig& config) {
  const int segments = path.waypoint_count() - 1;
  const int pos_order = max_boundary_order(config.position_spline.order,
                                           config.position_spline.continuity, segments);
  const int yaw_order =
      max_boundary_order(config.yaw_spline.order, config.yaw_spline.continuity, segments);
  FlatBoundaries b{};
  for (int axis = 0; axis < 3; ++axis) {
    b.start[axis] = BoundaryState::rest(path.positions.front()[axis], pos_order);
    b.end[axis] = BoundaryState::rest(path.positions.back()[axis], pos_order);
  }
  b.start[3] = BoundaryState::rest(path.yaws.front(), yaw_order);
  b.end[3] = BoundaryState::rest(path.yaws.back(), yaw_order);
  return b;
}

// Boundary pins read from a flying trajectory at the replan instant so the
// handover is continuous.
FlatBoundaries continuation_boundaries(const FlatTrajectory& old_traj, double t, const FlatPath& path,
                                       const PlannerConfig& config) {
  const int segments = path.waypoint_count() - 1;
  const int pos_order = max_boundary_order(config.position_spline.order,
                                           config.position_spline.continuity, segments);
  const int yaw_order =
      max_boundary_order(config.yaw_spline.order, config.yaw_spline.continuity, segments);

  FlatBoundaries b{};
  const PiecewiseTrajectory* outputs[4] = {&old_traj.x, &old_traj.y, &old_traj.z, &old_traj.yaw};
  for (int axis = 0; axis < 4; ++axis) {
    const int order = axis < 3 ? pos_order : yaw_order;
    BoundaryState s;
    s.derivatives = Eigen::VectorXd::Zero(order + 1);
    for (int k = 0; k <= order; ++k) s.derivatives[k] = outputs[axis]->evaluate(t, k);
    b.start[axis] = std::move(s);
  }
  for (int axis = 0; axis < 3; ++axis)
    b.end[axis] = BoundaryState::rest(path.positions.back()[axis], pos_order);
  b.end[3] = BoundaryState::rest(path.yaws.back(), yaw_order);
  return b;
}

constexpr double kFeasibilityDt = 0.01;

// Solve the QPs, then pull the polynomial onto the collision-free edges by
// inserting the blocked segment's midpoint until every sample clears the
// inflated obstacles. The split halves the segment's duration instead of
// re-running the time heuristic: re-flooring ever shorter segments at T_min
// would make them time-rich and let the polynomial wander further.
Result<std::pair<FlatPath, FlatTrajectory>> solve_feasible(
    FlatPath path, const FlatTrajectory* continuity_source, double t0,
    const std::vector<Cuboid>& inflated, const PlannerConfig& config) {
  constexpr int kMaxRefinements = 24;
  for (int pass = 0;; ++pass) {
    const FlatBoundaries bounds = continuity_source
                                      ? continuation_boundaries(*continuity_source, t0, path, config)
                                      : rest_boundaries(path, config);
    auto traj = solve_four_outputs(path, bounds, config, t0);
    if (!traj) return traj.error();

    const auto report = trajectory_feasible(traj.value(), inflated, kFeasibilityDt, t0);
    if (report.feasible) return std::make_pair(std::move(path), std::move(traj).value());
    if (pass >= kMaxRefinements)
      return Error{ErrorCode::planning_failure,
                   "trajectory refinement failed to clear obstacles"};

    // Locate the colliding segment and add its midpoint as a support point.
    const auto& knots = traj.value().x.knots();
    int seg = static_cast<int>(std::upper_bound(knots.begin(), knots.end(),
                                                report.first_collision_time) -
                               knots.begin()) - 1;
    seg = std::clamp(seg, 0, static_cast<int>(path.positions.size()) - 2);

    // Pinning onto an edge that itself collides cannot converge; the caller
    // has to reroute that stretch instead.
    if (!segment_collision_free(path.positions[seg], path.positions[seg + 1], inflated))
      return Error{ErrorCode::planning_failure,
                   "trajectory refinement hit a colliding path edge"};
    // Sub-centisecond segments would erode the joint conditioning of the QP
    // long before they could still help.
    if (path.segment_times[seg] < 0.04)
      return Error{ErrorCode::planning_failure,
                   "trajectory refinement exhausted the segment resolution"};

    std::vector<Vec3> positions = path.positions;
    positions.insert(positions.begin() + seg + 1,
                     0.5 * (positions[seg] + positions[seg + 1]));
    std::vector<double> times = path.segment_times;
    const double half = 0.5 * times[seg];
    times[seg] = half;
    times.insert(times.begin() + seg + 1, half);

    path.yaws = yaw_waypoints(positions, path.yaws.front(), path.yaws.back());
    path.positions = std::move(positions);
    path.segment_times = std::move(times);
  }
}

}  // namespace

Result<PlanContext> plan_offline(const Vec3& start, double start_yaw, const Vec3& target,
                                 double target_yaw, const std::vector<Cuboid>& known_obstacles,
                                 const FlightSpace& space, const PlannerConfig& config, Rng& rng,
                                 double t0) {
  const std::vector<Cuboid> inflated = inflate_all(known_obstacles, config.inflation_margin);

  auto plan = build_tree_seeded(start, target, inflated, space, config.rrt, {}, rng);
  if (!plan) return plan.error();

  const std::vector<Vec3> pruned = los_prune(plan.value().waypoints, inflated);
  FlatPath path = rebuild_flat_path(pruned, start_yaw, target_yaw, config.position_spline);

  auto solved = solve_feasible(std::move(path), nullptr, t0, inflated, config);
  if (!solved) return solved.error();

  PlanContext ctx;
  ctx.path = std::move(solved.value().first);
  ctx.trajectory = std::move(solved.value().second);
  ctx.tree = std::move(plan).value().tree;
  ctx.obstacles = known_obstacles;
  ctx.space = space;
  ctx.config = config;
  ctx.target_yaw = target_yaw;
  return ctx;
}

namespace {

double point_to_polyline_distance(const Vec3& p, const std::vector<Vec3>& line, int lo, int hi) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = lo; i < hi; ++i) {
    const Vec3 a = line[i], d = line[i + 1] - line[i];
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + t * d)).norm());
  }
  return best;
}

struct BlockedStretch {
  int first_valid_before;  // index into the remaining waypoint list
  int first_valid_after;
};

// The minimal contiguous run of waypoints/edges occupied by the boxes.
std::optional<BlockedStretch> find_blocked_stretch(const std::vector<Vec3>& remaining,
                                                   const std::vector<Cuboid>& boxes) {
  const int m = static_cast<int>(remaining.size());
  auto node_bad = [&](int i) {
    for (const auto& b : boxes)
      if (b.contains(remaining[i])) return true;
    return false;
  };
  auto edge_bad = [&](int i) {
    return !segment_collision_free(remaining[i], remaining[i + 1], boxes);
  };

  // Unit 2i is waypoint i, unit 2i+1 the edge leaving it; a waypoint inside a
  // box makes its edges collide too, so runs are contiguous in units.
  int first = -1, last = -1;
  const int units = 2 * m - 1;
  for (int u = 0; u < units; ++u) {
    const bool bad = (u % 2 == 0) ? node_bad(u / 2) : edge_bad(u / 2);
    if (bad && first < 0) first = u;
    if (first >= 0) {
      if (bad)
        last = u;
      else
        break;
    }
  }
  if (first < 0) return std::nullopt;

  BlockedStretch s;
  s.first_valid_before = (first % 2 == 0) ? first / 2 - 1 : first / 2;
  s.first_valid_after = (last % 2 == 0) ? last / 2 + 1 : last / 2 + 1;
  return s;
}

}  // namespace

Result<PlanContext> replan(const PlanContext& ctx, double current_time,
                           const std::vector<Cuboid>& new_obstacles, Rng& rng) {
  const double margin = ctx.config.inflation_margin;
  const std::vector<Cuboid> inflated_all = inflate_all(ctx.obstacles, margin);
  const std::vector<Cuboid> inflated_new = inflate_all(new_obstacles, margin);

  if (current_time < ctx.trajectory.start_time() - 1e-9 ||
      current_time > ctx.trajectory.end_time() + 1e-9)
    return Error{ErrorCode::invalid_input, "replan: current_time outside trajectory span"};

  const Vec3 current_pos = ctx.trajectory.position(current_time);
  const double current_yaw = ctx.trajectory.yaw_value(current_time);
  for (const auto& box : inflated_all)
    if (box.contains(current_pos))
      return Error{ErrorCode::mission_failure,
                   "replan: current position lies inside an inflated obstacle"};

  // Remaining waypoints: the current flat position plus everything not yet
  // passed along the old path.
  const auto& knots = ctx.trajectory.x.knots();
  std::vector<Vec3> remaining{current_pos};
  for (std::size_t i = 0; i < ctx.path.positions.size(); ++i)
    if (knots[i] > current_time + 1e-9) remaining.push_back(ctx.path.positions[i]);
  if (remaining.size() < 2) remaining.push_back(ctx.path.positions.back());

  // Repair every stretch occupied by the new obstacles, first one first.
  // Boxes also grow between replans as scans merge noisy re-detections, so a
  // second pass invalidates against the full updated set: an edge inside a
  // grown box cannot be fixed by re-solving the splines over it.
  bool repaired_any = false;
  bool used_fallback = false;
  Tree repair_tree = ctx.tree;
  for (int round = 0; round < 8; ++round) {
    auto stretch = find_blocked_stretch(remaining, inflated_new);
    if (!stretch) stretch = find_blocked_stretch(remaining, inflated_all);
    if (!stretch) break;
    const int a = stretch->first_valid_before;
    const int b = stretch->first_valid_after;
    if (a < 0)
      return Error{ErrorCode::mission_failure, "replan: path blocked at the current position"};

    bool local_ok = false;
    if (b < static_cast<int>(remaining.size())) {
      // Reuse surviving structure: tree nodes near the blocked stretch that
      // are still in free space seed the local search.
      std::vector<Vec3> seeds;
      const double reach = 2.0 * ctx.config.rrt.neighbor_radius;
      for (const auto& node : ctx.tree.nodes)
        if (point_to_polyline_distance(node, remaining, std::max(a - 1, 0),
                                       std::min(b + 1, static_cast<int>(remaining.size()) - 1)) <=
            reach)
          seeds.push_back(node);

      auto local = build_tree_seeded(remaining[a], remaining[b], inflated_all, ctx.space,
                                     ctx.config.rrt, seeds, rng);
      if (local) {
        const std::vector<Vec3> repaired = los_prune(local.value().waypoints, inflated_all);
        std::vector<Vec3> stitched(remaining.begin(), remaining.begin() + a);
        stitched.insert(stitched.end(), repaired.begin(), repaired.end());
        stitched.insert(stitched.end(), remaining.begin() + b + 1, remaining.end());
        remaining = std::move(stitched);
        repair_tree = std::move(local).value().tree;
        repaired_any = true;
        local_ok = true;
      }
    }
    if (!local_ok) {
      // Local repair failed (or the target side is blocked): full search
      // from the current position to the target.
      auto full = build_tree_seeded(current_pos, ctx.path.positions.back(), inflated_all,
                                    ctx.space, ctx.config.rrt, {}, rng);
      if (!full)
        return Error{ErrorCode::planning_failure,
                     "replan: local repair and full replanning both failed: " +
                         full.error().message};
      remaining = los_prune(full.value().waypoints, inflated_all);
      repair_tree = std::move(full).value().tree;
      repaired_any = true;
      used_fallback = true;
      break;
    }
  }

  if (!repaired_any) {
    // Nothing on the waypoint path is occupied. Keep the plan when the flown
    // trajectory also stays clear; otherwise re-solve around the segment the
    // polynomial sweeps through an obstacle.
    const auto report =
        trajectory_feasible(ctx.trajectory, inflated_all, kFeasibilityDt, current_time);
    if (report.feasible) return ctx;
  }

  FlatPath path = rebuild_flat_path(remaining, current_yaw, ctx.target_yaw,
                                    ctx.config.position_spline);
  path = bisect_first_segments(path, ctx.config.position_spline);

  auto solved = solve_feasible(std::move(path), &ctx.trajectory, current_time, inflated_all,
                               ctx.config);
  if (!solved) return solved.error();

  PlanContext out;
  out.path = std::move(solved.value().first);
  out.trajectory = std::move(solved.value().second);
  out.tree = used_fallback || repaired_any ? std::move(repair_tree) : ctx.tree;
  out.obstacles = ctx.obstacles;
  out.space = ctx.space;
  out.config = ctx.config;
  out.target_yaw = ctx.target_yaw;
  out.last_repair_was_fallback = used_fallback;
  return out;
}

}  // namespace quadplan
