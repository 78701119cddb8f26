#pragma once

#include <vector>

#include "quadplan/geometry.hpp"
#include "quadplan/poly_traj.hpp"
#include "quadplan/rng.hpp"
#include "quadplan/rrt_star.hpp"
#include "quadplan/yaw_planner.hpp"

namespace quadplan {

struct PlannerConfig {
  RrtParams rrt;
  SplineConfig position_spline = SplineConfig::position_default();
  SplineConfig yaw_spline = SplineConfig::yaw_default();
  double inflation_margin = 0.3;  // m
};

/// Offline planning output carried into the online loop: the flat waypoint
/// path, the trajectory interpolating it, the search tree it came from, and
/// the raw obstacle set it was planned against.
struct PlanContext {
  FlatPath path;
  FlatTrajectory trajectory;
  Tree tree;
  std::vector<Cuboid> obstacles;  // raw (un-inflated) known set
  FlightSpace space;
  PlannerConfig config;
  double target_yaw = 0.0;
  bool last_repair_was_fallback = false;  // diagnostic set by replan()
};

struct FeasibilityReport {
  bool feasible = true;
  double first_collision_time = 0.0;
};

/// Samples the position outputs every dt over [from_time, end] and returns
/// the earliest sample inside any of the given (already inflated) obstacles.
FeasibilityReport trajectory_feasible(const FlatTrajectory& traj,
                                      const std::vector<Cuboid>& inflated_obstacles, double dt,
                                      double from_time);

inline FeasibilityReport trajectory_feasible(const FlatTrajectory& traj,
                                             const std::vector<Cuboid>& inflated_obstacles,
                                             double dt) {
  return trajectory_feasible(traj, inflated_obstacles, dt, traj.start_time());
}

/// Midpoints inserted into the first two segments (paths with fewer than two
/// segments are returned unchanged); yaw waypoints and segment times are
/// recomputed. Guides the polynomial more strictly past a fresh obstacle and
/// speeds up heading alignment.
FlatPath bisect_first_segments(const FlatPath& path, const SplineConfig& position_config);

/// The offline block: RRT* + LOS from start to target against the known
/// obstacles, yaw waypoints, heuristic times, and the four spline QPs with
/// rest-to-rest boundaries. The trajectory starts at t0.
Result<PlanContext> plan_offline(const Vec3& start, double start_yaw, const Vec3& target,
                                 double target_yaw, const std::vector<Cuboid>& known_obstacles,
                                 const FlightSpace& space, const PlannerConfig& config, Rng& rng,
                                 double t0);

/// Online replanning: invalidate the stretch of the remaining path occupied
/// by the new obstacles, repair it with a local RRT* seeded from surviving
/// tree nodes, LOS-prune the repair, bisect the first segments, and re-solve
/// the QPs from the current flat state so the handover is smooth. Returns
/// the context unchanged when nothing is occupied and the trajectory stays
/// feasible. ctx.obstacles must already hold the updated known set.
Result<PlanContext> replan(const PlanContext& ctx, double current_time,
                           const std::vector<Cuboid>& new_obstacles, Rng& rng);

}  // namespace quadplan
