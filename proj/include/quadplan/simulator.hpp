#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "quadplan/flatness.hpp"
#include "quadplan/perception.hpp"
#include "quadplan/replanner.hpp"

namespace quadplan {

struct TimedObstacle {
  Cuboid box;
  double appears_at = 0.0;  // s; 0 means present from the start
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  FlightSpace space;
  std::vector<TimedObstacle> obstacles;
  Vec3 start_position{Vec3::Zero()};
  double start_yaw = 0.0;
  Vec3 target_position{Vec3::Zero()};
  double target_yaw = 0.0;
  CameraModel camera;
  PlannerConfig planner;
  DetectionParams detection;
  QuadModel quad = QuadModel::default_model();
  double sensing_period = 0.167;  // s, the 6 Hz loop rate
  double sim_step = 0.01;         // s
  double max_duration = 300.0;    // s, watchdog on replanned missions
};

enum class EventTag { none, scan, detection, replan };

struct SimEvent {
  double t = 0.0;
  EventTag type = EventTag::none;
  int new_obstacle_count = 0;  // detection events
  int known_obstacle_count = 0;
  double wall_ms = 0.0;        // replan events: wall-clock planning time
  std::string info;
};

struct TraceRecord {
  double t = 0.0;
  FlatSample flat;
  QuadState state;
  QuadInput input;
  std::array<double, 4> rotor_forces{};
  EventTag tag = EventTag::none;
};

struct SimSummary {
  bool completed = false;
  double mission_duration = 0.0;
  int replan_count = 0;
  double min_clearance = std::numeric_limits<double>::infinity();  // m, to raw obstacles
  double peak_yaw_rate_post_replan = 0.0;  // rad/s, 0 when no replan happened
  Vec3 final_position{Vec3::Zero()};
};

/// Bookkeeping of one replanning step, kept for offline verification of the
/// handover: how the path changed and how large the flat-output jumps at the
/// switch instant were.
struct ReplanRecord {
  double t = 0.0;
  Vec3 position_at_replan{Vec3::Zero()};  // flat position the repair starts from
  FlatPath old_path;
  std::vector<double> old_knots;  // absolute waypoint times of the old path
  FlatPath new_path;
  std::vector<Cuboid> new_obstacles;             // raw boxes that triggered it
  std::vector<Cuboid> known_obstacles;           // full known set at replan time
  bool used_fallback = false;                    // local repair failed, full replan ran
  std::array<double, 3> handover_jump{0, 0, 0};  // max over outputs, k = 0..2
};

struct SimOutput {
  std::vector<TraceRecord> trace;
  std::vector<SimEvent> events;
  std::vector<ReplanRecord> replans;
  SimSummary summary;
};

/// Scenario invariants: poses inside the flight space and clear of the
/// inflated obstacles, positive rates, valid camera and quad model.
Status validate_scenario(const Scenario& s);

/// Offline plan from the first scan, then a fixed-step loop with ideal
/// trajectory tracking, periodic sensing, 8-corner detection and replanning
/// whenever fresh obstacles invalidate the flown trajectory. Deterministic
/// per seed.
Result<SimOutput> run_scenario(const Scenario& s);

}  // namespace quadplan
