#pragma once

#include <vector>

#include "quadplan/geometry.hpp"

namespace quadplan {

/// Flat-output waypoint path: positions, matching yaw waypoints, and the
/// duration of each segment. |yaws| == |positions| == M, |segment_times| ==
/// M - 1 with every duration positive; consecutive unwrapped yaw gaps stay
/// within pi.
struct FlatPath {
  std::vector<Vec3> positions;
  std::vector<double> yaws;
  std::vector<double> segment_times;

  int waypoint_count() const { return static_cast<int>(positions.size()); }
};

/// Yaw waypoints pointing the front camera along the flight direction:
/// endpoints from the caller, interior yaw i from the full-quadrant heading
/// of the segment leaving waypoint i. A vertical segment (no horizontal
/// displacement) inherits the previous yaw. The result is unwrapped so
/// consecutive differences lie in (-pi, pi].
std::vector<double> yaw_waypoints(const std::vector<Vec3>& positions, double psi_start,
                                  double psi_target);

}  // namespace quadplan
