#pragma once

#include <vector>

#include "quadplan/geometry.hpp"

namespace quadplan {

/// Line-of-Sight waypoint pruning: from each anchor, connect straight to the
/// farthest waypoint still visible (collision-free), delete everything in
/// between, and advance the anchor there. First and last waypoints are always
/// retained; the output is an order-preserving subsequence of the input.
/// Consecutive input pairs must be collision-free.
std::vector<Vec3> los_prune(const std::vector<Vec3>& path, const std::vector<Cuboid>& obstacles);

}  // namespace quadplan
