#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "quadplan/result.hpp"
#include "quadplan/rng.hpp"

namespace quadplan {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned box obstacle stored by its extreme corners; the 8 corner
/// points are the componentwise min/max combinations.
struct Cuboid {
  Vec3 min_corner{Vec3::Zero()};
  Vec3 max_corner{Vec3::Zero()};

  static Cuboid from_corners(const Vec3& a, const Vec3& b) {
    return Cuboid{a.cwiseMin(b), a.cwiseMax(b)};
  }

  bool valid() const { return (min_corner.array() <= max_corner.array()).all(); }
  Vec3 center() const { return 0.5 * (min_corner + max_corner); }
  Vec3 extents() const { return max_corner - min_corner; }
  double volume() const { return extents().prod(); }

  /// Closed containment: boundary points count as inside.
  bool contains(const Vec3& p) const {
    return (p.array() >= min_corner.array()).all() && (p.array() <= max_corner.array()).all();
  }

  std::array<Vec3, 8> corners() const;
};

/// Admissible flight space; sampled points lie inside bounds.
struct FlightSpace {
  Cuboid bounds;
  bool contains(const Vec3& p) const { return bounds.contains(p); }
};

/// Convex operand for distance queries: the hull of an explicit vertex set.
/// Cuboids are the only production shape; the generic form exists so tests
/// can cross-check against analytic oracles.
struct ConvexHullShape {
  std::vector<Vec3> vertices;

  static ConvexHullShape point(const Vec3& p) { return {{p}}; }
  static ConvexHullShape segment(const Vec3& a, const Vec3& b) { return {{a, b}}; }
  static ConvexHullShape cuboid(const Cuboid& c);

  /// Index of the vertex farthest along dir (lowest index on ties).
  int support(const Vec3& dir) const;
};

/// Push every face outward by margin (Minkowski sum with a cube of
/// half-width margin). Throws std::invalid_argument for negative margins.
Cuboid inflate(const Cuboid& box, double margin);

/// Minimum Euclidean distance between the convex hulls of a and b;
/// 0 iff the hulls intersect or touch. Both shapes must be non-empty.
double gjk_distance(const ConvexHullShape& a, const ConvexHullShape& b);

/// Componentwise clamp distance from a point to an axis-aligned box.
double point_to_cuboid_distance(const Vec3& p, const Cuboid& box);

/// Exact slab test of the closed segment [a, b] against every obstacle.
/// Contact counts as collision, matching the gjk_distance == 0 convention.
bool segment_collision_free(const Vec3& a, const Vec3& b, const std::vector<Cuboid>& obstacles);

/// Uniform sample of the free space by rejection; deterministic given the
/// rng state. Fails after 10,000 rejections (near-fully-occupied space).
Result<Vec3> sample_free(const FlightSpace& space, const std::vector<Cuboid>& inflated_obstacles,
                         Rng& rng);

inline std::vector<Cuboid> inflate_all(const std::vector<Cuboid>& boxes, double margin) {
  std::vector<Cuboid> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(inflate(b, margin));
  return out;
}

}  // namespace quadplan
