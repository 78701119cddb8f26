#pragma once

#include <cstdint>
#include <vector>

#include "quadplan/geometry.hpp"
#include "quadplan/result.hpp"

namespace quadplan {

/// Search tree rooted at the target: node 0 is r_t with no parent and cost 0,
/// every other node's parent edge is collision-free, and cost_to_target is
/// the path length to the root through the parent chain.
struct Tree {
  std::vector<Vec3> nodes;
  std::vector<int> parents;           // -1 for the root
  std::vector<double> cost_to_target; // m

  static Tree rooted_at(const Vec3& target) {
    Tree t;
    t.nodes.push_back(target);
    t.parents.push_back(-1);
    t.cost_to_target.push_back(0.0);
    return t;
  }
  int size() const { return static_cast<int>(nodes.size()); }
};

struct RrtParams {
  int max_nodes = 500;          // N
  double steer_length = 0.5;    // epsilon, m
  double neighbor_radius = 1.0; // rho, m
  std::uint64_t seed = 0;

  bool valid() const {
    return max_nodes >= 2 && steer_length > 0.0 && steer_length <= neighbor_radius;
  }
};

/// One tree-growth step: choose the parent among nodes within rho of r_rand
/// that minimizes the total distance to the target through itself, steer to
/// epsilon, insert if the edge is collision-free, then rewire the near set.
/// Returns the tree unchanged when no valid parent exists or the edge collides.
Tree add_node(const Vec3& r_rand, const Tree& tree, const std::vector<Cuboid>& obstacles,
              double epsilon, double rho);

/// add_node with the steer truncation disabled so the point itself enters
/// the tree (used to connect r_s exactly). Returns the inserted node index,
/// -1 on failure.
int add_node_exact(const Vec3& point, Tree& tree, const std::vector<Cuboid>& obstacles,
                   double rho);

struct PlanResult {
  Tree tree;
  std::vector<Vec3> waypoints;  // ordered [r_s, ..., r_t]
};

/// Full tree construction rooted at r_t: grow until the node budget is
/// exhausted, connect r_s last, then follow parents from r_s to r_t.
/// Obstacles are expected to be pre-inflated.
Result<PlanResult> build_tree(const Vec3& r_s, const Vec3& r_t,
                              const std::vector<Cuboid>& obstacles, const FlightSpace& space,
                              const RrtParams& params);

/// build_tree continuing from an existing rng stream and optional seed nodes
/// (inserted before sampling, nearest-to-root first). Used by replanning to
/// reuse surviving tree structure.
Result<PlanResult> build_tree_seeded(const Vec3& r_s, const Vec3& r_t,
                                     const std::vector<Cuboid>& obstacles,
                                     const FlightSpace& space, const RrtParams& params,
                                     const std::vector<Vec3>& seed_nodes, Rng& rng);

}  // namespace quadplan
