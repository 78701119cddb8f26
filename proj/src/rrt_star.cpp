#include "quadplan/rrt_star.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace quadplan {

namespace {

std::vector<int> near_set(const Tree& tree, const Vec3& query, double rho) {
  std::vector<int> out;
  const double rho2 = rho * rho;
  for (int i = 0; i < tree.size(); ++i)
    if ((tree.nodes[i] - query).squaredNorm() <= rho2) out.push_back(i);
  return out;
}

// Shift the costs of v's whole subtree after a rewire.
void propagate_cost_delta(Tree& tree, int v, double delta) {
  if (delta == 0.0) return;
  std::vector<std::vector<int>> children(tree.size());
  for (int i = 0; i < tree.size(); ++i)
    if (tree.parents[i] >= 0) children[tree.parents[i]].push_back(i);
  std::vector<int> stack{v};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    tree.cost_to_target[u] += delta;
    for (int c : children[u]) stack.push_back(c);
  }
}

// Core insertion step shared by the sampling loop and the exact connection
// of r_s. Returns the index of the inserted node, -1 on a no-op.
int add_node_core(const Vec3& r_rand, Tree& tree, const std::vector<Cuboid>& obstacles,
                  double epsilon, double rho, bool truncate_to_epsilon) {
  const std::vector<int> near = near_set(tree, r_rand, rho);
  if (near.empty()) return -1;

  // Parent choice: least total distance to the target through the candidate
  // among candidates whose connecting edge is collision-free. The inserted
  // point depends on the candidate via the steer rule.
  int best_parent = -1;
  Vec3 best_point = Vec3::Zero();
  double best_cost = std::numeric_limits<double>::infinity();
  for (int idx : near) {
    const Vec3& p = tree.nodes[idx];
    const double gap = (r_rand - p).norm();
    if (gap == 0.0) continue;  // duplicate of an existing node
    Vec3 candidate = r_rand;
    if (truncate_to_epsilon && gap > epsilon) candidate = p + (r_rand - p) * (epsilon / gap);
    const double cost = tree.cost_to_target[idx] + (candidate - p).norm();
    if (cost < best_cost && segment_collision_free(p, candidate, obstacles)) {
      best_cost = cost;
      best_parent = idx;
      best_point = candidate;
    }
  }
  if (best_parent < 0) return -1;

  const int new_idx = tree.size();
  tree.nodes.push_back(best_point);
  tree.parents.push_back(best_parent);
  tree.cost_to_target.push_back(best_cost);

  // Rewire: route any near node through the new one when that strictly
  // lowers its cost and the edge is collision-free. Ancestors of the new
  // node can never improve (cost decreases toward the root), so no cycles.
  for (int idx : near) {
    if (idx == 0 || idx == best_parent) continue;
    const double candidate_cost = best_cost + (tree.nodes[idx] - best_point).norm();
    if (candidate_cost < tree.cost_to_target[idx] &&
        segment_collision_free(best_point, tree.nodes[idx], obstacles)) {
      const double delta = candidate_cost - tree.cost_to_target[idx];
      tree.parents[idx] = new_idx;
      propagate_cost_delta(tree, idx, delta);
    }
  }
  return new_idx;
}

}  // namespace

Tree add_node(const Vec3& r_rand, const Tree& tree, const std::vector<Cuboid>& obstacles,
              double epsilon, double rho) {
  Tree out = tree;
  add_node_core(r_rand, out, obstacles, epsilon, rho, true);
  return out;
}

int add_node_exact(const Vec3& point, Tree& tree, const std::vector<Cuboid>& obstacles,
                   double rho) {
  return add_node_core(point, tree, obstacles, 0.0, rho, false);
}

namespace {

bool in_free_space(const Vec3& p, const std::vector<Cuboid>& obstacles, const FlightSpace& space) {
  if (!space.contains(p)) return false;
  for (const auto& box : obstacles)
    if (box.contains(p)) return false;
  return true;
}

Result<std::vector<Vec3>> extract_path(const Tree& tree, int start_idx) {
  std::vector<Vec3> path;
  int cur = start_idx;
  const int cap = tree.size() + 1;
  int hops = 0;
  while (cur >= 0) {
    path.push_back(tree.nodes[cur]);
    cur = tree.parents[cur];
    if (++hops > cap)
      return Error{ErrorCode::planning_failure, "extract_path: parent chain does not terminate"};
  }
  return path;  // [r_s, ..., r_t]
}

}  // namespace

Result<PlanResult> build_tree_seeded(const Vec3& r_s, const Vec3& r_t,
                                     const std::vector<Cuboid>& obstacles,
                                     const FlightSpace& space, const RrtParams& params,
                                     const std::vector<Vec3>& seed_nodes, Rng& rng) {
  if (!params.valid())
    throw std::invalid_argument("build_tree: need N >= 2 and 0 < epsilon <= rho");
  if (!in_free_space(r_s, obstacles, space))
    return Error{ErrorCode::invalid_input, "build_tree: start is not in free space"};
  if (!in_free_space(r_t, obstacles, space))
    return Error{ErrorCode::invalid_input, "build_tree: target is not in free space"};

  Tree tree = Tree::rooted_at(r_t);

  // Seeds grow outward from the root, so connect the closest ones first.
  std::vector<Vec3> seeds = seed_nodes;
  std::stable_sort(seeds.begin(), seeds.end(), [&](const Vec3& a, const Vec3& b) {
    return (a - r_t).squaredNorm() < (b - r_t).squaredNorm();
  });
  for (const Vec3& s : seeds) {
    if (!in_free_space(s, obstacles, space)) continue;
    add_node_exact(s, tree, obstacles, params.neighbor_radius);
  }

  // Growth until the node budget is exceeded, then connect r_s exactly.
  // A stalled tree (nothing insertable) is bounded by the sample cap; if r_s
  // cannot be connected after a round of N samples the next round retries.
  constexpr int kConnectRounds = 3;
  const long stall_cap = 200L * params.max_nodes;
  long samples_drawn = 0;
  for (int round = 0; round < kConnectRounds; ++round) {
    const int budget = (round + 1) * params.max_nodes;
    while (tree.size() <= budget) {
      auto sample = sample_free(space, obstacles, rng);
      if (!sample) return sample.error();
      add_node_core(sample.value(), tree, obstacles, params.steer_length,
                    params.neighbor_radius, true);
      if (++samples_drawn > stall_cap)
        return Error{ErrorCode::planning_failure, "build_tree: tree growth stalled"};
    }
    const int start_idx = add_node_exact(r_s, tree, obstacles, params.neighbor_radius);
    if (start_idx >= 0) {
      auto path = extract_path(tree, start_idx);
      if (!path) return path.error();
      return PlanResult{std::move(tree), std::move(path).value()};
    }
  }
  return Error{ErrorCode::planning_failure,
               "build_tree: start could not be connected after " +
                   std::to_string(kConnectRounds * params.max_nodes) + " samples"};
}

Result<PlanResult> build_tree(const Vec3& r_s, const Vec3& r_t,
                              const std::vector<Cuboid>& obstacles, const FlightSpace& space,
                              const RrtParams& params) {
  Rng rng(params.seed);
  return build_tree_seeded(r_s, r_t, obstacles, space, params, {}, rng);
}

}  // namespace quadplan
