#include "quadplan/perception.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace quadplan {

namespace {

// Nearest entry of a ray into an axis-aligned box; negative when it misses.
double ray_box_entry(const Vec3& origin, const Vec3& dir, const Cuboid& box, double max_range) {
  double tmin = 0.0, tmax = max_range;
  for (int k = 0; k < 3; ++k) {
    if (dir[k] == 0.0) {
      if (origin[k] < box.min_corner[k] || origin[k] > box.max_corner[k]) return -1.0;
    } else {
      double t1 = (box.min_corner[k] - origin[k]) / dir[k];
      double t2 = (box.max_corner[k] - origin[k]) / dir[k];
      if (t1 > t2) std::swap(t1, t2);
      tmin = std::max(tmin, t1);
      tmax = std::min(tmax, t2);
      if (tmin > tmax) return -1.0;
    }
  }
  return tmin;
}

}  // namespace

PointCloud render_depth_scan(const ScanPose& pose, const std::vector<Cuboid>& obstacles,
                             const CameraModel& camera, Rng& rng) {
  if (!camera.valid()) throw std::invalid_argument("render_depth_scan: invalid camera model");

  const double yaw = pose.yaw + camera.mount_yaw;
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const Vec3 origin = pose.position + Vec3(cy * camera.mount_offset.x() - sy * camera.mount_offset.y(),
                                           sy * camera.mount_offset.x() + cy * camera.mount_offset.y(),
                                           camera.mount_offset.z());
  const double cyaw = std::cos(yaw), syaw = std::sin(yaw);

  PointCloud cloud;
  for (int iy = 0; iy < camera.rays_vertical; ++iy) {
    const double elevation = -0.5 * camera.fov_vertical +
                             camera.fov_vertical * iy / (camera.rays_vertical - 1);
    for (int ix = 0; ix < camera.rays_horizontal; ++ix) {
      const double azimuth = -0.5 * camera.fov_horizontal +
                             camera.fov_horizontal * ix / (camera.rays_horizontal - 1);
      const double ce = std::cos(elevation);
      const Vec3 dir_cam(ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation));
      const Vec3 dir(cyaw * dir_cam.x() - syaw * dir_cam.y(),
                     syaw * dir_cam.x() + cyaw * dir_cam.y(), dir_cam.z());

      double best = std::numeric_limits<double>::infinity();
      for (const auto& box : obstacles) {
        const double t = ray_box_entry(origin, dir, box, camera.max_range);
        if (t >= 0.0 && t < best) best = t;
      }
      if (!std::isfinite(best)) continue;

      double range = best;
      if (camera.noise_sigma > 0.0) range += rng.gaussian(0.0, camera.noise_sigma);
      range = std::clamp(range, 0.0, camera.max_range);
      cloud.push_back(origin + range * dir);
    }
  }
  return cloud;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
  }
};

}  // namespace

std::vector<Cluster> cluster_points(const PointCloud& cloud, double radius, int min_pts) {
  if (radius <= 0.0) throw std::invalid_argument("cluster_points: radius must be positive");
  const int n = static_cast<int>(cloud.size());
  if (n == 0) return {};

  // Grid with cell size = radius: all pairs within radius live in adjacent
  // cells, so the single-linkage components match the all-pairs graph.
  std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
  auto key_of = [&](const Vec3& p) {
    return CellKey{static_cast<long long>(std::floor(p.x() / radius)),
                   static_cast<long long>(std::floor(p.y() / radius)),
                   static_cast<long long>(std::floor(p.z() / radius))};
  };
  for (int i = 0; i < n; ++i) grid[key_of(cloud[i])].push_back(i);

  UnionFind uf(n);
  const double r2 = radius * radius;
  for (int i = 0; i < n; ++i) {
    const CellKey c = key_of(cloud[i]);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) continue;
          for (int j : it->second)
            if (j > i && (cloud[i] - cloud[j]).squaredNorm() <= r2) uf.unite(i, j);
        }
  }

  // Group by root; clusters ordered by smallest member index.
  std::unordered_map<int, int> root_to_cluster;
  std::vector<Cluster> clusters;
  for (int i = 0; i < n; ++i) {
    const int root = uf.find(i);
    auto [it, inserted] = root_to_cluster.try_emplace(root, static_cast<int>(clusters.size()));
    if (inserted) clusters.emplace_back();
    clusters[it->second].points.push_back(cloud[i]);
  }

  std::vector<Cluster> out;
  for (auto& c : clusters)
    if (static_cast<int>(c.points.size()) >= min_pts) out.push_back(std::move(c));
  return out;
}

Cuboid convert_pc_to_box(const Cluster& cluster) {
  if (cluster.points.empty()) throw std::invalid_argument("convert_pc_to_box: empty cluster");
  Vec3 lo = cluster.points.front(), hi = cluster.points.front();
  for (const auto& p : cluster.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return Cuboid{lo, hi};
}

Cuboid merge_boxes(const Cuboid& a, const Cuboid& b) {
  return Cuboid{a.min_corner.cwiseMin(b.min_corner), a.max_corner.cwiseMax(b.max_corner)};
}

std::array<double, 8> corner_distances(const Cuboid& c, const Cuboid& o) {
  std::array<double, 8> out{};
  const auto pts = c.corners();
  for (int i = 0; i < 8; ++i) out[i] = point_to_cuboid_distance(pts[i], o);
  return out;
}

namespace {

constexpr double kContactTol = 1e-9;

// Nearest member of known + fresh to the box; ties broken by lowest index.
// Index i < known.size() refers to known, otherwise to fresh.
std::pair<double, int> nearest_known(const Cuboid& box, const std::vector<Cuboid>& known,
                                     const std::vector<Cuboid>& fresh) {
  const ConvexHullShape hull = ConvexHullShape::cuboid(box);
  double best = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  int idx = 0;
  for (const auto* set : {&known, &fresh}) {
    for (const auto& o : *set) {
      const double d = gjk_distance(hull, ConvexHullShape::cuboid(o));
      if (d < best) {
        best = d;
        best_idx = idx;
      }
      ++idx;
    }
  }
  return {best, best_idx};
}

}  // namespace

DetectionResult detect_obstacles_8corner(std::vector<Cuboid> known,
                                         const std::vector<Cluster>& clusters, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("detect_obstacles_8corner: delta must be positive");

  std::vector<Cuboid> boxes;
  boxes.reserve(clusters.size());
  for (const auto& c : clusters) boxes.push_back(convert_pc_to_box(c));

  DetectionResult result;
  if (known.empty()) {
    result.new_obstacles = std::move(boxes);
    result.known = std::move(known);
    return result;
  }

  // The nearest-known query runs against the current known + new sets per
  // box: merges remove obstacles mid-loop, so distances computed up front
  // would dangle.
  for (const auto& box : boxes) {
    const auto [d, idx] = nearest_known(box, known, result.new_obstacles);
    if (idx < 0) {  // everything merged away earlier in this call
      result.new_obstacles.push_back(box);
      continue;
    }
    auto take = [&](int i) -> Cuboid {
      const int nk = static_cast<int>(known.size());
      if (i < nk) {
        Cuboid c = known[i];
        known.erase(known.begin() + i);
        return c;
      }
      Cuboid c = result.new_obstacles[i - nk];
      result.new_obstacles.erase(result.new_obstacles.begin() + (i - nk));
      return c;
    };
    const Cuboid& nearest =
        idx < static_cast<int>(known.size()) ? known[idx]
                                             : result.new_obstacles[idx - known.size()];

    if (d > delta) {
      result.new_obstacles.push_back(box);
    } else if (d <= kContactTol) {
      result.new_obstacles.push_back(merge_boxes(box, take(idx)));
    } else {
      const auto corners = corner_distances(box, nearest);
      const double max_corner = *std::max_element(corners.begin(), corners.end());
      if (max_corner > delta) result.new_obstacles.push_back(merge_boxes(box, take(idx)));
      // else: redundant re-detection of a known obstacle, dropped
    }
  }
  result.known = std::move(known);
  return result;
}

namespace {

// Mean distance of p to its k nearest neighbors in cloud (brute force).
double mean_knn_distance(const Vec3& p, const PointCloud& cloud, int k) {
  const int kk = std::min<int>(k, static_cast<int>(cloud.size()));
  std::vector<double> best(kk, std::numeric_limits<double>::infinity());
  for (const auto& q : cloud) {
    double d2 = (p - q).squaredNorm();
    // Insertion into the small sorted buffer of current bests.
    if (d2 < best.back()) {
      int i = kk - 1;
      while (i > 0 && best[i - 1] > d2) {
        best[i] = best[i - 1];
        --i;
      }
      best[i] = d2;
    }
  }
  double sum = 0.0;
  for (double d2 : best) sum += std::sqrt(d2);
  return sum / kk;
}

}  // namespace

std::vector<BaselineClassification> detect_obstacles_pointcloud_baseline(
    std::vector<PointCloud>& known_clouds, const std::vector<Cluster>& clusters, double delta,
    int k) {
  if (k < 1) throw std::invalid_argument("detect_obstacles_pointcloud_baseline: k must be >= 1");

  std::vector<BaselineClassification> out;
  out.reserve(clusters.size());
  for (const auto& cluster : clusters) {
    BaselineClassification cls;
    double best = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (int ci = 0; ci < static_cast<int>(known_clouds.size()); ++ci) {
      if (known_clouds[ci].empty()) continue;
      double sum = 0.0;
      for (const auto& p : cluster.points) sum += mean_knn_distance(p, known_clouds[ci], k);
      const double mean = sum / static_cast<double>(cluster.points.size());
      if (mean < best) {
        best = mean;
        best_idx = ci;
      }
    }
    if (best_idx < 0 || best > delta) {
      cls.is_new = true;
      cls.distance = best_idx < 0 ? std::numeric_limits<double>::infinity() : best;
      known_clouds.push_back(cluster.points);
    } else {
      cls.is_new = false;
      cls.matched_index = best_idx;
      cls.distance = best;
      auto& cloud = known_clouds[best_idx];
      cloud.insert(cloud.end(), cluster.points.begin(), cluster.points.end());
    }
    out.push_back(cls);
  }
  return out;
}

BenchmarkResult benchmark_detectors(const std::vector<PointCloud>& frames,
                                    const DetectionParams& params, int trials, Rng& rng,
                                    double jitter_sigma) {
  if (frames.empty()) throw std::invalid_argument("benchmark_detectors: need >= 1 frame");
  if (trials < 1) throw std::invalid_argument("benchmark_detectors: need >= 1 trial");

  using clock = std::chrono::steady_clock;
  std::vector<double> corner_ms, baseline_ms;
  corner_ms.reserve(frames.size() * trials);
  baseline_ms.reserve(frames.size() * trials);

  BenchmarkResult result;
  for (int trial = 0; trial < trials; ++trial) {
    Rng trial_rng = rng.fork(trial);
    std::vector<Cuboid> corner_known;
    std::vector<PointCloud> baseline_clouds;

    for (const auto& frame : frames) {
      PointCloud cloud = frame;
      if (jitter_sigma > 0.0)
        for (auto& p : cloud)
          p += Vec3(trial_rng.gaussian(0.0, jitter_sigma), trial_rng.gaussian(0.0, jitter_sigma),
                    trial_rng.gaussian(0.0, jitter_sigma));

      // Clustering is shared preprocessing of both methods and stays untimed.
      const auto clusters = cluster_points(cloud, params.cluster_radius, params.min_cluster_pts);

      auto t0 = clock::now();
      auto det = detect_obstacles_8corner(std::move(corner_known), clusters, params.delta);
      corner_known = std::move(det.known);
      corner_known.insert(corner_known.end(), det.new_obstacles.begin(),
                          det.new_obstacles.end());
      auto t1 = clock::now();
      corner_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

      auto t2 = clock::now();
      detect_obstacles_pointcloud_baseline(baseline_clouds, clusters, params.delta, params.knn);
      auto t3 = clock::now();
      baseline_ms.push_back(std::chrono::duration<double, std::milli>(t3 - t2).count());
    }
    result.corner8_final_count = static_cast<int>(corner_known.size());
    result.baseline_final_count = static_cast<int>(baseline_clouds.size());
  }

  auto stats = [](const std::vector<double>& xs) {
    DetectorStats s;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) s.mean_ms += x;
    s.mean_ms /= n;
    double var = 0.0;
    for (double x : xs) var += (x - s.mean_ms) * (x - s.mean_ms);
    s.std_ms = std::sqrt(var / n);
    return s;
  };
  result.corner8 = stats(corner_ms);
  result.baseline = stats(baseline_ms);
  result.frames = static_cast<int>(frames.size());
  result.trials = trials;
  return result;
}

}  // namespace quadplan
