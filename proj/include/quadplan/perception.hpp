#pragma once

#include <array>
#include <vector>

#include "quadplan/geometry.hpp"
#include "quadplan/rng.hpp"

namespace quadplan {

/// Synthetic front-facing depth camera; rays sweep a regular grid over the
/// field of view. The camera looks along body +x of the carrying pose, with
/// an optional mounting offset.
struct CameraModel {
  double fov_horizontal = 59.0 * 0.017453292519943295;  // rad
  double fov_vertical = 46.0 * 0.017453292519943295;    // rad
  double max_range = 3.5;                               // m
  int rays_horizontal = 64;
  int rays_vertical = 48;
  double noise_sigma = 0.01;                            // m, range noise
  Vec3 mount_offset{Vec3::Zero()};                      // body frame
  double mount_yaw = 0.0;                               // rad

  static CameraModel default_model() { return CameraModel{}; }
  bool valid() const {
    return fov_horizontal > 0.0 && fov_horizontal < 3.141592653589793 && fov_vertical > 0.0 &&
           fov_vertical < 3.141592653589793 && max_range > 0.0 && rays_horizontal >= 2 &&
           rays_vertical >= 2 && noise_sigma >= 0.0;
  }
};

struct ScanPose {
  Vec3 position{Vec3::Zero()};
  double yaw = 0.0;
};

using PointCloud = std::vector<Vec3>;

struct Cluster {
  PointCloud points;
};

struct DetectionParams {
  double cluster_radius = 0.15;  // m, single-linkage connection distance
  int min_cluster_pts = 10;      // smaller components are dropped as noise
  double delta = 0.3;            // m, new-obstacle threshold
  int knn = 1;                   // neighbor count of the point-cloud baseline
};

/// Ray-cast depth scan of the given obstacles: each ray keeps its nearest
/// hit within range plus zero-mean Gaussian range noise. Deterministic for a
/// given rng state; empty when nothing is visible.
PointCloud render_depth_scan(const ScanPose& pose, const std::vector<Cuboid>& obstacles,
                             const CameraModel& camera, Rng& rng);

/// Euclidean single-linkage clustering: connected components of the
/// point-distance-<=-radius graph, components below min_pts discarded.
/// Clusters are ordered by their smallest point index.
std::vector<Cluster> cluster_points(const PointCloud& cloud, double radius, int min_pts);

/// Axis-aligned bounding box of a cluster.
Cuboid convert_pc_to_box(const Cluster& cluster);

/// Smallest axis-aligned box containing both inputs.
Cuboid merge_boxes(const Cuboid& a, const Cuboid& b);

/// Distance from each of c's 8 corners to the box o.
std::array<double, 8> corner_distances(const Cuboid& c, const Cuboid& o);

struct DetectionResult {
  std::vector<Cuboid> new_obstacles;  // O_new, includes merge results
  std::vector<Cuboid> known;          // O pruned of merged-away members
};

/// 8-corner obstacle detection: cluster boxes become new obstacles when far
/// from everything known (d > delta), merge on intersection (d == 0), and
/// merge when near with a protruding corner (d < delta, max corner distance
/// > delta). The full known set after a call is known + new_obstacles.
DetectionResult detect_obstacles_8corner(std::vector<Cuboid> known,
                                         const std::vector<Cluster>& clusters, double delta);

struct BaselineClassification {
  bool is_new = false;
  int matched_index = -1;  // index into known_clouds when matched
  double distance = 0.0;   // mean k-NN distance to the nearest known cloud
};

/// Classical point-cloud detector: each cluster is compared against every
/// stored cloud by the mean of its points' k-nearest-neighbor distances;
/// matched clusters are appended to the matched cloud, new ones stored whole.
std::vector<BaselineClassification> detect_obstacles_pointcloud_baseline(
    std::vector<PointCloud>& known_clouds, const std::vector<Cluster>& clusters, double delta,
    int k);

struct DetectorStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

struct BenchmarkResult {
  DetectorStats corner8;
  DetectorStats baseline;
  int frames = 0;
  int trials = 0;
  int corner8_final_count = 0;   // obstacles known to each method after the
  int baseline_final_count = 0;  // last frame of the last trial
};

/// Runs both detectors over the frame sequence, Monte-Carlo over trials with
/// per-trial point jitter (jitter_sigma = 0 reproduces the frames exactly).
/// Clustering is shared preprocessing; only the detection step is timed.
BenchmarkResult benchmark_detectors(const std::vector<PointCloud>& frames,
                                    const DetectionParams& params, int trials, Rng& rng,
                                    double jitter_sigma);

}  // namespace quadplan
