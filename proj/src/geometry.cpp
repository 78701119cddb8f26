#include "quadplan/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace quadplan {

std::array<Vec3, 8> Cuboid::corners() const {
  std::array<Vec3, 8> out;
  int idx = 0;
  for (int ix = 0; ix < 2; ++ix)
    for (int iy = 0; iy < 2; ++iy)
      for (int iz = 0; iz < 2; ++iz)
        out[idx++] = Vec3(ix ? max_corner.x() : min_corner.x(),
                          iy ? max_corner.y() : min_corner.y(),
                          iz ? max_corner.z() : min_corner.z());
  return out;
}

ConvexHullShape ConvexHullShape::cuboid(const Cuboid& c) {
  const auto pts = c.corners();
  return ConvexHullShape{{pts.begin(), pts.end()}};
}

int ConvexHullShape::support(const Vec3& dir) const {
  int best = 0;
  double best_dot = vertices[0].dot(dir);
  for (int i = 1; i < static_cast<int>(vertices.size()); ++i) {
    const double d = vertices[i].dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

Cuboid inflate(const Cuboid& box, double margin) {
  if (margin < 0.0) throw std::invalid_argument("inflate: negative margin");
  return Cuboid{box.min_corner.array() - margin, box.max_corner.array() + margin};
}

double point_to_cuboid_distance(const Vec3& p, const Cuboid& box) {
  double sq = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = std::max({box.min_corner[k] - p[k], 0.0, p[k] - box.max_corner[k]});
    sq += d * d;
  }
  return std::sqrt(sq);
}

namespace {

constexpr double kGjkProgressTol = 1e-10;  // relative progress cutoff on the simplex
constexpr double kGjkZeroTol = 1e-12;
constexpr int kGjkMaxIter = 64;

struct MinkowskiVertex {
  Vec3 p;
  int ia, ib;  // witness vertex indices in the two hulls
};

struct Simplex {
  MinkowskiVertex v[4];
  int size = 0;

  bool has_witness(int ia, int ib) const {
    for (int i = 0; i < size; ++i)
      if (v[i].ia == ia && v[i].ib == ib) return true;
    return false;
  }
};

// Closest point to the origin on segment [a, b]; bary = (1 - t, t).
Vec3 closest_on_segment(const Vec3& a, const Vec3& b, double bary[2]) {
  const Vec3 ab = b - a;
  const double denom = ab.squaredNorm();
  double t = denom > 0.0 ? -a.dot(ab) / denom : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  bary[0] = 1.0 - t;
  bary[1] = t;
  return a + t * ab;
}

// Closest point to the origin on triangle (a, b, c); bary has one entry per
// vertex, exact zeros for inactive features. Falls back to the edge cases
// when the triangle is degenerate.
Vec3 closest_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c, double bary[3]) {
  const Vec3 ab = b - a, ac = c - a;
  const Vec3 ap = -a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    bary[0] = 1.0;
    bary[1] = bary[2] = 0.0;
    return a;
  }

  const Vec3 bp = -b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    bary[1] = 1.0;
    bary[0] = bary[2] = 0.0;
    return b;
  }

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 && d1 - d3 > 0.0) {
    const double t = d1 / (d1 - d3);
    bary[0] = 1.0 - t;
    bary[1] = t;
    bary[2] = 0.0;
    return a + t * ab;
  }

  const Vec3 cp = -c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    bary[2] = 1.0;
    bary[0] = bary[1] = 0.0;
    return c;
  }

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 && d2 - d6 > 0.0) {
    const double t = d2 / (d2 - d6);
    bary[0] = 1.0 - t;
    bary[1] = 0.0;
    bary[2] = t;
    return a + t * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 && (d4 - d3) + (d5 - d6) > 0.0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    bary[0] = 0.0;
    bary[1] = 1.0 - t;
    bary[2] = t;
    return b + t * (c - b);
  }

  const double denom = va + vb + vc;
  if (!(denom > 0.0)) {
    // Degenerate (collinear) triangle: best of the three edges.
    double e0[2], e1[2], e2[2];
    const Vec3 p0 = closest_on_segment(a, b, e0);
    const Vec3 p1 = closest_on_segment(a, c, e1);
    const Vec3 p2 = closest_on_segment(b, c, e2);
    const double n0 = p0.squaredNorm(), n1 = p1.squaredNorm(), n2 = p2.squaredNorm();
    if (n0 <= n1 && n0 <= n2) {
      bary[0] = e0[0];
      bary[1] = e0[1];
      bary[2] = 0.0;
      return p0;
    }
    if (n1 <= n2) {
      bary[0] = e1[0];
      bary[1] = 0.0;
      bary[2] = e1[1];
      return p1;
    }
    bary[0] = 0.0;
    bary[1] = e2[0];
    bary[2] = e2[1];
    return p2;
  }
  const double inv = 1.0 / denom;
  const double v = vb * inv, w = vc * inv;
  bary[0] = 1.0 - v - w;
  bary[1] = v;
  bary[2] = w;
  return a + ab * v + ac * w;
}

// Closest point to the origin on the current simplex. Reduces the simplex to
// the supporting feature and returns the closest point; sets contains_origin
// when the origin lies inside a non-degenerate tetrahedron.
Vec3 closest_on_simplex(Simplex& s, bool& contains_origin) {
  contains_origin = false;
  if (s.size == 1) return s.v[0].p;

  if (s.size == 2) {
    double bary[2];
    const Vec3 p = closest_on_segment(s.v[0].p, s.v[1].p, bary);
    Simplex out;
    for (int i = 0; i < 2; ++i)
      if (bary[i] > 0.0) out.v[out.size++] = s.v[i];
    if (out.size == 0) out.v[out.size++] = s.v[0];
    s = out;
    return p;
  }

  if (s.size == 3) {
    double bary[3];
    const Vec3 p = closest_on_triangle(s.v[0].p, s.v[1].p, s.v[2].p, bary);
    Simplex out;
    for (int i = 0; i < 3; ++i)
      if (bary[i] > 0.0) out.v[out.size++] = s.v[i];
    if (out.size == 0) out.v[out.size++] = s.v[0];
    s = out;
    return p;
  }

  // Tetrahedron: test the origin against each face; take the best face
  // candidate, or report containment when no face separates it.
  static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  const int opposite[4] = {3, 2, 1, 0};

  double best_sq = std::numeric_limits<double>::infinity();
  Vec3 best_p = Vec3::Zero();
  Simplex best_simplex;
  bool any_degenerate = false;
  bool outside_any = false;

  for (int f = 0; f < 4; ++f) {
    const Vec3& a = s.v[faces[f][0]].p;
    const Vec3& b = s.v[faces[f][1]].p;
    const Vec3& c = s.v[faces[f][2]].p;
    const Vec3& d = s.v[opposite[f]].p;
    const Vec3 n = (b - a).cross(c - a);
    const double signd = (d - a).dot(n);
    const double signp = (-a).dot(n);
    const double scale = n.norm() * (a.norm() + b.norm() + c.norm() + 1.0);
    const bool degenerate = std::abs(signd) <= 1e-14 * std::max(scale, 1e-30);
    if (degenerate) any_degenerate = true;
    const bool outside = !degenerate && signp * signd < 0.0;
    if (outside) outside_any = true;
    if (degenerate || outside) {
      double bary[3];
      const Vec3 p = closest_on_triangle(a, b, c, bary);
      const double sq = p.squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best_p = p;
        best_simplex.size = 0;
        for (int i = 0; i < 3; ++i)
          if (bary[i] > 0.0) best_simplex.v[best_simplex.size++] = s.v[faces[f][i]];
        if (best_simplex.size == 0) best_simplex.v[best_simplex.size++] = s.v[faces[f][0]];
      }
    }
  }

  if (!outside_any && !any_degenerate) {
    contains_origin = true;
    return Vec3::Zero();
  }
  s = best_simplex;
  return best_p;
}

}  // namespace

double gjk_distance(const ConvexHullShape& a, const ConvexHullShape& b) {
  if (a.vertices.empty() || b.vertices.empty())
    throw std::invalid_argument("gjk_distance: empty shape");

  Simplex simplex;
  simplex.v[0] = MinkowskiVertex{a.vertices[0] - b.vertices[0], 0, 0};
  simplex.size = 1;
  Vec3 v = simplex.v[0].p;

  for (int iter = 0; iter < kGjkMaxIter; ++iter) {
    const double vnorm2 = v.squaredNorm();
    if (vnorm2 <= kGjkZeroTol * kGjkZeroTol) return 0.0;

    const int ia = a.support(-v);
    const int ib = b.support(v);
    const Vec3 w = a.vertices[ia] - b.vertices[ib];

    // Support point already in the simplex: v is optimal for these polytopes.
    if (simplex.has_witness(ia, ib)) return std::sqrt(vnorm2);

    // Insufficient progress toward the origin.
    if (vnorm2 - v.dot(w) <= kGjkProgressTol * std::max(vnorm2, 1e-30))
      return std::sqrt(vnorm2);

    simplex.v[simplex.size++] = MinkowskiVertex{w, ia, ib};
    bool contains_origin = false;
    v = closest_on_simplex(simplex, contains_origin);
    if (contains_origin) return 0.0;
  }
  return v.norm();
}

namespace {

bool segment_hits_box(const Vec3& a, const Vec3& b, const Cuboid& box) {
  const Vec3 d = b - a;
  double tmin = 0.0, tmax = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (a[k] < box.min_corner[k] || a[k] > box.max_corner[k]) return false;
    } else {
      double t1 = (box.min_corner[k] - a[k]) / d[k];
      double t2 = (box.max_corner[k] - a[k]) / d[k];
      if (t1 > t2) std::swap(t1, t2);
      tmin = std::max(tmin, t1);
      tmax = std::min(tmax, t2);
      if (tmin > tmax) return false;
    }
  }
  return true;  // touching (tmin == tmax) counts as a hit
}

}  // namespace

bool segment_collision_free(const Vec3& a, const Vec3& b, const std::vector<Cuboid>& obstacles) {
  for (const auto& box : obstacles)
    if (segment_hits_box(a, b, box)) return false;
  return true;
}

Result<Vec3> sample_free(const FlightSpace& space, const std::vector<Cuboid>& inflated_obstacles,
                         Rng& rng) {
  constexpr int kMaxAttempts = 10000;
  const Vec3& lo = space.bounds.min_corner;
  const Vec3& hi = space.bounds.max_corner;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Vec3 p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                 rng.uniform(lo.z(), hi.z()));
    bool blocked = false;
    for (const auto& box : inflated_obstacles) {
      if (box.contains(p)) {
        blocked = true;
        break;
      }
    }
    if (!blocked) return p;
  }
  return Error{ErrorCode::sampling_exhausted,
               "sample_free: no free sample after 10000 attempts"};
}

}  // namespace quadplan
