#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "quadplan/geometry.hpp"
#include "support/test_util.hpp"

using namespace quadplan;
using test::aabb_gap_distance;
using test::random_box;
using test::random_point;

namespace {
const Cuboid unit_cube{Vec3(0, 0, 0), Vec3(1, 1, 1)};
const Cuboid centered_cube{Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)};
}  // namespace

TEST_CASE("inflate: identity, uniform growth, volume") {
  const Cuboid same = inflate(unit_cube, 0.0);
  CHECK(same.min_corner == unit_cube.min_corner);
  CHECK(same.max_corner == unit_cube.max_corner);

  const Cuboid grown = inflate(unit_cube, 0.1);
  CHECK(grown.min_corner.isApprox(Vec3(-0.1, -0.1, -0.1)));
  CHECK(grown.max_corner.isApprox(Vec3(1.1, 1.1, 1.1)));

  CHECK_THROWS_AS(inflate(unit_cube, -0.01), std::invalid_argument);

  // Closed-form volume oracle: each axis extent grows by 2 m.
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Cuboid box = random_box(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3), 2.0);
    const double m = rng.uniform(0.0, 1.5);
    const Cuboid big = inflate(box, m);
    double expected = 1.0;
    for (int k = 0; k < 3; ++k) expected *= box.extents()[k] + 2.0 * m;
    CHECK(big.volume() == doctest::Approx(expected).epsilon(1e-12));
    CHECK((big.min_corner.array() <= box.min_corner.array()).all());
    CHECK((big.max_corner.array() >= box.max_corner.array()).all());
  }
}

TEST_CASE("inflate is monotone in the margin") {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Cuboid box = random_box(rng, Vec3(-2, -2, -2), Vec3(2, 2, 2), 1.5);
    const double m1 = rng.uniform(0.0, 1.0);
    const double m2 = m1 + rng.uniform(0.0, 1.0);
    const Cuboid a = inflate(box, m1), b = inflate(box, m2);
    CHECK((b.min_corner.array() <= a.min_corner.array()).all());
    CHECK((b.max_corner.array() >= a.max_corner.array()).all());
  }
}

TEST_CASE("gjk: axis-aligned face distance and touching hulls") {
  CHECK(gjk_distance(ConvexHullShape::point(Vec3(2, 0, 0)),
                     ConvexHullShape::cuboid(centered_cube)) == doctest::Approx(1.5).epsilon(1e-12));

  const Cuboid right{Vec3(1, 0, 0), Vec3(2, 1, 1)};  // shares the x = 1 face
  CHECK(gjk_distance(ConvexHullShape::cuboid(unit_cube), ConvexHullShape::cuboid(right)) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gjk matches the analytic clamp oracle on random point-box pairs") {
  Rng rng(21);
  for (int i = 0; i < 10000; ++i) {
    const Cuboid box = random_box(rng, Vec3(-4, -4, -4), Vec3(4, 4, 4), 3.0);
    const Vec3 p = random_point(rng, Vec3(-6, -6, -6), Vec3(6, 6, 6));
    const double expected = point_to_cuboid_distance(p, box);
    const double got = gjk_distance(ConvexHullShape::point(p), ConvexHullShape::cuboid(box));
    CHECK(std::abs(got - expected) <= 1e-9);
  }
}

TEST_CASE("gjk matches the interval-gap oracle on random box pairs") {
  Rng rng(22);
  for (int i = 0; i < 10000; ++i) {
    const Cuboid a = random_box(rng, Vec3(-4, -4, -4), Vec3(4, 4, 4), 2.5);
    const Cuboid b = random_box(rng, Vec3(-4, -4, -4), Vec3(4, 4, 4), 2.5);
    const double expected = aabb_gap_distance(a, b);
    const double got = gjk_distance(ConvexHullShape::cuboid(a), ConvexHullShape::cuboid(b));
    CHECK(std::abs(got - expected) <= 1e-9);
  }
}

TEST_CASE("gjk is symmetric") {
  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    const Cuboid a = random_box(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3), 2.0);
    const Cuboid b = random_box(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3), 2.0);
    const auto ha = ConvexHullShape::cuboid(a), hb = ConvexHullShape::cuboid(b);
    CHECK(std::abs(gjk_distance(ha, hb) - gjk_distance(hb, ha)) <= 1e-12);
  }
}

TEST_CASE("segment slab test: piercing, clear, and touching") {
  const std::vector<Cuboid> obs{centered_cube};
  CHECK_FALSE(segment_collision_free(Vec3(-1, 0, 0), Vec3(1, 0, 0), obs));
  CHECK(segment_collision_free(Vec3(-1, 0, 2), Vec3(1, 0, 2), obs));
  CHECK(segment_collision_free(Vec3(-1, 0, 0), Vec3(1, 0, 0), {}));

  // Contact counts as collision, consistent with gjk == 0 on touch.
  CHECK_FALSE(segment_collision_free(Vec3(-1, 0, 0.5), Vec3(1, 0, 0.5), obs));
  CHECK(gjk_distance(ConvexHullShape::segment(Vec3(-1, 0, 0.5), Vec3(1, 0, 0.5)),
                     ConvexHullShape::cuboid(centered_cube)) == doctest::Approx(0.0));
}

TEST_CASE("segment slab test agrees with a dense sampling oracle") {
  Rng rng(31);
  int disagreements = 0;
  for (int i = 0; i < 1000; ++i) {
    const Cuboid box = random_box(rng, Vec3(-2, -2, -2), Vec3(2, 2, 2), 2.0);
    const Vec3 a = random_point(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3));
    const Vec3 b = random_point(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3));

    const bool slab_free = segment_collision_free(a, b, {box});

    // 1 mm sampling oracle.
    const double len = (b - a).norm();
    const int steps = std::max(2, static_cast<int>(std::ceil(len / 0.001)));
    bool sampled_hit = false;
    for (int k = 0; k <= steps; ++k) {
      const Vec3 p = a + (b - a) * (static_cast<double>(k) / steps);
      if (box.contains(p)) {
        sampled_hit = true;
        break;
      }
    }

    if (slab_free == sampled_hit) {
      // A disagreement is only legitimate for a graze the 1 mm net can miss:
      // the segment must pass within 2 mm of the box either way.
      const double d = gjk_distance(ConvexHullShape::segment(a, b), ConvexHullShape::cuboid(box));
      CHECK(d <= 2e-3);
      ++disagreements;
    }
  }
  CHECK(disagreements <= 5);
}

TEST_CASE("sample_free: containment, rejection, determinism, exhaustion") {
  const FlightSpace space{Cuboid{Vec3(0, 0, 0), Vec3(4, 2, 2)}};

  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    const auto p = sample_free(space, {}, rng);
    REQUIRE(p.has_value());
    CHECK(space.contains(p.value()));
  }

  // Obstacle filling the left half: every sample lands right of it.
  const std::vector<Cuboid> left_half{Cuboid{Vec3(0, 0, 0), Vec3(2, 2, 2)}};
  Rng rng2(42);
  for (int i = 0; i < 10000; ++i) {
    const auto p = sample_free(space, left_half, rng2);
    REQUIRE(p.has_value());
    CHECK(p.value().x() > 2.0);
  }

  Rng ra(7), rb(7);
  for (int i = 0; i < 50; ++i)
    CHECK(sample_free(space, left_half, ra).value() == sample_free(space, left_half, rb).value());

  // Fully occupied space exhausts the attempt cap.
  const std::vector<Cuboid> everything{Cuboid{Vec3(-1, -1, -1), Vec3(5, 3, 3)}};
  Rng rng3(43);
  const auto failed = sample_free(space, everything, rng3);
  REQUIRE_FALSE(failed.has_value());
  CHECK(failed.error().code == ErrorCode::sampling_exhausted);
}

TEST_CASE("gjk on degenerate single-point shapes") {
  const auto a = ConvexHullShape::point(Vec3(1, 2, 3));
  const auto b = ConvexHullShape::point(Vec3(1, 2, 3));
  CHECK(gjk_distance(a, b) == doctest::Approx(0.0));
  const auto c = ConvexHullShape::point(Vec3(4, 2, 3));
  CHECK(gjk_distance(a, c) == doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(gjk_distance(a, ConvexHullShape{}), std::invalid_argument);
}
