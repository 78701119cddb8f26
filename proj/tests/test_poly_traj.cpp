#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>

#include "quadplan/poly_traj.hpp"
#include "quadplan/rng.hpp"

using namespace quadplan;

namespace {

double eval_poly(const Eigen::VectorXd& p, double t, int k) {
  double acc = 0.0;
  for (int a = static_cast<int>(p.size()) - 1; a >= k; --a) {
    double fact = 1.0;
    for (int q = 0; q < k; ++q) fact *= a - q;
    acc = acc * t + fact * p[a];
  }
  return acc;
}

// Adaptive Simpson quadrature, the independent route for the cost integral.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, fm, flm, eps / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, fb, frm, eps / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  const double m = 0.5 * (a + b);
  // Crude scale estimate so the refinement target is relative.
  const double scale = std::abs(f(a)) + std::abs(f(m)) + std::abs(f(b)) + 1.0;
  return adaptive_simpson(f, a, b, f(a), f(b), f(m), 1e-12 * scale * (b - a), 30);
}

// k-th derivative by Richardson-extrapolated central differences. The
// extrapolation removes the h^2, h^4, and h^6 terms, which makes the result
// exact for polynomials up to degree 7 aside from rounding.
double fd_derivative(const std::function<double(double)>& f, double x, int k, double h0 = 0.4) {
  if (k == 0) return f(x);
  auto stencil = [&](double h) {
    double sum = 0.0, binom = 1.0;
    for (int i = 0; i <= k; ++i) {
      sum += (i % 2 == 0 ? 1.0 : -1.0) * binom * f(x + (0.5 * k - i) * h);
      binom *= static_cast<double>(k - i) / (i + 1);
    }
    return sum / std::pow(h, k);
  };
  double d[4];
  for (int j = 0; j < 4; ++j) d[j] = stencil(h0 / std::pow(2.0, j));
  for (int level = 1; level < 4; ++level) {
    const double factor = std::pow(4.0, level);
    for (int j = 0; j + level < 4; ++j) d[j] = (factor * d[j + 1] - d[j]) / (factor - 1.0);
  }
  return d[0];
}

Eigen::VectorXd random_coeffs(Rng& rng, int n) {
  Eigen::VectorXd p(n + 1);
  for (int i = 0; i <= n; ++i) p[i] = rng.uniform(-2.0, 2.0);
  return p;
}

// Constraint matrix of the joint QP rebuilt independently from endpoint_map
// rows in plain local time, for feasibility and null-space checks.
void build_constraints(const std::vector<double>& waypoints, const std::vector<double>& times,
                       const Eigen::VectorXd& start, const Eigen::VectorXd& end, int n, int nc,
                       Eigen::MatrixXd& C, Eigen::VectorXd& b) {
  const int S = static_cast<int>(times.size());
  const int ncoef = n + 1;
  const int ncon = static_cast<int>(start.size() + end.size()) + 2 * (S - 1) + nc * (S - 1);
  C = Eigen::MatrixXd::Zero(ncon, S * ncoef);
  b = Eigen::VectorXd::Zero(ncon);
  int row = 0;
  for (int k = 0; k < start.size(); ++k) {
    C.block(row, 0, 1, ncoef) = endpoint_map(n, times[0], k).row(k);
    b[row++] = start[k];
  }
  for (int k = 0; k < end.size(); ++k) {
    C.block(row, (S - 1) * ncoef, 1, ncoef) =
        endpoint_map(n, times[S - 1], k).row(2 * k + 1).eval();
    b[row++] = end[k];
  }
  for (int i = 0; i + 1 < S; ++i) {
    const Eigen::MatrixXd am = endpoint_map(n, times[i], nc);
    const Eigen::MatrixXd ap = endpoint_map(n, times[i + 1], nc);
    C.block(row, i * ncoef, 1, ncoef) = am.row(nc + 1);  // value at T of segment i
    b[row++] = waypoints[i + 1];
    C.block(row, (i + 1) * ncoef, 1, ncoef) = ap.row(0);  // value at 0 of segment i+1
    b[row++] = waypoints[i + 1];
    for (int k = 1; k <= nc; ++k) {
      C.block(row, i * ncoef, 1, ncoef) = am.row(nc + 1 + k);
      C.block(row, (i + 1) * ncoef, 1, ncoef) = -ap.row(k);
      b[row++] = 0.0;
    }
  }
}

double qp_cost(const PiecewiseTrajectory& traj, const Eigen::VectorXd& weights) {
  double cost = 0.0;
  for (int j = 0; j < traj.segment_count(); ++j) {
    const double T = traj.knots()[j + 1] - traj.knots()[j];
    const Eigen::MatrixXd Q = cost_matrix(traj.order(), weights, T);
    cost += traj.coefficients()[j].dot(Q * traj.coefficients()[j]);
  }
  return cost;
}

}  // namespace

TEST_CASE("segment_times: distance, yaw, and floor terms") {
  SplineConfig cfg = SplineConfig::position_default();
  cfg.avg_speed = 1.0;
  cfg.avg_yaw_rate = 1.0;
  cfg.min_segment_time = 0.1;

  const auto t1 = segment_times({Vec3(0, 0, 0), Vec3(2, 0, 0)}, {0.0, 0.0}, cfg);
  CHECK(t1[0] == doctest::Approx(2.0));

  const auto t2 = segment_times({Vec3(1, 1, 1), Vec3(1, 1, 1)}, {0.0, 0.0}, cfg);
  CHECK(t2[0] == doctest::Approx(0.1));

  const auto t3 = segment_times({Vec3(0, 0, 0), Vec3(0.01, 0, 0)}, {0.0, M_PI_2}, cfg);
  CHECK(t3[0] == doctest::Approx(M_PI_2));

  cfg.avg_speed = -1.0;
  CHECK_THROWS_AS(segment_times({Vec3(0, 0, 0), Vec3(1, 0, 0)}, {0.0, 0.0}, cfg),
                  std::invalid_argument);
}

TEST_CASE("cost_matrix: n=1 hand integration and structure") {
  Eigen::VectorXd w(1);
  w << 1.0;
  const Eigen::MatrixXd Q = cost_matrix(1, w, 2.5);
  CHECK(Q(0, 0) == 0.0);
  CHECK(Q(0, 1) == 0.0);
  CHECK(Q(1, 0) == 0.0);
  CHECK(Q(1, 1) == doctest::Approx(2.5));

  // Derivatives annihilate constants: first row and column stay zero.
  Eigen::VectorXd w7 = Eigen::VectorXd::Zero(7);
  w7[3] = 1.0;
  const Eigen::MatrixXd Q7 = cost_matrix(7, w7, 1.7);
  CHECK(Q7.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Q7.col(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cost_matrix matches adaptive quadrature of the squared derivative") {
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 7;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w[3] = 1.0;  // w_4
    const double T = 1.3;
    const Eigen::VectorXd p = random_coeffs(rng, n);
    const Eigen::MatrixXd Q = cost_matrix(n, w, T);
    const double algebraic = p.dot(Q * p);
    const double quad = integrate(
        [&](double t) {
          const double d4 = eval_poly(p, t, 4);
          return d4 * d4;
        },
        0.0, T);
    CHECK(algebraic == doctest::Approx(quad).epsilon(1e-9));
  }
}

TEST_CASE("cost_matrix with mixed weights against quadrature") {
  Rng rng(52);
  const int n = 7;
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.uniform(0.0, 1.0);
  const double T = 0.8;
  const Eigen::VectorXd p = random_coeffs(rng, n);
  const double algebraic = p.dot(cost_matrix(n, w, T) * p);
  const double quad = integrate(
      [&](double t) {
        double sum = 0.0;
        for (int i = 1; i <= n; ++i) {
          const double d = eval_poly(p, t, i);
          sum += w[i - 1] * d * d;
        }
        return sum;
      },
      0.0, T);
  CHECK(algebraic == doctest::Approx(quad).epsilon(1e-9));
}

TEST_CASE("cost_matrix is symmetric positive semidefinite") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 7;
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = rng.uniform(0.0, 2.0);
    const Eigen::MatrixXd Q = cost_matrix(n, w, rng.uniform(0.2, 3.0));
    CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * Q.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("endpoint_map: small cases and Taylor rows") {
  const Eigen::MatrixXd A = endpoint_map(1, 1.0, 0);
  CHECK(A.rows() == 2);
  CHECK(A(0, 0) == 1.0);
  CHECK(A(0, 1) == 0.0);
  CHECK(A(1, 0) == 1.0);
  CHECK(A(1, 1) == 1.0);

  // Row of derivative k at t = 0 is k! e_k.
  const int n = 7, nc = 4;
  const Eigen::MatrixXd A7 = endpoint_map(n, 2.0, nc);
  double kfact = 1.0;
  for (int k = 0; k <= nc; ++k) {
    if (k > 0) kfact *= k;
    for (int a = 0; a <= n; ++a)
      CHECK(A7(k, a) == doctest::Approx(a == k ? kfact : 0.0));
  }
}

TEST_CASE("endpoint_map matches finite differences at the endpoints") {
  Rng rng(54);
  const int n = 7, nc = 4;
  const double T = 1.4;
  const Eigen::VectorXd p = random_coeffs(rng, n);
  const Eigen::MatrixXd A = endpoint_map(n, T, nc);
  const Eigen::VectorXd d = A * p;

  auto value_at = [&](double t) { return eval_poly(p, t, 0); };
  for (int k = 0; k <= nc; ++k) {
    CHECK(std::abs(d[k] - fd_derivative(value_at, 0.0, k)) <= 1e-6);
    CHECK(std::abs(d[nc + 1 + k] - fd_derivative(value_at, T, k)) <= 1e-6);
  }
}

TEST_CASE("optimize_spline: single-segment rest-to-rest equals the Hermite solve") {
  SplineConfig cfg = SplineConfig::position_default();
  cfg.continuity = 3;  // order-3 endpoint pins keep one degree-7 segment well-posed

  const std::vector<double> wp{0.0, 2.0};
  const std::vector<double> times{1.7};
  const auto sol = optimize_spline(wp, times, BoundaryState::rest(0.0, 3),
                                   BoundaryState::rest(2.0, 3), cfg);
  REQUIRE(sol.has_value());

  // Independent dense 8x8 solve of the fully determined Hermite conditions.
  const int n = 7;
  Eigen::MatrixXd A(8, 8);
  Eigen::VectorXd rhs(8);
  const Eigen::MatrixXd ep = endpoint_map(n, times[0], 3);
  A.topRows(4) = ep.topRows(4);
  A.bottomRows(4) = ep.bottomRows(4);
  rhs << 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0;
  const Eigen::VectorXd hermite = A.fullPivLu().solve(rhs);

  for (double t = 0.0; t <= times[0] + 1e-12; t += 0.05)
    CHECK(sol.value().trajectory.evaluate(t) ==
          doctest::Approx(eval_poly(hermite, t, 0)).epsilon(1e-8));
}

TEST_CASE("optimize_spline: equal waypoints with zero boundaries give a constant") {
  SplineConfig cfg = SplineConfig::position_default();
  const std::vector<double> wp{1.5, 1.5, 1.5, 1.5};
  const std::vector<double> times{1.0, 0.7, 1.3};
  const auto sol = optimize_spline(wp, times, BoundaryState::rest(1.5, 4),
                                   BoundaryState::rest(1.5, 4), cfg);
  REQUIRE(sol.has_value());
  CHECK(sol.value().cost <= 1e-16);
  for (double t = 0.0; t <= 3.0; t += 0.1) {
    CHECK(sol.value().trajectory.evaluate(t, 0) == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(sol.value().trajectory.evaluate(t, 1) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("optimize_spline: interpolation, continuity, and KKT residual on random instances") {
  Rng rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform(0.0, 8.99));
    std::vector<double> wp(m), times(m - 1);
    for (int i = 0; i < m; ++i) wp[i] = rng.uniform(-3.0, 3.0);
    for (int i = 0; i + 1 < m; ++i) times[i] = rng.uniform(0.5, 2.5);

    SplineConfig cfg = SplineConfig::position_default();
    const int border = max_boundary_order(cfg.order, cfg.continuity, m - 1);
    const auto sol = optimize_spline(wp, times, BoundaryState::rest(wp.front(), border),
                                     BoundaryState::rest(wp.back(), border), cfg);
    REQUIRE(sol.has_value());
    const auto& traj = sol.value().trajectory;

    CHECK(sol.value().kkt_residual <= 1e-8);
    for (int i = 0; i < m; ++i)
      CHECK(std::abs(traj.evaluate(traj.knots()[i]) - wp[i]) <= 1e-6);

    // Left/right limits via the neighboring segments' coefficients.
    for (int j = 0; j + 1 < traj.segment_count(); ++j) {
      const double T = traj.knots()[j + 1] - traj.knots()[j];
      for (int k = 0; k <= cfg.continuity; ++k) {
        const double left = eval_poly(traj.coefficients()[j], T, k);
        const double right = eval_poly(traj.coefficients()[j + 1], 0.0, k);
        CHECK(std::abs(left - right) <= 1e-6);
      }
    }
  }
}

TEST_CASE("optimize_spline cost never beaten by feasible null-space perturbations") {
  Rng rng(56);
  for (int instance = 0; instance < 5; ++instance) {
    const int m = 3;
    std::vector<double> wp{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> times{rng.uniform(0.6, 1.6), rng.uniform(0.6, 1.6)};
    SplineConfig cfg = SplineConfig::position_default();

    const auto sol = optimize_spline(wp, times, BoundaryState::rest(wp.front(), 4),
                                     BoundaryState::rest(wp.back(), 4), cfg);
    REQUIRE(sol.has_value());
    const double base_cost = sol.value().cost;

    Eigen::MatrixXd C;
    Eigen::VectorXd b;
    Eigen::VectorXd sb = Eigen::VectorXd::Zero(5), eb = Eigen::VectorXd::Zero(5);
    sb[0] = wp.front();
    eb[0] = wp.back();
    build_constraints(wp, times, sb, eb, cfg.order, cfg.continuity, C, b);

    Eigen::VectorXd flat(C.cols());
    for (int j = 0; j < 2; ++j) flat.segment(j * 8, 8) = sol.value().trajectory.coefficients()[j];
    CHECK((C * flat - b).cwiseAbs().maxCoeff() <= 1e-7);

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
    const Eigen::MatrixXd N = lu.kernel();
    REQUIRE(N.cols() > 0);

    for (int k = 0; k < 1000; ++k) {
      Eigen::VectorXd z(N.cols());
      for (int i = 0; i < z.size(); ++i) z[i] = rng.uniform(-0.5, 0.5);
      const Eigen::VectorXd perturbed = flat + N * z;
      std::vector<Eigen::VectorXd> coeffs{perturbed.segment(0, 8), perturbed.segment(8, 8)};
      const PiecewiseTrajectory alt({0.0, times[0], times[0] + times[1]}, coeffs);
      CHECK(qp_cost(alt, cfg.weights) >= base_cost - 1e-8 * std::max(1.0, base_cost));
    }
  }
}

TEST_CASE("constructor and argument validation") {
  // Knot/segment mismatch and non-increasing knots are rejected.
  std::vector<Eigen::VectorXd> one{Eigen::VectorXd::Zero(8)};
  CHECK_THROWS_AS(PiecewiseTrajectory({0.0, 1.0, 2.0}, one), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseTrajectory({1.0, 1.0}, one), std::invalid_argument);

  SplineConfig cfg = SplineConfig::position_default();
  cfg.weights = Eigen::VectorXd::Zero(3);  // wrong length for order 7
  CHECK_THROWS_AS(optimize_spline({0.0, 1.0}, {1.0}, BoundaryState::rest(0.0, 3),
                                  BoundaryState::rest(1.0, 3), cfg),
                  std::invalid_argument);

  cfg = SplineConfig::position_default();
  CHECK_THROWS_AS(optimize_spline({0.0, 1.0}, {-1.0}, BoundaryState::rest(0.0, 3),
                                  BoundaryState::rest(1.0, 3), cfg),
                  std::invalid_argument);
  // Boundary value disagreeing with the end waypoint is caller error.
  CHECK_THROWS_AS(optimize_spline({0.0, 1.0}, {1.0}, BoundaryState::rest(0.5, 3),
                                  BoundaryState::rest(1.0, 3), cfg),
                  std::invalid_argument);
}

TEST_CASE("optimize_spline reports over-constrained single segments") {
  SplineConfig cfg = SplineConfig::position_default();  // n_c = 4
  const auto sol = optimize_spline({0.0, 1.0}, {1.0}, BoundaryState::rest(0.0, 4),
                                   BoundaryState::rest(1.0, 4), cfg);
  REQUIRE_FALSE(sol.has_value());
  CHECK(sol.error().code == ErrorCode::singular);
  CHECK(sol.error().message.find("segment 0") != std::string::npos);
}

TEST_CASE("evaluate: constants, ramps, and the finite-difference oracle") {
  std::vector<Eigen::VectorXd> coeffs{(Eigen::VectorXd(3) << 2.0, 0.0, 0.0).finished()};
  const PiecewiseTrajectory constant({0.0, 2.0}, coeffs);
  CHECK(constant.evaluate(1.3, 0) == doctest::Approx(2.0));
  CHECK(constant.evaluate(1.3, 1) == doctest::Approx(0.0));
  CHECK(constant.evaluate(1.3, 2) == doctest::Approx(0.0));

  std::vector<Eigen::VectorXd> ramp_c{(Eigen::VectorXd(3) << 0.0, 1.0, 0.0).finished()};
  const PiecewiseTrajectory ramp({0.0, 2.0}, ramp_c);
  for (double t = 0.0; t <= 2.0; t += 0.25) CHECK(ramp.evaluate(t, 1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(ramp.evaluate(-0.5), std::out_of_range);
  CHECK_THROWS_AS(ramp.evaluate(2.5), std::out_of_range);

  // Random spline: first derivative vs central differences of the value.
  Rng rng(57);
  std::vector<double> wp{0.0, 1.0, -0.5, 2.0};
  std::vector<double> times{1.0, 1.2, 0.9};
  SplineConfig cfg = SplineConfig::position_default();
  const auto sol = optimize_spline(wp, times, BoundaryState::rest(wp.front(), 4),
                                   BoundaryState::rest(wp.back(), 4), cfg);
  REQUIRE(sol.has_value());
  const auto& traj = sol.value().trajectory;
  const double h = 1e-6;
  for (double t = 0.05; t < traj.end_time() - 0.05; t += 0.07) {
    const double fd = (traj.evaluate(t + h) - traj.evaluate(t - h)) / (2.0 * h);
    CHECK(traj.evaluate(t, 1) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("time scaling: doubled durations reproduce the path at 2t") {
  Rng rng(58);
  std::vector<double> wp{0.0, 1.2, 0.3, 1.8};
  std::vector<double> times{0.8, 1.1, 0.9};
  std::vector<double> doubled{1.6, 2.2, 1.8};
  SplineConfig cfg = SplineConfig::position_default();  // single weight w_4

  const auto a = optimize_spline(wp, times, BoundaryState::rest(wp.front(), 4),
                                 BoundaryState::rest(wp.back(), 4), cfg);
  const auto b = optimize_spline(wp, doubled, BoundaryState::rest(wp.front(), 4),
                                 BoundaryState::rest(wp.back(), 4), cfg);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  for (double t = 0.0; t <= a.value().trajectory.end_time() + 1e-12; t += 0.05) {
    const double ta = std::min(t, a.value().trajectory.end_time());
    CHECK(b.value().trajectory.evaluate(2.0 * ta) ==
          doctest::Approx(a.value().trajectory.evaluate(ta)).epsilon(1e-6));
  }
}

TEST_CASE("optimize_spline runtime stays under 10 ms per solve") {
  Rng rng(59);
  SplineConfig cfg = SplineConfig::position_default();
  std::vector<double> wp(10), times(9);
  for (int i = 0; i < 10; ++i) wp[i] = rng.uniform(-3, 3);
  for (int i = 0; i < 9; ++i) times[i] = rng.uniform(0.5, 2.0);

  const auto t0 = std::chrono::steady_clock::now();
  for (int rep = 0; rep < 20; ++rep) {
    const auto sol = optimize_spline(wp, times, BoundaryState::rest(wp.front(), 4),
                                     BoundaryState::rest(wp.back(), 4), cfg);
    REQUIRE(sol.has_value());
  }
  const auto t1 = std::chrono::steady_clock::now();
  CHECK(std::chrono::duration<double, std::milli>(t1 - t0).count() / 20.0 < 10.0);
}
