#include "quadplan/poly_traj.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace quadplan {

SplineConfig SplineConfig::position_default() {
  SplineConfig c;
  c.order = 7;
  c.continuity = 4;
  c.weights = Eigen::VectorXd::Zero(7);
  c.weights[3] = 1.0;  // w_4: minimum snap
  c.avg_speed = 1.0;
  c.avg_yaw_rate = 1.0;
  c.min_segment_time = 0.4;
  return c;
}

SplineConfig SplineConfig::yaw_default() {
  SplineConfig c;
  c.order = 7;
  c.continuity = 2;
  c.weights = Eigen::VectorXd::Zero(7);
  c.weights[1] = 1.0;  // w_2: minimum angular acceleration
  c.avg_speed = 1.0;
  c.avg_yaw_rate = 1.0;
  c.min_segment_time = 0.4;
  return c;
}

PiecewiseTrajectory::PiecewiseTrajectory(std::vector<double> knots,
                                         std::vector<Eigen::VectorXd> coefficients)
    : knots_(std::move(knots)), coefficients_(std::move(coefficients)) {
  if (knots_.size() != coefficients_.size() + 1 || coefficients_.empty())
    throw std::invalid_argument("PiecewiseTrajectory: knot/segment count mismatch");
  for (std::size_t j = 0; j + 1 < knots_.size(); ++j)
    if (!(knots_[j] < knots_[j + 1]))
      throw std::invalid_argument("PiecewiseTrajectory: knots not increasing");
}

double PiecewiseTrajectory::evaluate(double t, int derivative) const {
  constexpr double kEdgeTol = 1e-9;
  if (t < knots_.front() - kEdgeTol || t > knots_.back() + kEdgeTol)
    throw std::out_of_range("PiecewiseTrajectory::evaluate: t outside span");
  t = std::clamp(t, knots_.front(), knots_.back());
  if (derivative < 0 || derivative > order())
    throw std::out_of_range("PiecewiseTrajectory::evaluate: derivative order");

  // Right-continuous segment lookup; t == t_M evaluates the last segment.
  int j = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), t) - knots_.begin()) - 1;
  j = std::clamp(j, 0, segment_count() - 1);

  const Eigen::VectorXd& p = coefficients_[j];
  const double tau = t - knots_[j];
  const int n = static_cast<int>(p.size()) - 1;

  // Horner on the derivative polynomial.
  double acc = 0.0;
  for (int a = n; a >= derivative; --a) {
    double fact = 1.0;
    for (int q = 0; q < derivative; ++q) fact *= static_cast<double>(a - q);
    acc = acc * tau + fact * p[a];
  }
  return acc;
}

std::vector<double> segment_times(const std::vector<Vec3>& positions,
                                  const std::vector<double>& yaws, const SplineConfig& config) {
  if (positions.size() < 2) throw std::invalid_argument("segment_times: need >= 2 waypoints");
  if (yaws.size() != positions.size())
    throw std::invalid_argument("segment_times: yaw/position count mismatch");
  if (config.avg_speed <= 0.0 || config.avg_yaw_rate <= 0.0 || config.min_segment_time <= 0.0)
    throw std::invalid_argument("segment_times: non-positive speed, yaw rate, or floor");

  std::vector<double> times(positions.size() - 1);
  for (std::size_t j = 0; j + 1 < positions.size(); ++j) {
    const double dist = (positions[j + 1] - positions[j]).norm();
    const double dyaw = std::abs(yaws[j + 1] - yaws[j]);
    times[j] = std::max({dist / config.avg_speed, dyaw / config.avg_yaw_rate,
                         config.min_segment_time});
  }
  return times;
}

namespace {

// a! / (a - k)!; 1 for k == 0.
double falling_factorial(int a, int k) {
  double f = 1.0;
  for (int q = 0; q < k; ++q) f *= static_cast<double>(a - q);
  return f;
}

// Row of derivative order k evaluated at local time tau, ascending powers.
Eigen::RowVectorXd derivative_row(int order, int k, double tau) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(order + 1);
  for (int a = k; a <= order; ++a)
    row[a] = falling_factorial(a, k) * std::pow(tau, a - k);
  return row;
}

}  // namespace

Eigen::MatrixXd cost_matrix(int order, const Eigen::VectorXd& weights, double T) {
  if (T <= 0.0) throw std::invalid_argument("cost_matrix: T must be positive");
  if (weights.size() != order)
    throw std::invalid_argument("cost_matrix: need one weight per derivative 1..n");

  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(order + 1, order + 1);
  for (int i = 1; i <= order; ++i) {
    const double w = weights[i - 1];
    if (w == 0.0) continue;
    for (int a = i; a <= order; ++a) {
      const double ca = falling_factorial(a, i);
      for (int b = i; b <= order; ++b) {
        const double cb = falling_factorial(b, i);
        const int e = a + b - 2 * i + 1;
        Q(a, b) += w * ca * cb * std::pow(T, e) / static_cast<double>(e);
      }
    }
  }
  return Q;
}

Eigen::MatrixXd endpoint_map(int order, double T, int max_derivative) {
  if (T <= 0.0) throw std::invalid_argument("endpoint_map: T must be positive");
  Eigen::MatrixXd A(2 * (max_derivative + 1), order + 1);
  for (int k = 0; k <= max_derivative; ++k) {
    A.row(k) = derivative_row(order, k, 0.0);
    A.row(max_derivative + 1 + k) = derivative_row(order, k, T);
  }
  return A;
}

int max_boundary_order(int order, int continuity, int segment_count) {
  if (segment_count >= 2) return continuity;
  return std::min(continuity, (order - 1) / 2);
}

Result<SplineSolution> optimize_spline(const std::vector<double>& waypoints,
                                       const std::vector<double>& times,
                                       const BoundaryState& start, const BoundaryState& end,
                                       const SplineConfig& config, double t0) {
  const int M = static_cast<int>(waypoints.size());
  const int S = M - 1;  // segment count
  const int n = config.order;
  const int nc = config.continuity;
  const int ncoef = n + 1;

  if (M < 2) throw std::invalid_argument("optimize_spline: need >= 2 waypoints");
  if (static_cast<int>(times.size()) != S)
    throw std::invalid_argument("optimize_spline: time count must be waypoint count - 1");
  for (double T : times)
    if (T <= 0.0) throw std::invalid_argument("optimize_spline: non-positive segment time");
  if (config.weights.size() != n || config.weights.maxCoeff() <= 0.0)
    throw std::invalid_argument("optimize_spline: need n weights with at least one positive");
  if (nc < 0 || nc > n) throw std::invalid_argument("optimize_spline: bad continuity order");
  if (start.order() > nc || end.order() > nc)
    throw std::invalid_argument("optimize_spline: boundary order exceeds continuity order");
  if (std::abs(start.derivatives[0] - waypoints.front()) > 1e-9 ||
      std::abs(end.derivatives[0] - waypoints.back()) > 1e-9)
    throw std::invalid_argument("optimize_spline: boundary values disagree with end waypoints");

  // Segment endpoint conditions cannot exceed the coefficient count for a
  // single segment; the joint QP couples everything else.
  if (S == 1 && start.derivatives.size() + end.derivatives.size() > ncoef) {
    return Error{ErrorCode::singular,
                 "optimize_spline: segment 0 is over-constrained (" +
                     std::to_string(start.derivatives.size() + end.derivatives.size()) +
                     " endpoint conditions, " + std::to_string(ncoef) + " coefficients)"};
  }

  // Variables are coefficients in time normalized per segment, s = tau / T_j;
  // global-time Vandermonde systems are too ill-conditioned at order 7.
  const int nvar = S * ncoef;
  int ncon = static_cast<int>(start.derivatives.size() + end.derivatives.size());
  ncon += 2 * (M - 2);   // interior waypoints pinned from both sides
  ncon += nc * (M - 2);  // derivative continuity at interior knots

  if (ncon > nvar) {
    return Error{ErrorCode::singular,
                 "optimize_spline: constraint count " + std::to_string(ncon) +
                     " exceeds variable count " + std::to_string(nvar)};
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nvar, nvar);
  for (int j = 0; j < S; ++j) {
    // Normalized-time cost: d^i/dt^i scales by T^-i and dt by T, so weight i
    // picks up T^(1-2i).
    Eigen::VectorXd w_scaled(n);
    for (int i = 1; i <= n; ++i) w_scaled[i - 1] = config.weights[i - 1] * std::pow(times[j], 1 - 2 * i);
    H.block(j * ncoef, j * ncoef, ncoef, ncoef) = 2.0 * cost_matrix(n, w_scaled, 1.0);
  }

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(ncon, nvar);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ncon);
  int row = 0;

  auto scaled_row = [&](int segment, int k, double s_local) {
    return (derivative_row(n, k, s_local) / std::pow(times[segment], k)).eval();
  };

  for (int k = 0; k < start.derivatives.size(); ++k) {
    C.block(row, 0, 1, ncoef) = scaled_row(0, k, 0.0);
    b[row++] = start.derivatives[k];
  }
  for (int k = 0; k < end.derivatives.size(); ++k) {
    C.block(row, (S - 1) * ncoef, 1, ncoef) = scaled_row(S - 1, k, 1.0);
    b[row++] = end.derivatives[k];
  }
  for (int i = 0; i + 1 < S; ++i) {  // junction i joins segments i and i+1 at waypoint i+1
    C.block(row, i * ncoef, 1, ncoef) = scaled_row(i, 0, 1.0);
    b[row++] = waypoints[i + 1];
    C.block(row, (i + 1) * ncoef, 1, ncoef) = scaled_row(i + 1, 0, 0.0);
    b[row++] = waypoints[i + 1];
    for (int k = 1; k <= nc; ++k) {
      C.block(row, i * ncoef, 1, ncoef) = scaled_row(i, k, 1.0);
      C.block(row, (i + 1) * ncoef, 1, ncoef) = -scaled_row(i + 1, k, 0.0);
      b[row++] = 0.0;
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> clu(C);
  if (clu.rank() < ncon) {
    return Error{ErrorCode::singular,
                 "optimize_spline: rank-deficient constraint system (rank " +
                     std::to_string(clu.rank()) + " of " + std::to_string(ncon) +
                     " rows, segment 0 of " + std::to_string(S) + ")"};
  }

  // Stationarity plus feasibility as one indefinite linear system.
  const int dim = nvar + ncon;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  K.topLeftCorner(nvar, nvar) = H;
  K.topRightCorner(nvar, ncon) = C.transpose();
  K.bottomLeftCorner(ncon, nvar) = C;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  rhs.tail(ncon) = b;

  Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
  if (!sol.allFinite())
    return Error{ErrorCode::singular, "optimize_spline: KKT solve produced non-finite values"};

  const Eigen::VectorXd residual = K * sol - rhs;
  const double scale =
      K.cwiseAbs().rowwise().sum().maxCoeff() * sol.cwiseAbs().maxCoeff() +
      rhs.cwiseAbs().maxCoeff();
  const double kkt_residual = residual.cwiseAbs().maxCoeff() / std::max(scale, 1.0);

  const Eigen::VectorXd q = sol.head(nvar);
  const double cost = 0.5 * q.dot(H * q);

  // Rescale normalized coefficients back to plain local time tau = t - t_j.
  std::vector<Eigen::VectorXd> coeffs(S);
  std::vector<double> knots(M);
  knots[0] = t0;
  for (int j = 0; j < S; ++j) {
    knots[j + 1] = knots[j] + times[j];
    Eigen::VectorXd p = q.segment(j * ncoef, ncoef);
    for (int a = 0; a <= n; ++a) p[a] /= std::pow(times[j], a);
    coeffs[j] = p;
  }

  SplineSolution out{PiecewiseTrajectory(std::move(knots), std::move(coeffs)), kkt_residual, cost};
  return out;
}

}  // namespace quadplan
