#pragma once

#include <Eigen/Core>
#include <vector>

#include "quadplan/geometry.hpp"
#include "quadplan/result.hpp"

namespace quadplan {

/// Tunables of the piecewise-polynomial QP for one flat output.
struct SplineConfig {
  int order = 7;             // polynomial order n per segment
  int continuity = 4;        // derivative continuity n_c at interior knots
  Eigen::VectorXd weights;   // w_1..w_n, cost weights on squared derivatives
  double avg_speed = 1.0;    // m/s, segment time heuristic
  double avg_yaw_rate = 1.0; // rad/s
  double min_segment_time = 0.1;  // s

  /// Minimum-snap position setup: n = 7, n_c = 4, w_4 = 1.
  static SplineConfig position_default();
  /// Yaw setup: n = 7, n_c = 2, w_2 = 1.
  static SplineConfig yaw_default();
};

/// Endpoint derivative pins: derivatives[0] is the value, derivatives[k] the
/// k-th time derivative. The enforced order is derivatives.size() - 1; it
/// must not exceed the config continuity and, for single-segment problems,
/// must satisfy n >= 2 * order + 1 to stay well-posed.
struct BoundaryState {
  Eigen::VectorXd derivatives;

  static BoundaryState rest(double value, int order) {
    BoundaryState b;
    b.derivatives = Eigen::VectorXd::Zero(order + 1);
    b.derivatives[0] = value;
    return b;
  }
  int order() const { return static_cast<int>(derivatives.size()) - 1; }
};

/// Piecewise polynomial over knot times t_1 < ... < t_M; coefficients are in
/// segment-local time (tau = t - t_j), ascending powers.
class PiecewiseTrajectory {
 public:
  PiecewiseTrajectory() = default;
  PiecewiseTrajectory(std::vector<double> knots, std::vector<Eigen::VectorXd> coefficients);

  double start_time() const { return knots_.front(); }
  double end_time() const { return knots_.back(); }
  int segment_count() const { return static_cast<int>(coefficients_.size()); }
  int order() const { return static_cast<int>(coefficients_.front().size()) - 1; }

  /// k-th derivative at t; right-continuous at interior knots, the final
  /// knot evaluates the last segment. Throws std::out_of_range outside span.
  double evaluate(double t, int derivative = 0) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Eigen::VectorXd>& coefficients() const { return coefficients_; }

 private:
  std::vector<double> knots_;
  std::vector<Eigen::VectorXd> coefficients_;
};

/// Heuristic segment durations: T_j = max(dist / v_avg, |dyaw| / w_avg, T_min).
std::vector<double> segment_times(const std::vector<Vec3>& positions,
                                  const std::vector<double>& yaws, const SplineConfig& config);

/// Symmetric PSD matrix Q with p' Q p = integral_0^T sum_i w_i [P^(i)(t)]^2 dt
/// for the local-time polynomial with ascending coefficients p.
Eigen::MatrixXd cost_matrix(int order, const Eigen::VectorXd& weights, double T);

/// Derivative-evaluation rows at local times 0 and T for orders 0..max_derivative,
/// stacked into a 2 (max_derivative + 1) x (order + 1) map A with A p = endpoint
/// derivatives.
Eigen::MatrixXd endpoint_map(int order, double T, int max_derivative);

struct SplineSolution {
  PiecewiseTrajectory trajectory;
  double kkt_residual = 0.0;  // scaled backward error of the KKT solve
  double cost = 0.0;          // optimal objective value
};

/// Joint equality-constrained QP over all segments of one flat output:
/// waypoint values pinned, derivatives 1..n_c continuous at interior knots,
/// boundary states enforced exactly. Interior derivatives are free variables.
Result<SplineSolution> optimize_spline(const std::vector<double>& waypoints,
                                       const std::vector<double>& times,
                                       const BoundaryState& start, const BoundaryState& end,
                                       const SplineConfig& config, double t0 = 0.0);

/// The four per-output trajectories of a flat plan, sharing knot times.
struct FlatTrajectory {
  PiecewiseTrajectory x, y, z, yaw;

  double start_time() const { return x.start_time(); }
  double end_time() const { return x.end_time(); }
  Vec3 position(double t) const { return Vec3(x.evaluate(t), y.evaluate(t), z.evaluate(t)); }
  Vec3 position_derivative(double t, int k) const {
    return Vec3(x.evaluate(t, k), y.evaluate(t, k), z.evaluate(t, k));
  }
  double yaw_value(double t, int k = 0) const { return yaw.evaluate(t, k); }
};

/// Largest endpoint derivative order that keeps a problem with the given
/// segment count well-posed at polynomial order n.
int max_boundary_order(int order, int continuity, int segment_count);

}  // namespace quadplan
