#include "quadplan/yaw_planner.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace quadplan {

std::vector<double> yaw_waypoints(const std::vector<Vec3>& positions, double psi_start,
                                  double psi_target) {
  if (positions.size() < 2) throw std::invalid_argument("yaw_waypoints: need >= 2 positions");
  const std::size_t m = positions.size();

  std::vector<double> yaws(m);
  yaws[0] = psi_start;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double dx = positions[i + 1].x() - positions[i].x();
    const double dy = positions[i + 1].y() - positions[i].y();
    // The printed formula is a scalar arctan of dy/dx; the two-argument form
    // keeps the sign of the flight direction so the camera faces forward.
    if (std::hypot(dx, dy) < 1e-12)
      yaws[i] = yaws[i - 1];  // vertical segment: hold the previous heading
    else
      yaws[i] = std::atan2(dy, dx);
  }
  yaws[m - 1] = psi_target;

  // Unwrap by accumulating multiples of 2 pi so the spline never interpolates
  // through a spurious full turn; differences end up in (-pi, pi].
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 1; i < m; ++i) {
    double d = yaws[i] - yaws[i - 1];
    while (d > std::numbers::pi) d -= two_pi;
    while (d <= -std::numbers::pi) d += two_pi;
    yaws[i] = yaws[i - 1] + d;
  }
  return yaws;
}

}  // namespace quadplan
