#include "quadplan/flatness.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace quadplan {

QuadModel QuadModel::default_model() {
  QuadModel m;
  m.mass = 1.1;
  m.inertia = Eigen::Vector3d(0.0112, 0.0112, 0.021).asDiagonal();
  m.arm_length = 0.18;
  m.gravity = 9.81;
  m.rotor_moment_coeff = 0.016;
  return m;
}

bool QuadModel::valid() const {
  if (!(mass > 0.0) || !(arm_length > 0.0) || !(rotor_moment_coeff > 0.0) || !(gravity > 0.0))
    return false;
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(inertia);
  return es.eigenvalues().minCoeff() > 0.0;
}

Eigen::Matrix3d euler_zxy_to_rotation(double psi, double phi, double theta) {
  Eigen::Matrix3d rz, rx, ry;
  const double cz = std::cos(psi), sz = std::sin(psi);
  const double cx = std::cos(phi), sx = std::sin(phi);
  const double cy = std::cos(theta), sy = std::sin(theta);
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  return rz * rx * ry;
}

Eigen::Vector3d zxy_angles_from_rotation(const Eigen::Matrix3d& R) {
  // Under Z-X-Y the middle column is (-sin(psi) cos(phi), cos(psi) cos(phi), sin(phi)).
  const double phi = std::asin(std::clamp(R(2, 1), -1.0, 1.0));
  const double psi = std::atan2(-R(0, 1), R(1, 1));
  const double theta = std::atan2(-R(2, 0), R(2, 2));
  return Eigen::Vector3d(psi, phi, theta);
}

namespace {

Eigen::Matrix3d skew(const Vec3& w) {
  Eigen::Matrix3d s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

// Averaged extraction so symmetric contamination cancels.
Vec3 vee_skew_part(const Eigen::Matrix3d& s) {
  return 0.5 * Vec3(s(2, 1) - s(1, 2), s(0, 2) - s(2, 0), s(1, 0) - s(0, 1));
}

}  // namespace

Result<Vec3> omega_from_rotation_rate(const Eigen::Matrix3d& R, const Eigen::Matrix3d& R_dot) {
  const Eigen::Matrix3d s = R_dot * R.transpose();
  const double asym = (s + s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-6)
    return Error{ErrorCode::invalid_input,
                 "omega_from_rotation_rate: Rdot R^T asymmetric beyond 1e-6"};
  return vee_skew_part(s);
}

Result<std::pair<QuadState, QuadInput>> flat_to_state_input(const FlatSample& s,
                                                            const QuadModel& model) {
  const Vec3 acc = s.d2.head<3>();
  const Vec3 jerk = s.d3.head<3>();
  const Vec3 snap = s.d4.head<3>();
  const double psi = s.value[3], psi_d = s.d1[3], psi_dd = s.d2[3];

  // Thrust direction: body z aligns with specific force.
  const Vec3 a = acc + Vec3(0, 0, model.gravity);
  const double c = a.norm();
  if (c < 1e-6)
    return Error{ErrorCode::singular, "flat_to_state_input: free-fall singularity"};
  const Vec3 z_b = a / c;
  const double thrust = model.mass * c;

  const Vec3 x_c(std::cos(psi), std::sin(psi), 0.0);
  const Vec3 y_c(-std::sin(psi), std::cos(psi), 0.0);

  const Vec3 w = z_b.cross(x_c);
  const double nw = w.norm();
  if (nw < 1e-6)
    return Error{ErrorCode::singular, "flat_to_state_input: gimbal lock (body z along heading)"};

  // Exact time derivatives of the attitude construction. With
  // c = |a|, z_b = a / c and the heading vectors driven by psi(t):
  const double c_d = z_b.dot(jerk);
  const double c_dd = (jerk.squaredNorm() + a.dot(snap) - c_d * c_d) / c;
  const Vec3 z_b_d = jerk / c - a * (c_d / (c * c));
  const Vec3 z_b_dd = snap / c - 2.0 * jerk * (c_d / (c * c)) - a * (c_dd / (c * c)) +
                      2.0 * a * (c_d * c_d / (c * c * c));

  const Vec3 x_c_d = psi_d * y_c;
  const Vec3 x_c_dd = psi_dd * y_c - psi_d * psi_d * x_c;

  const Vec3 w_d = z_b_d.cross(x_c) + z_b.cross(x_c_d);
  const Vec3 w_dd = z_b_dd.cross(x_c) + 2.0 * z_b_d.cross(x_c_d) + z_b.cross(x_c_dd);

  const double nw_d = w.dot(w_d) / nw;
  const double nw_dd = (w_d.squaredNorm() + w.dot(w_dd) - nw_d * nw_d) / nw;

  const Vec3 y_b = w / nw;
  const Vec3 y_b_d = w_d / nw - w * (nw_d / (nw * nw));
  const Vec3 y_b_dd = w_dd / nw - 2.0 * w_d * (nw_d / (nw * nw)) - w * (nw_dd / (nw * nw)) +
                      2.0 * w * (nw_d * nw_d / (nw * nw * nw));

  const Vec3 x_b = y_b.cross(z_b);
  const Vec3 x_b_d = y_b_d.cross(z_b) + y_b.cross(z_b_d);
  const Vec3 x_b_dd = y_b_dd.cross(z_b) + 2.0 * y_b_d.cross(z_b_d) + y_b.cross(z_b_dd);

  Eigen::Matrix3d R, R_d, R_dd;
  R.col(0) = x_b;
  R.col(1) = y_b;
  R.col(2) = z_b;
  R_d.col(0) = x_b_d;
  R_d.col(1) = y_b_d;
  R_d.col(2) = z_b_d;
  R_dd.col(0) = x_b_dd;
  R_dd.col(1) = y_b_dd;
  R_dd.col(2) = z_b_dd;

  // S(omega_w) = Rdot R^T; its derivative is R_dd R^T + R_d R_d^T whose
  // symmetric part cancels in the extraction.
  const Vec3 omega_w = vee_skew_part(R_d * R.transpose());
  const Vec3 omega_w_dot = vee_skew_part(R_dd * R.transpose() + R_d * R_d.transpose());

  // Body-frame conversion; d/dt(R^T omega_w) = R^T omega_w_dot exactly
  // because S(omega_w)^T omega_w vanishes.
  const Vec3 omega_b = R.transpose() * omega_w;
  const Vec3 omega_b_dot = R.transpose() * omega_w_dot;

  QuadState state;
  state.position = s.value.head<3>();
  state.velocity = s.d1.head<3>();
  state.rotation = R;
  state.angular_velocity = omega_b;

  QuadInput input;
  input.thrust = thrust;
  input.moment = model.inertia * omega_b_dot + omega_b.cross(model.inertia * omega_b);

  return std::make_pair(state, input);
}

StateDerivative forward_dynamics(const QuadState& state, const QuadInput& input,
                                 const QuadModel& model) {
  StateDerivative d;
  d.position_dot = state.velocity;
  d.velocity_dot = Vec3(0, 0, -model.gravity) +
                   state.rotation * Vec3(0, 0, input.thrust / model.mass);
  d.rotation_dot = state.rotation * skew(state.angular_velocity);
  const Vec3 w = state.angular_velocity;
  d.angular_velocity_dot =
      model.inertia.ldlt().solve(-w.cross(model.inertia * w) + input.moment);
  return d;
}

std::array<double, 4> rotor_forces_unchecked(const QuadInput& input, const QuadModel& model) {
  const double L = model.arm_length;
  const double km = model.rotor_moment_coeff;
  const double u1 = input.thrust;
  const Vec3& u2 = input.moment;

  // u1 = F1+F2+F3+F4, u2 = [L(F2-F4), L(F3-F1), km(F1-F2+F3-F4)].
  std::array<double, 4> f{};
  f[0] = u1 / 4.0 - u2.y() / (2.0 * L) + u2.z() / (4.0 * km);
  f[1] = u1 / 4.0 + u2.x() / (2.0 * L) - u2.z() / (4.0 * km);
  f[2] = u1 / 4.0 + u2.y() / (2.0 * L) + u2.z() / (4.0 * km);
  f[3] = u1 / 4.0 - u2.x() / (2.0 * L) - u2.z() / (4.0 * km);
  return f;
}

Result<std::array<double, 4>> allocate_rotors(const QuadInput& input, const QuadModel& model) {
  const std::array<double, 4> f = rotor_forces_unchecked(input, model);
  for (int i = 0; i < 4; ++i)
    if (f[i] < 0.0)
      return Error{ErrorCode::infeasible,
                   "allocate_rotors: rotor " + std::to_string(i + 1) +
                       " would need negative force " + std::to_string(f[i])};
  return f;
}

FlatSample flat_sample_at(const FlatTrajectory& traj, double t) {
  FlatSample s;
  const PiecewiseTrajectory* outputs[4] = {&traj.x, &traj.y, &traj.z, &traj.yaw};
  for (int i = 0; i < 4; ++i) {
    s.value[i] = outputs[i]->evaluate(t, 0);
    s.d1[i] = outputs[i]->evaluate(t, 1);
    s.d2[i] = outputs[i]->evaluate(t, 2);
    s.d3[i] = outputs[i]->evaluate(t, 3);
    s.d4[i] = outputs[i]->evaluate(t, 4);
  }
  return s;
}

}  // namespace quadplan
