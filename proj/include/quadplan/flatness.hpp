#pragma once

#include <Eigen/Core>
#include <array>
#include <utility>

#include "quadplan/poly_traj.hpp"
#include "quadplan/result.hpp"

namespace quadplan {

/// Physical parameters of the quadcopter.
struct QuadModel {
  double mass = 1.1;                                   // kg
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();  // kg m^2
  double arm_length = 0.18;                            // m, rotor to CoM
  double gravity = 9.81;                               // m/s^2
  double rotor_moment_coeff = 0.016;                   // m, M_i = k_M * F_i

  static QuadModel default_model();
  bool valid() const;
};

/// Full state: CoM position/velocity in world frame, world-from-body
/// rotation, angular velocity in body frame.
struct QuadState {
  Vec3 position{Vec3::Zero()};
  Vec3 velocity{Vec3::Zero()};
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
  Vec3 angular_velocity{Vec3::Zero()};  // body frame
};

/// Net thrust along body z plus body-frame moment vector.
struct QuadInput {
  double thrust = 0.0;  // N
  Vec3 moment{Vec3::Zero()};  // N m
};

/// Flat outputs sigma = [x, y, z, yaw] and their time derivatives to order 4.
struct FlatSample {
  Eigen::Vector4d value{Eigen::Vector4d::Zero()};
  Eigen::Vector4d d1{Eigen::Vector4d::Zero()};
  Eigen::Vector4d d2{Eigen::Vector4d::Zero()};
  Eigen::Vector4d d3{Eigen::Vector4d::Zero()};
  Eigen::Vector4d d4{Eigen::Vector4d::Zero()};
};

struct StateDerivative {
  Vec3 position_dot{Vec3::Zero()};
  Vec3 velocity_dot{Vec3::Zero()};
  Eigen::Matrix3d rotation_dot{Eigen::Matrix3d::Zero()};
  Vec3 angular_velocity_dot{Vec3::Zero()};
};

/// R = Rz(psi) Rx(phi) Ry(theta).
Eigen::Matrix3d euler_zxy_to_rotation(double psi, double phi, double theta);

/// (psi, phi, theta) recovered from a Z-X-Y rotation matrix, away from
/// gimbal lock (|phi| -> pi/2).
Eigen::Vector3d zxy_angles_from_rotation(const Eigen::Matrix3d& R);

/// World-frame angular velocity from S(omega) = Rdot R^T. Fails when the
/// product is asymmetric beyond 1e-6 (inconsistent inputs).
Result<Vec3> omega_from_rotation_rate(const Eigen::Matrix3d& R, const Eigen::Matrix3d& R_dot);

/// Flatness map: state and input recovered from the flat outputs and their
/// derivatives. Fails in free fall (thrust direction undefined) and at
/// gimbal lock.
Result<std::pair<QuadState, QuadInput>> flat_to_state_input(const FlatSample& s,
                                                            const QuadModel& model);

/// Newton-Euler dynamics: rdotdot from thrust and attitude, omega-dot from
/// the body-frame Euler equation, Rdot = R S(omega_body).
StateDerivative forward_dynamics(const QuadState& state, const QuadInput& input,
                                 const QuadModel& model);

/// Individual rotor forces from net thrust and moments (alternating spin
/// directions). A negative force demand is reported as infeasible, never
/// clamped.
Result<std::array<double, 4>> allocate_rotors(const QuadInput& input, const QuadModel& model);

/// The raw allocation solve without the feasibility check; trace logging
/// uses this so demanded forces stay visible even when a rotor would have
/// to pull.
std::array<double, 4> rotor_forces_unchecked(const QuadInput& input, const QuadModel& model);

/// Flat outputs and derivatives of a planned trajectory at time t.
FlatSample flat_sample_at(const FlatTrajectory& traj, double t);

}  // namespace quadplan
