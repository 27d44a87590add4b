#pragma once

#include <Eigen/Dense>

namespace pf {

/// Planar kinematic state of the plant.  The heading lives on the whole
/// real line (never wrapped).  `current` is the ambient drift acting on the
/// vehicle, constant over a run; it is zero unless the scenario declares a
/// disturbance.
struct VehicleState {
  Eigen::Vector2d position{0.0, 0.0};
  double heading = 0.0;
  double sway = 0.0;                    // lateral speed, nonzero only for the
                                        // fully-actuated model
  Eigen::Vector2d current{0.0, 0.0};
};

/// Kinematic inputs; which fields matter depends on the model.
struct ActuationInput {
  double surge = 0.0;     // u, speed through the fluid along body x
  double yaw_rate = 0.0;  // r
  double sway = 0.0;      // v, fully-actuated model only
};

/// x' = u cos(psi), y' = u sin(psi), psi' = r.  RK4 over dt in (0, 0.5].
VehicleState step_underactuated(const VehicleState& state, const ActuationInput& input,
                                double dt);

/// Same model plus the constant ambient drift carried in the state.
VehicleState step_with_current(const VehicleState& state, const ActuationInput& input,
                               double dt);

/// x' = u cos(psi) - v sin(psi), y' = u sin(psi) + v cos(psi), psi' = r.
VehicleState step_fully_actuated(const VehicleState& state, const ActuationInput& input,
                                 double dt);

/// Distributes a body wrench (Fx, Fy, N) over n >= 3 thrusters given the
/// 3-by-n allocation matrix: f = K+ tau with the inverse (n == 3) or the
/// Moore-Penrose pseudo-inverse (n > 3, minimum-norm solution).  Throws
/// RankDeficient when the matrix has row rank below 3.
Eigen::VectorXd allocate_thrust(const Eigen::Matrix<double, 3, Eigen::Dynamic>& allocation,
                                const Eigen::Vector3d& wrench);

}  // namespace pf
