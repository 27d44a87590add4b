#include "pf/vehicle.hpp"

#include <cmath>

#include "pf/exceptions.hpp"

namespace pf {
namespace {

struct Pose {
  double x, y, psi;
};

Pose rhs(const Pose& s, double surge, double sway, double yaw_rate,
         const Eigen::Vector2d& drift) {
  double c = std::cos(s.psi), sn = std::sin(s.psi);
  return {surge * c - sway * sn + drift.x(), surge * sn + sway * c + drift.y(), yaw_rate};
}

VehicleState rk4_step(const VehicleState& state, double surge, double sway, double yaw_rate,
                      const Eigen::Vector2d& drift, double dt) {
  if (!(dt > 0.0 && dt <= 0.5)) throw ValidationError("plant step: dt must be in (0, 0.5]");

  Pose s0{state.position.x(), state.position.y(), state.heading};
  auto advance = [](const Pose& s, const Pose& k, double h) {
    return Pose{s.x + h * k.x, s.y + h * k.y, s.psi + h * k.psi};
  };
  Pose k1 = rhs(s0, surge, sway, yaw_rate, drift);
  Pose k2 = rhs(advance(s0, k1, dt / 2.0), surge, sway, yaw_rate, drift);
  Pose k3 = rhs(advance(s0, k2, dt / 2.0), surge, sway, yaw_rate, drift);
  Pose k4 = rhs(advance(s0, k3, dt), surge, sway, yaw_rate, drift);

  VehicleState next = state;
  next.position.x() = s0.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  next.position.y() = s0.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  next.heading = s0.psi + dt / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
  next.sway = sway;
  if (!next.position.allFinite() || !std::isfinite(next.heading)) {
    throw NonFinite("plant step produced a non-finite state");
  }
  return next;
}

}  // namespace

VehicleState step_underactuated(const VehicleState& state, const ActuationInput& input,
                                double dt) {
  return rk4_step(state, input.surge, 0.0, input.yaw_rate, Eigen::Vector2d::Zero(), dt);
}

VehicleState step_with_current(const VehicleState& state, const ActuationInput& input,
                               double dt) {
  return rk4_step(state, input.surge, 0.0, input.yaw_rate, state.current, dt);
}

VehicleState step_fully_actuated(const VehicleState& state, const ActuationInput& input,
                                 double dt) {
  return rk4_step(state, input.surge, input.sway, input.yaw_rate, Eigen::Vector2d::Zero(),
                  dt);
}

Eigen::VectorXd allocate_thrust(const Eigen::Matrix<double, 3, Eigen::Dynamic>& allocation,
                                const Eigen::Vector3d& wrench) {
  const auto n = allocation.cols();
  if (n < 3) throw ValidationError("thrust allocation: need at least 3 thrusters");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(allocation,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-9 * sv(0)) {
    throw RankDeficient("thrust allocation matrix has row rank below 3");
  }
  return svd.solve(wrench);
}

}  // namespace pf
