#include "pf/observer.hpp"

#include <cmath>

#include "pf/exceptions.hpp"

namespace pf {

CurrentObserver::Gain CurrentObserver::place_poles(double p1, double p2) {
  if (!(p1 < 0.0) || !(p2 < 0.0)) {
    throw UnstablePoles("observer poles must be strictly negative");
  }
  Gain g;
  g.l1 = -(p1 + p2);
  g.l2 = p1 * p2;
  g.poles = {p1, p2};
  return g;
}

Eigen::Matrix4d CurrentObserver::error_matrix(const Gain& gain) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.topRightCorner<2, 2>().setIdentity();
  m.topLeftCorner<2, 2>() = -gain.l1 * Eigen::Matrix2d::Identity();
  m.bottomLeftCorner<2, 2>() = -gain.l2 * Eigen::Matrix2d::Identity();
  return m;
}

Eigen::Matrix<double, 8, 4> CurrentObserver::observability_matrix() {
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a.topRightCorner<2, 2>().setIdentity();
  Eigen::Matrix<double, 2, 4> c = Eigen::Matrix<double, 2, 4>::Zero();
  c.leftCols<2>().setIdentity();

  Eigen::Matrix<double, 8, 4> obs;
  Eigen::Matrix4d power = Eigen::Matrix4d::Identity();
  for (int k = 0; k < 4; ++k) {
    obs.middleRows<2>(2 * k) = c * power;
    power = power * a;
  }
  return obs;
}

CurrentObserver::CurrentObserver(const Gain& gain, const Eigen::Vector4d& initial_state)
    : gain_(gain), state_(initial_state) {
  Eigen::EigenSolver<Eigen::Matrix4d> eig(error_matrix(gain));
  for (int i = 0; i < 4; ++i) {
    if (eig.eigenvalues()(i).real() >= 0.0) {
      throw UnstablePoles("observer error matrix is not Hurwitz");
    }
  }
}

void CurrentObserver::step(double surge, double heading,
                           const Eigen::Vector2d& measured_position, double dt) {
  if (!(dt > 0.0 && dt <= 0.5)) throw ValidationError("observer step: dt must be in (0, 0.5]");

  const Eigen::Vector2d u_body{surge * std::cos(heading), surge * std::sin(heading)};
  const Eigen::Vector2d innovation = measured_position - state_.head<2>();

  // RK4 of x' = A x + B u + L innovation with the innovation held over the
  // step; A is nilpotent (A^2 = 0), so the stage sums below are the exact
  // integral of that held-input system.
  const Eigen::Vector2d drive_p = u_body + gain_.l1 * innovation;  // position rows
  const Eigen::Vector2d drive_v = gain_.l2 * innovation;           // drift rows

  Eigen::Vector4d next = state_;
  next.head<2>() += dt * (state_.tail<2>() + drive_p) + 0.5 * dt * dt * drive_v;
  next.tail<2>() += dt * drive_v;

  if (!next.allFinite()) throw NonFinite("observer step produced a non-finite estimate");
  state_ = next;
}

double current_along_normal(const Eigen::Vector2d& current, double tangent_angle) {
  return -std::sin(tangent_angle) * current.x() + std::cos(tangent_angle) * current.y();
}

}  // namespace pf
