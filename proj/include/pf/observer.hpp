#pragma once

#include <Eigen/Dense>
#include <array>

namespace pf {

/// Luenberger estimator for a constant ambient drift, driven by position
/// fixes.  Model: p' = v_c + u_body, v_c' = 0, measured y = p.  The two
/// axes decouple into identical (position, drift) chains, so the 4x2 gain
/// is a single (l1, l2) pair duplicated across axes.
class CurrentObserver {
 public:
  struct Gain {
    double l1 = 0.0;
    double l2 = 0.0;
    std::array<double, 2> poles{0.0, 0.0};
  };

  /// Gain placing the per-axis error poles at (p1, p2): l1 = -(p1 + p2),
  /// l2 = p1*p2.  Throws UnstablePoles unless both are negative.
  static Gain place_poles(double p1, double p2);

  /// Continuous-time error matrix A - L*C (block form over [p; v_c]); its
  /// eigenvalues are the placed poles, each with multiplicity two.
  static Eigen::Matrix4d error_matrix(const Gain& gain);

  /// Observability matrix of the drift model (rank 4 by construction).
  static Eigen::Matrix<double, 8, 4> observability_matrix();

  CurrentObserver(const Gain& gain, const Eigen::Vector4d& initial_state);

  /// Advances the estimate over dt in (0, 0.5] with the body velocity
  /// input (u cos psi, u sin psi) and the position fix held over the step.
  /// The innovation is sampled with the measurement, so the estimation
  /// error obeys the discrete closed-loop recursion exactly and is
  /// independent of the input.
  void step(double surge, double heading, const Eigen::Vector2d& measured_position,
            double dt);

  Eigen::Vector2d position_estimate() const { return state_.head<2>(); }
  Eigen::Vector2d current_estimate() const { return state_.tail<2>(); }
  const Eigen::Vector4d& state() const { return state_; }
  const Gain& gain() const { return gain_; }

 private:
  Gain gain_;
  Eigen::Vector4d state_;
};

/// Component of a drift vector along the path-frame normal:
/// -sin(tangent)*vx + cos(tangent)*vy.
double current_along_normal(const Eigen::Vector2d& current, double tangent_angle);

}  // namespace pf
