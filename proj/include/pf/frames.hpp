#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace pf {

/// Maps an angle to the interval (-pi, pi].
inline double wrap_pi(double angle) {
  double a = std::remainder(angle, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

/// Planar rotation parameterized by a single frame angle.
///
/// to_frame() applies [[cos, sin], [-sin, cos]], i.e. it resolves a world
/// vector in the rotated frame (world -> path, world -> body).  to_world()
/// is the transpose.
class Rot2 {
 public:
  explicit Rot2(double angle) : cos_(std::cos(angle)), sin_(std::sin(angle)) {}

  Eigen::Vector2d to_frame(const Eigen::Vector2d& v) const {
    return {cos_ * v.x() + sin_ * v.y(), -sin_ * v.x() + cos_ * v.y()};
  }

  Eigen::Vector2d to_world(const Eigen::Vector2d& v) const {
    return {cos_ * v.x() - sin_ * v.y(), sin_ * v.x() + cos_ * v.y()};
  }

  /// World-to-frame matrix.
  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d m;
    m << cos_, sin_, -sin_, cos_;
    return m;
  }

 private:
  double cos_;
  double sin_;
};

/// Makes a rotation resolving world vectors in the frame attached to a path
/// point whose tangent makes `tangent_angle` with the world x axis.
inline Rot2 rot_world_to_path(double tangent_angle) { return Rot2(tangent_angle); }

/// S(omega) v for the planar skew matrix [[0, -r], [r, 0]].
inline Eigen::Vector2d skew_action(double rate, const Eigen::Vector2d& v) {
  return {-rate * v.y(), rate * v.x()};
}

/// Removes 2*pi jumps from a stream of wrapped angle samples, producing a
/// continuous angle on the whole real line.  One instance per signal stream.
class AngleUnwrapper {
 public:
  double unwrap(double raw) {
    if (!primed_) {
      accumulated_ = raw;
      primed_ = true;
    } else {
      accumulated_ += wrap_pi(raw - last_raw_);
    }
    last_raw_ = raw;
    return accumulated_;
  }

  void reset() { primed_ = false; }

 private:
  bool primed_ = false;
  double last_raw_ = 0.0;
  double accumulated_ = 0.0;
};

}  // namespace pf
