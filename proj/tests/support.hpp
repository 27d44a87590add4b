#pragma once

// Shared helpers for the test suites: independent oracles kept deliberately
// separate from the library implementation paths they check.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "pf/path.hpp"
#include "pf/vehicle.hpp"

namespace test_support {

// Reference unwrap: scans the whole sequence and removes 2*pi jumps by
// direct accumulation (the numpy-style offline algorithm).
inline std::vector<double> reference_unwrap(const std::vector<double>& raw) {
  std::vector<double> out;
  out.reserve(raw.size());
  double offset = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i > 0) {
      double diff = raw[i] - raw[i - 1];
      while (diff > M_PI) {
        offset -= 2.0 * M_PI;
        diff -= 2.0 * M_PI;
      }
      while (diff <= -M_PI) {
        offset += 2.0 * M_PI;
        diff += 2.0 * M_PI;
      }
    }
    out.push_back(raw[i] + offset);
  }
  return out;
}

// Central difference of the curve position, the oracle for PathPoint
// derivatives.
inline Eigen::Vector2d fd_first(const pf::Path& path, double gamma, double h) {
  return (path.eval_clamped(gamma + h).position - path.eval_clamped(gamma - h).position) /
         (2.0 * h);
}

inline Eigen::Vector2d fd_second(const pf::Path& path, double gamma, double h) {
  return (path.eval_clamped(gamma + h).derivative - path.eval_clamped(gamma - h).derivative) /
         (2.0 * h);
}

// Central difference of the tangent angle (wrap-safe), giving the oracle
// curvature d(psi)/dgamma / |p'|.
inline double fd_curvature(const pf::Path& path, double gamma, double h) {
  const double a_plus = path.eval_clamped(gamma + h).tangent_angle;
  const double a_minus = path.eval_clamped(gamma - h).tangent_angle;
  double diff = std::remainder(a_plus - a_minus, 2.0 * M_PI);
  return diff / (2.0 * h) / path.eval(gamma).arc_speed;
}

inline std::mt19937& rng() {
  static std::mt19937 gen(20240817u);
  return gen;
}

inline double uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng());
}

}  // namespace test_support
