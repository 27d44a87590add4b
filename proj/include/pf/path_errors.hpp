#pragma once

#include <Eigen/Dense>
#include <optional>

#include "pf/path.hpp"

namespace pf {

/// Position and orientation error resolved in the frame attached to the
/// reference point: (along_track, cross_track) = R(tangent_angle) * (p - pd).
/// heading_error is psi - psi_tangent, kept on the unwrapped (continuous)
/// domain and never reduced here; laws that consume it as a geometric angle
/// wrap it themselves.
struct PathFrameError {
  double along_track = 0.0;   // s1
  double cross_track = 0.0;   // y1
  double heading_error = 0.0; // psi_e
  double gamma = 0.0;         // parameter of the reference point
};

struct PathFrameErrorRates {
  double along_track = 0.0;
  double cross_track = 0.0;
  double heading_error = 0.0;
};

/// Error of the vehicle relative to the reference point, resolved in the
/// body frame and shifted by the design offset: error = R(psi)(p - pd) - offset.
struct BodyFrameError {
  Eigen::Vector2d error{0.0, 0.0};   // eB
  double gamma_rate_error = 0.0;     // gamma_dot - v_d, filled by the caller
  Eigen::Vector2d offset{0.0, 0.0};  // epsilon
};

/// Path-frame error at a curve point; the tangent angle stored in `point`
/// is used both for the rotation and for the heading error.
PathFrameError path_frame_error(const Eigen::Vector2d& position, double heading,
                                const PathPoint& point);

/// Same, but the heading error is formed against an unwrapped tangent angle
/// (congruent to point.tangent_angle mod 2*pi) so that consecutive errors
/// stay continuous.
PathFrameError path_frame_error(const Eigen::Vector2d& position, double heading,
                                const PathPoint& point, double unwrapped_tangent);

/// Analytic time derivative of the path-frame error:
///   d(s1,y1)/dt = -S(kappa*uP)(s1,y1) + (u cos(psi_e), u sin(psi_e)) - (uP, 0)
///                 [+ R(tangent) * current]
///   d(psi_e)/dt = r - kappa*uP
PathFrameErrorRates path_frame_error_rates(
    const PathFrameError& error, double surge, double point_speed, double curvature,
    double yaw_rate, double tangent_angle,
    const std::optional<Eigen::Vector2d>& current = std::nullopt);

BodyFrameError body_frame_error(const Eigen::Vector2d& position, double heading,
                                const Eigen::Vector2d& target,
                                const Eigen::Vector2d& offset);

/// Analytic time derivative of the body-frame error:
///   deB/dt = -S(r) eB + body_velocity - R(psi) p' gamma_dot [+ R(psi) current]
/// where body_velocity is the velocity contribution in the body frame: for
/// the offset formulation Delta*(u, r) = (u + eps2*r, -eps1*r), for the
/// fully-actuated formulation simply (u, v).
Eigen::Vector2d body_frame_error_rates(
    const Eigen::Vector2d& error, double yaw_rate, const Eigen::Vector2d& body_velocity,
    double heading, const Eigen::Vector2d& path_derivative, double gamma_rate,
    const std::optional<Eigen::Vector2d>& current = std::nullopt);

/// Speed of the reference point driven at the given parameter rate:
/// uP = |p'| * gamma_dot.
double point_speed(const PathPoint& point, double gamma_rate);

/// Speed the orthogonally-projected reference point must have so that the
/// along-track error stays identically zero: uP = u cos(psi_e)/(1 - kappa y1).
/// Throws ProjectionSingularity when the denominator is within 1e-6 of zero
/// (the query point sits at the center of curvature).
double projected_point_speed(double surge, double heading_error, double cross_track,
                             double curvature);

}  // namespace pf
