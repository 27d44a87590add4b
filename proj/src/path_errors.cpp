#include "pf/path_errors.hpp"

#include <cmath>

#include "pf/exceptions.hpp"
#include "pf/frames.hpp"

namespace pf {

PathFrameError path_frame_error(const Eigen::Vector2d& position, double heading,
                                const PathPoint& point) {
  return path_frame_error(position, heading, point, point.tangent_angle);
}

PathFrameError path_frame_error(const Eigen::Vector2d& position, double heading,
                                const PathPoint& point, double unwrapped_tangent) {
  Eigen::Vector2d e = Rot2(point.tangent_angle).to_frame(position - point.position);
  PathFrameError err;
  err.along_track = e.x();
  err.cross_track = e.y();
  err.heading_error = heading - unwrapped_tangent;
  err.gamma = point.gamma;
  return err;
}

PathFrameErrorRates path_frame_error_rates(const PathFrameError& error, double surge,
                                           double point_speed_value, double curvature,
                                           double yaw_rate, double tangent_angle,
                                           const std::optional<Eigen::Vector2d>& current) {
  const double frame_rate = curvature * point_speed_value;  // rP
  Eigen::Vector2d e{error.along_track, error.cross_track};
  Eigen::Vector2d de = -skew_action(frame_rate, e);
  de.x() += surge * std::cos(error.heading_error) - point_speed_value;
  de.y() += surge * std::sin(error.heading_error);
  if (current) de += Rot2(tangent_angle).to_frame(*current);

  PathFrameErrorRates rates;
  rates.along_track = de.x();
  rates.cross_track = de.y();
  rates.heading_error = yaw_rate - frame_rate;
  return rates;
}

BodyFrameError body_frame_error(const Eigen::Vector2d& position, double heading,
                                const Eigen::Vector2d& target,
                                const Eigen::Vector2d& offset) {
  BodyFrameError err;
  err.error = Rot2(heading).to_frame(position - target) - offset;
  err.offset = offset;
  return err;
}

Eigen::Vector2d body_frame_error_rates(const Eigen::Vector2d& error, double yaw_rate,
                                       const Eigen::Vector2d& body_velocity, double heading,
                                       const Eigen::Vector2d& path_derivative,
                                       double gamma_rate,
                                       const std::optional<Eigen::Vector2d>& current) {
  Rot2 to_body(heading);
  Eigen::Vector2d de =
      -skew_action(yaw_rate, error) + body_velocity - to_body.to_frame(path_derivative) * gamma_rate;
  if (current) de += to_body.to_frame(*current);
  return de;
}

double point_speed(const PathPoint& point, double gamma_rate) {
  return point.arc_speed * gamma_rate;
}

double projected_point_speed(double surge, double heading_error, double cross_track,
                             double curvature) {
  const double denom = 1.0 - curvature * cross_track;
  if (std::abs(denom) <= 1e-6) {
    throw ProjectionSingularity(
        "projected reference point speed undefined: cross-track error reached the "
        "curvature radius");
  }
  return surge * std::cos(heading_error) / denom;
}

}  // namespace pf
