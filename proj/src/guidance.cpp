#include "pf/guidance.hpp"

#include <cmath>
#include <limits>

#include "pf/exceptions.hpp"
#include "pf/observer.hpp"

namespace pf {
namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

Eigen::Vector2d require_estimate(const std::optional<Eigen::Vector2d>& estimate,
                                 const char* who) {
  if (!estimate) {
    throw ValidationError(std::string(who) + ": compensated law needs a current estimate");
  }
  return *estimate;
}

// Offset interaction matrix [[1, eps2], [0, -eps1]] mapping (u, r) into the
// body-frame error rate; square and invertible whenever eps1 != 0, so the
// weighted pseudo-inverse reduces to the plain inverse.
Eigen::Matrix2d offset_interaction(const Eigen::Vector2d& offset) {
  if (std::abs(offset.x()) < 1e-9) {
    throw SingularOffset("body offset x-component must be nonzero");
  }
  Eigen::Matrix2d delta;
  delta << 1.0, offset.y(), 0.0, -offset.x();
  return delta;
}

}  // namespace

void GuidanceGains::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(k3 > 0.0)) {
    throw ValidationError("gains: k1, k2, k3 must be positive");
  }
  if (!(approach_angle > 0.0 && approach_angle < M_PI / 2)) {
    throw ValidationError("gains: approach_angle must lie in (0, pi/2)");
  }
  if (!(approach_sharpness > 0.0)) {
    throw ValidationError("gains: approach_sharpness must be positive");
  }
  if (!(lookahead > 0.0)) throw ValidationError("gains: lookahead must be positive");
  if (!(integral_rate > 0.0)) throw ValidationError("gains: integral_rate must be positive");
  if (!(parameter_gain > 0.0)) throw ValidationError("gains: parameter_gain must be positive");
  if ((position_gain - position_gain.transpose()).norm() > 1e-12) {
    throw ValidationError("gains: position_gain must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(position_gain);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("gains: position_gain must be positive definite");
  }
}

ApproachAngle approach_angle(double cross_track, double surge, double cross_track_rate,
                             double surge_rate, double limit, double sharpness) {
  const double arg = sharpness * cross_track * surge;
  const double th = std::tanh(arg);
  const double sech2 = 1.0 - th * th;
  ApproachAngle res;
  res.angle = -limit * th;
  res.rate = -limit * sech2 * sharpness * (cross_track_rate * surge + cross_track * surge_rate);
  return res;
}

double shaped_yaw_rate(double heading_error, const ApproachAngle& approach,
                       double cross_track, double surge, double curvature,
                       double point_speed, double k1, double k2) {
  const double shaped = heading_error - approach.angle;  // psi_tilde
  const double ratio = std::cos(0.5 * (heading_error + approach.angle)) * sinc(0.5 * shaped);
  return curvature * point_speed + approach.rate - k1 * shaped -
         k2 * cross_track * surge * ratio;
}

double lookahead_heading_error(double cross_track, double lookahead) {
  return std::atan(-cross_track / lookahead);
}

double saturated_heading_error(double cross_track, double surge, double k1,
                               double lateral_current) {
  const double arg = -(k1 * cross_track + lateral_current) / surge;
  return std::asin(std::clamp(arg, -1.0, 1.0));
}

double coordination_speed(double surge, double heading_error, double along_track,
                          double k3) {
  return surge * std::cos(heading_error) + k3 * along_track;
}

// --- ApproachAngleLaw -------------------------------------------------------

ApproachAngleLaw::ApproachAngleLaw(Path path, SpeedProfile profile, GuidanceGains gains)
    : path_(std::move(path)), profile_(std::move(profile)), gains_(gains) {
  gains_.validate();
}

GuidanceTelemetry ApproachAngleLaw::step(const VehicleState& state, double t, double dt,
                                         const std::optional<Eigen::Vector2d>&) {
  (void)dt;
  const double gamma = last_gamma_ ? path_.project(state.position, *last_gamma_)
                                   : path_.project(state.position);
  last_gamma_ = gamma;
  const PathPoint point = path_.eval(gamma);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  const double surge = profile_.speed(gamma, t);
  const double target_speed =
      projected_point_speed(surge, err.heading_error, err.cross_track, point.curvature);
  const double cross_rate = surge * std::sin(err.heading_error);
  const ApproachAngle delta =
      approach_angle(err.cross_track, surge, cross_rate, profile_.rate(gamma, t),
                     gains_.approach_angle, gains_.approach_sharpness);
  const double yaw_rate = shaped_yaw_rate(err.heading_error, delta, err.cross_track, surge,
                                          point.curvature, target_speed, gains_.k1, gains_.k2);

  GuidanceTelemetry out;
  out.command.actuation = YawRateCommand{surge, yaw_rate};
  out.error = err;
  out.gamma = gamma;
  out.gamma_rate = target_speed / point.arc_speed;
  const double shaped = err.heading_error - delta.angle;
  out.lyapunov = 0.5 * err.cross_track * err.cross_track +
                 shaped * shaped / (2.0 * gains_.k2);
  return out;
}

// --- VirtualTargetLaw -------------------------------------------------------

VirtualTargetLaw::VirtualTargetLaw(Path path, SpeedProfile profile, GuidanceGains gains,
                                   double initial_gamma)
    : path_(std::move(path)),
      profile_(std::move(profile)),
      gains_(gains),
      gamma_(initial_gamma) {
  gains_.validate();
}

double VirtualTargetLaw::parameter_rate_at(const VehicleState& state, double gamma,
                                           double t) const {
  const PathPoint point = path_.eval_extended(gamma);
  const PathFrameError err = path_frame_error(state.position, state.heading, point);
  const double surge = profile_.speed(gamma, t);
  return coordination_speed(surge, err.heading_error, err.along_track, gains_.k3) /
         point.arc_speed;
}

GuidanceTelemetry VirtualTargetLaw::step(const VehicleState& state, double t, double dt,
                                         const std::optional<Eigen::Vector2d>&) {
  const PathPoint point = path_.eval_extended(gamma_);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  const double surge = profile_.speed(gamma_, t);
  const double target_speed =
      coordination_speed(surge, err.heading_error, err.along_track, gains_.k3);
  const double cross_rate = -point.curvature * target_speed * err.along_track +
                            surge * std::sin(err.heading_error);
  const ApproachAngle delta =
      approach_angle(err.cross_track, surge, cross_rate, profile_.rate(gamma_, t),
                     gains_.approach_angle, gains_.approach_sharpness);
  const double yaw_rate = shaped_yaw_rate(err.heading_error, delta, err.cross_track, surge,
                                          point.curvature, target_speed, gains_.k1, gains_.k2);
  const double gamma_rate = target_speed / point.arc_speed;

  GuidanceTelemetry out;
  out.command.actuation = YawRateCommand{surge, yaw_rate};
  out.command.parameter_rate = gamma_rate;
  out.error = err;
  out.gamma = gamma_;
  out.gamma_rate = gamma_rate;
  const double shaped = err.heading_error - delta.angle;
  out.lyapunov =
      0.5 * (err.along_track * err.along_track + err.cross_track * err.cross_track) +
      shaped * shaped / (2.0 * gains_.k2);

  // Explicit midpoint update of the target parameter.
  const double mid = gamma_ + 0.5 * dt * gamma_rate;
  gamma_ += dt * parameter_rate_at(state, mid, t);
  return out;
}

// --- LookaheadLosLaw --------------------------------------------------------

LookaheadLosLaw::LookaheadLosLaw(Path path, SpeedProfile profile, GuidanceGains gains)
    : path_(std::move(path)), profile_(std::move(profile)), gains_(gains) {
  gains_.validate();
}

GuidanceTelemetry LookaheadLosLaw::step(const VehicleState& state, double t, double dt,
                                        const std::optional<Eigen::Vector2d>&) {
  (void)dt;
  const double gamma = last_gamma_ ? path_.project(state.position, *last_gamma_)
                                   : path_.project(state.position);
  last_gamma_ = gamma;
  const PathPoint point = path_.eval(gamma);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  const double surge = profile_.speed(gamma, t);
  const double heading_ref =
      tangent + lookahead_heading_error(err.cross_track, gains_.lookahead);

  GuidanceTelemetry out;
  out.command.actuation = HeadingCommand{surge, heading_ref};
  out.error = err;
  out.gamma = gamma;
  out.gamma_rate = std::numeric_limits<double>::quiet_NaN();
  out.lyapunov = 0.5 * err.cross_track * err.cross_track;
  return out;
}

// --- SaturatedLosLaw --------------------------------------------------------

SaturatedLosLaw::SaturatedLosLaw(Path path, SpeedProfile profile, GuidanceGains gains,
                                 bool compensate)
    : path_(std::move(path)),
      profile_(std::move(profile)),
      gains_(gains),
      compensate_(compensate) {
  gains_.validate();
}

GuidanceTelemetry SaturatedLosLaw::step(const VehicleState& state, double t, double dt,
                                        const std::optional<Eigen::Vector2d>& estimate) {
  (void)dt;
  const double gamma = last_gamma_ ? path_.project(state.position, *last_gamma_)
                                   : path_.project(state.position);
  last_gamma_ = gamma;
  const PathPoint point = path_.eval(gamma);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  const double surge = profile_.speed(gamma, t);
  double lateral_current = 0.0;
  if (compensate_) {
    lateral_current = current_along_normal(require_estimate(estimate, "saturated LOS"),
                                           point.tangent_angle);
  }
  const double heading_ref =
      tangent + saturated_heading_error(err.cross_track, surge, gains_.k1, lateral_current);

  GuidanceTelemetry out;
  out.command.actuation = HeadingCommand{surge, heading_ref};
  out.error = err;
  out.gamma = gamma;
  out.gamma_rate = std::numeric_limits<double>::quiet_NaN();
  out.lyapunov = 0.5 * err.cross_track * err.cross_track;
  return out;
}

// --- IntegralLosLaw ---------------------------------------------------------

IntegralLosLaw::IntegralLosLaw(Path path, SpeedProfile profile, GuidanceGains gains)
    : path_(std::move(path)), profile_(std::move(profile)), gains_(gains) {
  gains_.validate();
}

GuidanceTelemetry IntegralLosLaw::step(const VehicleState& state, double t, double dt,
                                       const std::optional<Eigen::Vector2d>&) {
  const double gamma = last_gamma_ ? path_.project(state.position, *last_gamma_)
                                   : path_.project(state.position);
  last_gamma_ = gamma;
  const PathPoint point = path_.eval(gamma);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  const double surge = profile_.speed(gamma, t);
  const double biased = err.cross_track + gains_.integral_rate * integrator_;
  const double heading_ref = tangent + std::atan(-biased / gains_.lookahead);

  GuidanceTelemetry out;
  out.command.actuation = HeadingCommand{surge, heading_ref};
  out.error = err;
  out.gamma = gamma;
  out.gamma_rate = std::numeric_limits<double>::quiet_NaN();
  out.lyapunov = 0.5 * err.cross_track * err.cross_track;

  const double denom = biased * biased + gains_.lookahead * gains_.lookahead;
  integrator_ += dt * gains_.lookahead * err.cross_track / denom;
  return out;
}

// --- LosVirtualTargetLaw ----------------------------------------------------

LosVirtualTargetLaw::LosVirtualTargetLaw(Path path, SpeedProfile profile,
                                         GuidanceGains gains, double initial_gamma)
    : path_(std::move(path)),
      profile_(std::move(profile)),
      gains_(gains),
      gamma_(initial_gamma) {
  gains_.validate();
}

double LosVirtualTargetLaw::parameter_rate_at(const VehicleState& state, double gamma,
                                              double t) const {
  const PathPoint point = path_.eval_extended(gamma);
  const PathFrameError err = path_frame_error(state.position, state.heading, point);
  const double surge = profile_.speed(gamma, t);
  return coordination_speed(surge, err.heading_error, err.along_track, gains_.k3) /
         point.arc_speed;
}

GuidanceTelemetry LosVirtualTargetLaw::step(const VehicleState& state, double t, double dt,
                                            const std::optional<Eigen::Vector2d>&) {
  const PathPoint point = path_.eval_extended(gamma_);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  const double surge = profile_.speed(gamma_, t);
  const double heading_ref =
      tangent + lookahead_heading_error(err.cross_track, gains_.lookahead);
  const double gamma_rate =
      coordination_speed(surge, err.heading_error, err.along_track, gains_.k3) /
      point.arc_speed;

  GuidanceTelemetry out;
  out.command.actuation = HeadingCommand{surge, heading_ref};
  out.command.parameter_rate = gamma_rate;
  out.error = err;
  out.gamma = gamma_;
  out.gamma_rate = gamma_rate;
  out.lyapunov =
      0.5 * (err.along_track * err.along_track + err.cross_track * err.cross_track);

  const double mid = gamma_ + 0.5 * dt * gamma_rate;
  gamma_ += dt * parameter_rate_at(state, mid, t);
  return out;
}

// --- BodyOffsetLaw ----------------------------------------------------------

BodyOffsetLaw::BodyOffsetLaw(Path path, SpeedProfile profile, GuidanceGains gains,
                             double initial_gamma, double initial_gamma_rate,
                             bool compensate)
    : path_(std::move(path)),
      profile_(std::move(profile)),
      gains_(gains),
      compensate_(compensate),
      gamma_(initial_gamma),
      gamma_rate_(initial_gamma_rate) {
  gains_.validate();
  offset_interaction(gains_.body_offset);  // fail early on a singular offset
}

double BodyOffsetLaw::parameter_accel_at(const VehicleState& state, double gamma,
                                         double gamma_rate, double t) const {
  const PathPoint point = path_.eval_extended(gamma);
  const Rot2 to_body(state.heading);
  const Eigen::Vector2d eb =
      body_frame_error(state.position, state.heading, point.position, gains_.body_offset)
          .error;
  const double vd = parameter_rate(profile_, point, t);
  return -gains_.parameter_gain * (gamma_rate - vd) +
         eb.dot(to_body.to_frame(point.derivative)) +
         parameter_accel(profile_, point, gamma_rate, t);
}

GuidanceTelemetry BodyOffsetLaw::step(const VehicleState& state, double t, double dt,
                                      const std::optional<Eigen::Vector2d>& estimate) {
  const PathPoint point = path_.eval_extended(gamma_);
  const Rot2 to_body(state.heading);
  BodyFrameError body =
      body_frame_error(state.position, state.heading, point.position, gains_.body_offset);
  const double vd = parameter_rate(profile_, point, t);
  body.gamma_rate_error = gamma_rate_ - vd;

  Eigen::Vector2d desired =
      to_body.to_frame(point.derivative) * vd - gains_.position_gain * body.error;
  if (compensate_) {
    desired -= to_body.to_frame(require_estimate(estimate, "body-offset law"));
  }
  const Eigen::Vector2d input = offset_interaction(gains_.body_offset).inverse() * desired;
  const double accel = parameter_accel_at(state, gamma_, gamma_rate_, t);

  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);

  GuidanceTelemetry out;
  out.command.actuation = YawRateCommand{input.x(), input.y()};
  out.command.parameter_accel = accel;
  out.error = path_frame_error(state.position, state.heading, point, tangent);
  out.gamma = gamma_;
  out.gamma_rate = gamma_rate_;
  out.lyapunov = 0.5 * (body.error.squaredNorm() +
                        body.gamma_rate_error * body.gamma_rate_error);

  // Joint explicit-midpoint update of (gamma, gamma_rate).
  const double mid_gamma = gamma_ + 0.5 * dt * gamma_rate_;
  const double mid_rate = gamma_rate_ + 0.5 * dt * accel;
  gamma_ += dt * mid_rate;
  gamma_rate_ += dt * parameter_accel_at(state, mid_gamma, mid_rate, t);
  return out;
}

// --- FreeHeadingLaw ---------------------------------------------------------

FreeHeadingLaw::FreeHeadingLaw(Path path, SpeedProfile profile, GuidanceGains gains,
                               double initial_gamma, double initial_gamma_rate,
                               HeadingReference heading_reference)
    : path_(std::move(path)),
      profile_(std::move(profile)),
      gains_(gains),
      gamma_(initial_gamma),
      gamma_rate_(initial_gamma_rate),
      heading_reference_(std::move(heading_reference)) {
  gains_.validate();
  if (!heading_reference_) {
    throw ValidationError("free-heading law: missing heading reference");
  }
}

FreeHeadingLaw FreeHeadingLaw::tangent_offset(Path path, SpeedProfile profile,
                                              GuidanceGains gains, double initial_gamma,
                                              double initial_gamma_rate, double offset) {
  auto unwrap = std::make_shared<AngleUnwrapper>();
  Path ref_path = path;
  HeadingReference ref = [ref_path, offset, unwrap](double gamma, double) {
    return unwrap->unwrap(ref_path.eval_extended(gamma).tangent_angle) + offset;
  };
  return FreeHeadingLaw(std::move(path), std::move(profile), gains, initial_gamma,
                        initial_gamma_rate, std::move(ref));
}

double FreeHeadingLaw::parameter_accel_at(const VehicleState& state, double gamma,
                                          double gamma_rate, double t) const {
  const PathPoint point = path_.eval_extended(gamma);
  const Rot2 to_body(state.heading);
  const Eigen::Vector2d eb =
      body_frame_error(state.position, state.heading, point.position,
                       Eigen::Vector2d::Zero())
          .error;
  const double vd = parameter_rate(profile_, point, t);
  return -gains_.parameter_gain * (gamma_rate - vd) +
         eb.dot(to_body.to_frame(point.derivative)) +
         parameter_accel(profile_, point, gamma_rate, t);
}

GuidanceTelemetry FreeHeadingLaw::step(const VehicleState& state, double t, double dt,
                                       const std::optional<Eigen::Vector2d>&) {
  const PathPoint point = path_.eval_extended(gamma_);
  const Rot2 to_body(state.heading);
  BodyFrameError body = body_frame_error(state.position, state.heading, point.position,
                                         Eigen::Vector2d::Zero());
  const double vd = parameter_rate(profile_, point, t);
  body.gamma_rate_error = gamma_rate_ - vd;

  const Eigen::Vector2d velocity =
      to_body.to_frame(point.derivative) * vd - gains_.position_gain * body.error;
  const double accel = parameter_accel_at(state, gamma_, gamma_rate_, t);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);

  GuidanceTelemetry out;
  out.command.actuation =
      VelocityCommand{velocity.x(), velocity.y(), heading_reference_(gamma_, t)};
  out.command.parameter_accel = accel;
  out.error = path_frame_error(state.position, state.heading, point, tangent);
  out.gamma = gamma_;
  out.gamma_rate = gamma_rate_;
  out.lyapunov = 0.5 * (body.error.squaredNorm() +
                        body.gamma_rate_error * body.gamma_rate_error);

  const double mid_gamma = gamma_ + 0.5 * dt * gamma_rate_;
  const double mid_rate = gamma_rate_ + 0.5 * dt * accel;
  gamma_ += dt * mid_rate;
  gamma_rate_ += dt * parameter_accel_at(state, mid_gamma, mid_rate, t);
  return out;
}

}  // namespace pf
