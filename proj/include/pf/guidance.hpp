#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>

#include "pf/frames.hpp"
#include "pf/path.hpp"
#include "pf/path_errors.hpp"
#include "pf/vehicle.hpp"

namespace pf {

/// Tuning parameters shared by the closed-form guidance laws.  Defaults are
/// sized for the desk-scale scenarios shipped with the simulator.
struct GuidanceGains {
  double k1 = 1.0;                  // heading-error feedback
  double k2 = 1.0;                  // cross-track coupling
  double k3 = 0.5;                  // along-track coordination
  double approach_angle = M_PI / 4; // limit of the approach-angle shaper
  double approach_sharpness = 1.0;  // slope of the shaper
  double lookahead = 3.0;           // line-of-sight look-ahead distance [m]
  double integral_rate = 1.0;       // integral line-of-sight sigma
  Eigen::Matrix2d position_gain = 0.5 * Eigen::Matrix2d::Identity();
  double parameter_gain = 1.0;      // feedback on the parameter-rate error
  Eigen::Vector2d body_offset{1.0, 0.0};

  void validate() const;  // throws ValidationError on non-positive gains
};

struct YawRateCommand {
  double surge = 0.0;
  double yaw_rate = 0.0;
};

struct HeadingCommand {
  double surge = 0.0;
  double heading = 0.0;  // continuous (unwrapped) reference
};

struct VelocityCommand {
  double surge = 0.0;
  double sway = 0.0;
  double heading = 0.0;
};

/// What a guidance law asks of the inner loops, plus the optional command
/// for the path-parameter dynamics when the law drives a virtual target.
struct GuidanceCommand {
  std::variant<YawRateCommand, HeadingCommand, VelocityCommand> actuation;
  std::optional<double> parameter_rate;   // gamma_dot
  std::optional<double> parameter_accel;  // gamma_ddot
};

/// Per-step law outputs recorded by the harness.
struct GuidanceTelemetry {
  GuidanceCommand command;
  PathFrameError error;   // at the law's reference point
  double gamma = 0.0;
  double gamma_rate = 0.0;
  double lyapunov = 0.0;  // the law's certificate function
};

/// Common interface of all guidance laws.  A law instance owns its per-run
/// state (reference parameter, integrators, unwrappers) and must not be
/// shared between concurrent runs.  `current_estimate` carries the drift
/// estimate for the disturbance-compensated variants; laws that do not
/// compensate ignore it.
class GuidanceLaw {
 public:
  virtual ~GuidanceLaw() = default;
  virtual GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                                 const std::optional<Eigen::Vector2d>& current_estimate) = 0;
  virtual std::string_view name() const = 0;
};

// --- shared law building blocks -------------------------------------------

/// Approach-angle shaper delta(y1, u) = -limit * tanh(sharpness * y1 * u)
/// and its time derivative by the chain rule.  Satisfies delta(0, u) = 0 and
/// y1 * u * sin(delta) <= 0.
struct ApproachAngle {
  double angle = 0.0;
  double rate = 0.0;
};
ApproachAngle approach_angle(double cross_track, double surge, double cross_track_rate,
                             double surge_rate, double limit, double sharpness);

/// Yaw-rate law r = kappa*uP + ddelta - k1*(psi_e - delta)
///              - k2*y1*u*(sin(psi_e) - sin(delta))/(psi_e - delta).
/// The trailing ratio is evaluated in the stable product form
/// cos((psi_e+delta)/2) * sinc((psi_e-delta)/2), whose limit is cos(delta).
double shaped_yaw_rate(double heading_error, const ApproachAngle& approach,
                       double cross_track, double surge, double curvature,
                       double point_speed, double k1, double k2);

/// Line-of-sight heading error arctan(-y1 / lookahead).
double lookahead_heading_error(double cross_track, double lookahead);

/// Saturated heading error arcsin(sat(-k1*y1/u - lateral_current/u)); the
/// saturation keeps the arcsine total.
double saturated_heading_error(double cross_track, double surge, double k1,
                               double lateral_current);

/// Speed of the virtual target coordinating it with the vehicle:
/// uP = u cos(psi_e) + k3 * s1.
double coordination_speed(double surge, double heading_error, double along_track,
                          double k3);

// --- laws driving the path-frame error ------------------------------------

/// Surge + yaw-rate law on the orthogonally projected reference point; the
/// approach-angle shaper steers the vehicle onto the path.
class ApproachAngleLaw final : public GuidanceLaw {
 public:
  ApproachAngleLaw(Path path, SpeedProfile profile, GuidanceGains gains);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "method1"; }

 private:
  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  std::optional<double> last_gamma_;
  AngleUnwrapper tangent_unwrap_;
};

/// Same steering law on a virtual target whose parameter rate coordinates
/// the target with the vehicle; no projection and no curvature singularity.
class VirtualTargetLaw final : public GuidanceLaw {
 public:
  VirtualTargetLaw(Path path, SpeedProfile profile, GuidanceGains gains,
                   double initial_gamma);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "method2"; }

 private:
  double parameter_rate_at(const VehicleState& state, double gamma, double t) const;

  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  double gamma_;
  AngleUnwrapper tangent_unwrap_;
};

/// Classic look-ahead line-of-sight: heading reference tangent + arctan.
class LookaheadLosLaw final : public GuidanceLaw {
 public:
  LookaheadLosLaw(Path path, SpeedProfile profile, GuidanceGains gains);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "method3"; }

 private:
  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  std::optional<double> last_gamma_;
  AngleUnwrapper tangent_unwrap_;
};

/// Arcsine-saturated heading law; optionally cancels the estimated drift
/// component along the path normal.
class SaturatedLosLaw final : public GuidanceLaw {
 public:
  SaturatedLosLaw(Path path, SpeedProfile profile, GuidanceGains gains, bool compensate);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return compensate_ ? "method3_comp" : "method3_sat"; }

 private:
  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  bool compensate_;
  std::optional<double> last_gamma_;
  AngleUnwrapper tangent_unwrap_;
};

/// Look-ahead LOS augmented with a cross-track integrator that rejects a
/// constant lateral drift on straight lines.
class IntegralLosLaw final : public GuidanceLaw {
 public:
  IntegralLosLaw(Path path, SpeedProfile profile, GuidanceGains gains);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "ilos"; }
  double integrator() const { return integrator_; }

 private:
  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  double integrator_ = 0.0;  // y_int
  std::optional<double> last_gamma_;
  AngleUnwrapper tangent_unwrap_;
};

/// Heading-commanded virtual-target law: LOS heading with the coordinated
/// target speed.  Shares the coordination law with VirtualTargetLaw.
class LosVirtualTargetLaw final : public GuidanceLaw {
 public:
  LosVirtualTargetLaw(Path path, SpeedProfile profile, GuidanceGains gains,
                      double initial_gamma);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "method4"; }

 private:
  double parameter_rate_at(const VehicleState& state, double gamma, double t) const;

  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  double gamma_;
  AngleUnwrapper tangent_unwrap_;
};

/// Body-frame error law with a design offset: solves surge and yaw rate
/// from the offset interaction matrix and drives the reference point with a
/// second-order parameter command.  Globally exponentially stable; the
/// optional drift estimate is cancelled in the velocity command.
class BodyOffsetLaw final : public GuidanceLaw {
 public:
  BodyOffsetLaw(Path path, SpeedProfile profile, GuidanceGains gains, double initial_gamma,
                double initial_gamma_rate, bool compensate);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return compensate_ ? "method6_comp" : "method6"; }
  double gamma_rate() const { return gamma_rate_; }

 private:
  double parameter_accel_at(const VehicleState& state, double gamma, double gamma_rate,
                            double t) const;

  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  bool compensate_;
  double gamma_;
  double gamma_rate_;
  AngleUnwrapper tangent_unwrap_;
};

/// Fully-actuated law: the heading tracks an arbitrary reference while the
/// commanded body velocity vector stabilizes the (offset-free) body-frame
/// error; the parameter follows the same second-order command.
class FreeHeadingLaw final : public GuidanceLaw {
 public:
  using HeadingReference = std::function<double(double gamma, double t)>;

  FreeHeadingLaw(Path path, SpeedProfile profile, GuidanceGains gains, double initial_gamma,
                 double initial_gamma_rate, HeadingReference heading_reference);

  /// Heading reference offset from the (unwrapped) path tangent.
  static FreeHeadingLaw tangent_offset(Path path, SpeedProfile profile, GuidanceGains gains,
                                       double initial_gamma, double initial_gamma_rate,
                                       double offset);

  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "fully_actuated"; }

 private:
  double parameter_accel_at(const VehicleState& state, double gamma, double gamma_rate,
                            double t) const;

  Path path_;
  SpeedProfile profile_;
  GuidanceGains gains_;
  double gamma_;
  double gamma_rate_;
  HeadingReference heading_reference_;
  AngleUnwrapper tangent_unwrap_;
};

}  // namespace pf
