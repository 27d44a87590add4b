#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace pf {

/// Full differential-geometric description of one point on a parametric
/// curve: position, first/second derivatives with respect to the path
/// parameter, tangent angle, signed curvature and parametric speed.
struct PathPoint {
  double gamma = 0.0;
  Eigen::Vector2d position{0.0, 0.0};
  Eigen::Vector2d derivative{0.0, 0.0};         // dp/dgamma
  Eigen::Vector2d second_derivative{0.0, 0.0};  // d2p/dgamma2
  double tangent_angle = 0.0;                   // atan2(y', x'), in (-pi, pi]
  double curvature = 0.0;                       // signed, (x'y'' - x''y') / |p'|^3
  double arc_speed = 0.0;                       // |dp/dgamma|
};

namespace detail {
class Curve;
}

/// Immutable parametric planar curve.
///
/// The parameter gamma is not assumed to be arc length; every consumer of a
/// PathPoint must carry the arc_speed factor explicitly.  Instances share
/// the underlying curve and are cheap to copy; all member functions are
/// const and safe to call concurrently.
class Path {
 public:
  struct Domain {
    double lower = 0.0;
    double upper = 0.0;
    double length() const { return upper - lower; }
  };

  /// Straight segment of the given length, parameterized by arc length.
  static Path line(const Eigen::Vector2d& origin, double heading, double length);

  /// Full circle of radius r centered at `center`, parameterized by the
  /// polar angle in [0, 2*pi); p(0) = center + (r, 0).
  static Path circle(const Eigen::Vector2d& center, double radius);

  /// Constant-curvature arc parameterized by arc length, starting at
  /// `start` with the given tangent heading.  Positive curvature turns the
  /// tangent counterclockwise.
  static Path arc(const Eigen::Vector2d& start, double heading, double curvature,
                  double length);

  /// Bernoulli lemniscate x = c cos(g)/(1+sin^2 g), y = c sin(g)cos(g)/(1+sin^2 g),
  /// g in [0, 2*pi); `half_width` is c, the distance from center to apex.
  static Path lemniscate(const Eigen::Vector2d& center, double half_width);

  /// Sine-shaped sweep: local x runs along `heading` for `length` meters
  /// while local y oscillates with the given amplitude and wavelength.
  static Path sinusoid(const Eigen::Vector2d& origin, double heading, double amplitude,
                       double wavelength, double length);

  /// Chains segments end-to-start into one curve; the parameter of each
  /// segment is offset so the composite domain is contiguous.  Segments
  /// must be C0 at junctions (gap below 1e-9 m).
  static Path composite(std::vector<Path> segments);

  /// Survey pattern: leg1, half turn (clockwise), leg2 back, half turn
  /// (counterclockwise), leg3.  Parameterized by cumulative arc length.
  static Path lawnmower(double leg1, double turn_radius, double leg2, double leg3,
                        double heading, const Eigen::Vector2d& origin);

  Domain domain() const;
  bool closed() const;

  /// True when the curvature vanishes everywhere (sampled).
  bool is_straight() const;

  /// Evaluates the curve at gamma.  Throws OutOfDomain outside the domain
  /// and DegenerateTangent if |p'| < 1e-12.
  PathPoint eval(double gamma) const;

  /// Same, but first brings gamma into the domain: closed curves wrap the
  /// parameter, open curves clamp it to the ends.
  PathPoint eval_clamped(double gamma) const;

  /// Evaluation on the whole real line: closed curves wrap; open curves
  /// continue straight along the end tangents (C1 linear extension).  Used
  /// by laws that drive a virtual reference point, which may run the
  /// parameter past the ends while converging.
  PathPoint eval_extended(double gamma) const;

  /// Parameter of the point closest to p.  Lines and circles are solved
  /// analytically; other curves use a coarse scan (grid_samples points)
  /// refined by golden-section search to |dgamma| < 1e-8.  Throws
  /// AmbiguousProjection when two minima tie in distance (within 1e-9 m)
  /// but are more than 5% of the domain apart.
  double project(const Eigen::Vector2d& p, int grid_samples = 2048) const;

  /// Projection seeded with a previous solution: only a window around
  /// `seed` is searched, which keeps the projected parameter continuous
  /// along a moving query point.  Falls back to the global search when the
  /// minimum lands on the window edge.
  double project(const Eigen::Vector2d& p, double seed, int grid_samples = 2048) const;

 private:
  explicit Path(std::shared_ptr<const detail::Curve> curve);
  double normalize(double gamma) const;
  double polish_projection(const Eigen::Vector2d& p, double gamma, double max_step) const;

  std::shared_ptr<const detail::Curve> curve_;
};

/// Desired vehicle speed along a path, constant or a function of the path
/// parameter and time.  rate() is the total time derivative dUd/dt supplied
/// by the author of the profile (zero for a constant profile).
class SpeedProfile {
 public:
  static SpeedProfile constant(double speed);
  SpeedProfile(std::function<double(double, double)> speed,
               std::function<double(double, double)> rate);

  double speed(double gamma, double t) const;
  double rate(double gamma, double t) const;

 private:
  SpeedProfile() = default;
  double constant_speed_ = 0.0;
  std::function<double(double, double)> speed_fn_;
  std::function<double(double, double)> rate_fn_;
};

/// Desired rate of the path parameter, v_d = Ud / |p'|.
double parameter_rate(const SpeedProfile& profile, const PathPoint& point, double t);

/// Largest v_d over a sample grid of the domain (used to size NMPC bounds).
double parameter_rate_max(const SpeedProfile& profile, const Path& path, double t,
                          int samples = 512);

/// Total time derivative of v_d along a trajectory with the given gamma
/// rate: dv_d/dt = dUd/dt / |p'| - Ud (p'.p'') gamma_dot / |p'|^3.
double parameter_accel(const SpeedProfile& profile, const PathPoint& point,
                       double gamma_rate, double t);

}  // namespace pf
