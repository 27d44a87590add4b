#include "pf/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pf/exceptions.hpp"

namespace pf {
namespace detail {

class Curve {
 public:
  virtual ~Curve() = default;
  virtual Path::Domain domain() const = 0;
  virtual bool closed() const { return false; }
  virtual void raw_eval(double gamma, Eigen::Vector2d& p, Eigen::Vector2d& d1,
                        Eigen::Vector2d& d2) const = 0;
  /// Analytic closest-point solution where one exists.
  virtual std::optional<double> analytic_project(const Eigen::Vector2d&) const {
    return std::nullopt;
  }
};

namespace {

class LineCurve final : public Curve {
 public:
  LineCurve(const Eigen::Vector2d& origin, double heading, double length)
      : origin_(origin), dir_(std::cos(heading), std::sin(heading)), length_(length) {
    if (!(length > 0.0)) throw ValidationError("line: length must be positive");
  }

  Path::Domain domain() const override { return {0.0, length_}; }

  void raw_eval(double g, Eigen::Vector2d& p, Eigen::Vector2d& d1,
                Eigen::Vector2d& d2) const override {
    p = origin_ + g * dir_;
    d1 = dir_;
    d2.setZero();
  }

  std::optional<double> analytic_project(const Eigen::Vector2d& p) const override {
    double t = (p - origin_).dot(dir_);
    return std::clamp(t, 0.0, length_);
  }

 private:
  Eigen::Vector2d origin_;
  Eigen::Vector2d dir_;
  double length_;
};

class CircleCurve final : public Curve {
 public:
  CircleCurve(const Eigen::Vector2d& center, double radius)
      : center_(center), radius_(radius) {
    if (!(radius > 0.0)) throw ValidationError("circle: radius must be positive");
  }

  Path::Domain domain() const override { return {0.0, 2.0 * M_PI}; }
  bool closed() const override { return true; }

  void raw_eval(double g, Eigen::Vector2d& p, Eigen::Vector2d& d1,
                Eigen::Vector2d& d2) const override {
    double c = std::cos(g), s = std::sin(g);
    p = center_ + radius_ * Eigen::Vector2d(c, s);
    d1 = radius_ * Eigen::Vector2d(-s, c);
    d2 = radius_ * Eigen::Vector2d(-c, -s);
  }

  std::optional<double> analytic_project(const Eigen::Vector2d& p) const override {
    Eigen::Vector2d rel = p - center_;
    if (rel.norm() < 1e-9) {
      throw AmbiguousProjection("projection of the circle center is undefined");
    }
    double a = std::atan2(rel.y(), rel.x());
    if (a < 0.0) a += 2.0 * M_PI;
    return a;
  }

 private:
  Eigen::Vector2d center_;
  double radius_;
};

// Arc-length parameterized constant-curvature segment (straight when
// curvature == 0); tangent angle is heading + curvature * gamma.
class ArcCurve final : public Curve {
 public:
  ArcCurve(const Eigen::Vector2d& start, double heading, double curvature, double length)
      : start_(start), heading_(heading), curvature_(curvature), length_(length) {
    if (!(length > 0.0)) throw ValidationError("arc: length must be positive");
  }

  Path::Domain domain() const override { return {0.0, length_}; }

  void raw_eval(double g, Eigen::Vector2d& p, Eigen::Vector2d& d1,
                Eigen::Vector2d& d2) const override {
    double a = heading_ + curvature_ * g;
    double ca = std::cos(a), sa = std::sin(a);
    if (std::abs(curvature_) < 1e-15) {
      p = start_ + g * Eigen::Vector2d(std::cos(heading_), std::sin(heading_));
    } else {
      p = start_ + Eigen::Vector2d(sa - std::sin(heading_), std::cos(heading_) - ca) /
                       curvature_;
    }
    d1 = {ca, sa};
    d2 = curvature_ * Eigen::Vector2d(-sa, ca);
  }

 private:
  Eigen::Vector2d start_;
  double heading_;
  double curvature_;
  double length_;
};

class LemniscateCurve final : public Curve {
 public:
  LemniscateCurve(const Eigen::Vector2d& center, double half_width)
      : center_(center), c_(half_width) {
    if (!(half_width > 0.0)) throw ValidationError("lemniscate: half_width must be positive");
  }

  Path::Domain domain() const override { return {0.0, 2.0 * M_PI}; }
  bool closed() const override { return true; }

  void raw_eval(double g, Eigen::Vector2d& p, Eigen::Vector2d& d1,
                Eigen::Vector2d& d2) const override {
    double sg = std::sin(g), cg = std::cos(g);
    double s2 = std::sin(2.0 * g), c2 = std::cos(2.0 * g);
    double d = 1.0 + sg * sg;   // denominator
    double dp = s2;             // d'
    double dpp = 2.0 * c2;      // d''

    p = center_ + (c_ / d) * Eigen::Vector2d(cg, sg * cg);

    // x = c*cos(g)/d: quotient rule, numerator u1 = -sin(g)*d - cos(g)*d'
    double u1 = -sg * d - cg * dp;
    double u1p = -cg * (d + dpp);
    double x1 = c_ * u1 / (d * d);
    double x2 = c_ * (u1p * d - 2.0 * u1 * dp) / (d * d * d);

    // y = (c/2)*sin(2g)/d: numerator v1 = 2*cos(2g)*d - sin(2g)*d'
    double v1 = 2.0 * c2 * d - s2 * dp;
    double v1p = (-4.0 * s2 * d + 2.0 * c2 * dp) - (2.0 * c2 * dp + s2 * dpp);
    double y1 = 0.5 * c_ * v1 / (d * d);
    double y2 = 0.5 * c_ * (v1p * d - 2.0 * v1 * dp) / (d * d * d);

    d1 = {x1, y1};
    d2 = {x2, y2};
  }

 private:
  Eigen::Vector2d center_;
  double c_;
};

class SinusoidCurve final : public Curve {
 public:
  SinusoidCurve(const Eigen::Vector2d& origin, double heading, double amplitude,
                double wavelength, double length)
      : origin_(origin),
        cos_h_(std::cos(heading)),
        sin_h_(std::sin(heading)),
        amplitude_(amplitude),
        omega_(2.0 * M_PI / wavelength),
        length_(length) {
    if (!(wavelength > 0.0)) throw ValidationError("sinusoid: wavelength must be positive");
    if (!(length > 0.0)) throw ValidationError("sinusoid: length must be positive");
  }

  Path::Domain domain() const override { return {0.0, length_}; }

  void raw_eval(double g, Eigen::Vector2d& p, Eigen::Vector2d& d1,
                Eigen::Vector2d& d2) const override {
    double y = amplitude_ * std::sin(omega_ * g);
    double y1 = amplitude_ * omega_ * std::cos(omega_ * g);
    double y2 = -amplitude_ * omega_ * omega_ * std::sin(omega_ * g);
    p = origin_ + Eigen::Vector2d(cos_h_ * g - sin_h_ * y, sin_h_ * g + cos_h_ * y);
    d1 = {cos_h_ - sin_h_ * y1, sin_h_ + cos_h_ * y1};
    d2 = {-sin_h_ * y2, cos_h_ * y2};
  }

 private:
  Eigen::Vector2d origin_;
  double cos_h_, sin_h_;
  double amplitude_;
  double omega_;
  double length_;
};

class CompositeCurve final : public Curve {
 public:
  explicit CompositeCurve(std::vector<std::shared_ptr<const Curve>> segments)
      : segments_(std::move(segments)) {
    if (segments_.empty()) throw ValidationError("composite: no segments");
    boundaries_.push_back(0.0);
    for (const auto& seg : segments_) {
      boundaries_.push_back(boundaries_.back() + seg->domain().length());
    }
    for (std::size_t k = 0; k + 1 < segments_.size(); ++k) {
      Eigen::Vector2d end, start, d1, d2;
      segments_[k]->raw_eval(segments_[k]->domain().upper, end, d1, d2);
      segments_[k + 1]->raw_eval(segments_[k + 1]->domain().lower, start, d1, d2);
      if ((end - start).norm() >= 1e-9) {
        std::ostringstream msg;
        msg << "composite: segments " << k << " and " << k + 1 << " are not C0 (gap "
            << (end - start).norm() << " m)";
        throw ValidationError(msg.str());
      }
    }
  }

  Path::Domain domain() const override { return {0.0, boundaries_.back()}; }

  void raw_eval(double g, Eigen::Vector2d& p, Eigen::Vector2d& d1,
                Eigen::Vector2d& d2) const override {
    // Junction parameters evaluate the incoming segment (one-sided
    // derivatives); the curve is only C0 there.
    auto it = std::lower_bound(boundaries_.begin() + 1, boundaries_.end(), g);
    std::size_t idx = static_cast<std::size_t>(it - boundaries_.begin()) - 1;
    idx = std::min(idx, segments_.size() - 1);
    double local = g - boundaries_[idx] + segments_[idx]->domain().lower;
    segments_[idx]->raw_eval(local, p, d1, d2);
  }

 private:
  std::vector<std::shared_ptr<const Curve>> segments_;
  std::vector<double> boundaries_;
};

double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

}  // namespace
}  // namespace detail

Path::Path(std::shared_ptr<const detail::Curve> curve) : curve_(std::move(curve)) {}

Path Path::line(const Eigen::Vector2d& origin, double heading, double length) {
  return Path(std::make_shared<detail::LineCurve>(origin, heading, length));
}

Path Path::circle(const Eigen::Vector2d& center, double radius) {
  return Path(std::make_shared<detail::CircleCurve>(center, radius));
}

Path Path::arc(const Eigen::Vector2d& start, double heading, double curvature,
               double length) {
  return Path(std::make_shared<detail::ArcCurve>(start, heading, curvature, length));
}

Path Path::lemniscate(const Eigen::Vector2d& center, double half_width) {
  return Path(std::make_shared<detail::LemniscateCurve>(center, half_width));
}

Path Path::sinusoid(const Eigen::Vector2d& origin, double heading, double amplitude,
                    double wavelength, double length) {
  return Path(
      std::make_shared<detail::SinusoidCurve>(origin, heading, amplitude, wavelength, length));
}

Path Path::composite(std::vector<Path> segments) {
  std::vector<std::shared_ptr<const detail::Curve>> curves;
  curves.reserve(segments.size());
  for (auto& s : segments) curves.push_back(s.curve_);
  return Path(std::make_shared<detail::CompositeCurve>(std::move(curves)));
}

Path Path::lawnmower(double leg1, double turn_radius, double leg2, double leg3,
                     double heading, const Eigen::Vector2d& origin) {
  if (!(leg1 > 0.0 && turn_radius > 0.0 && leg2 > 0.0 && leg3 > 0.0)) {
    throw ValidationError("lawnmower: all lengths must be positive");
  }
  auto endpoint = [](const Path& p) {
    PathPoint end = p.eval(p.domain().upper);
    return end;
  };
  double half_turn = M_PI * turn_radius;
  std::vector<Path> segs;
  segs.push_back(line(origin, heading, leg1));
  PathPoint e = endpoint(segs.back());
  segs.push_back(arc(e.position, heading, -1.0 / turn_radius, half_turn));
  e = endpoint(segs.back());
  segs.push_back(line(e.position, heading - M_PI, leg2));
  e = endpoint(segs.back());
  segs.push_back(arc(e.position, heading - M_PI, 1.0 / turn_radius, half_turn));
  e = endpoint(segs.back());
  segs.push_back(line(e.position, heading, leg3));
  return composite(std::move(segs));
}

Path::Domain Path::domain() const { return curve_->domain(); }

bool Path::closed() const { return curve_->closed(); }

bool Path::is_straight() const {
  const Domain dom = domain();
  for (int i = 0; i <= 128; ++i) {
    double g = dom.lower + dom.length() * i / 128.0;
    if (std::abs(eval_clamped(g).curvature) > 1e-12) return false;
  }
  return true;
}

PathPoint Path::eval(double gamma) const {
  const Domain dom = domain();
  constexpr double kEdgeTol = 1e-12;
  if (gamma < dom.lower - kEdgeTol || gamma > dom.upper + kEdgeTol) {
    std::ostringstream msg;
    msg << "gamma " << gamma << " outside domain [" << dom.lower << ", " << dom.upper << "]";
    throw OutOfDomain(msg.str());
  }
  gamma = std::clamp(gamma, dom.lower, dom.upper);

  PathPoint point;
  point.gamma = gamma;
  curve_->raw_eval(gamma, point.position, point.derivative, point.second_derivative);
  point.arc_speed = point.derivative.norm();
  if (point.arc_speed < 1e-12) {
    throw DegenerateTangent("curve derivative vanished; tangent undefined");
  }
  point.tangent_angle = std::atan2(point.derivative.y(), point.derivative.x());
  double cross = point.derivative.x() * point.second_derivative.y() -
                 point.second_derivative.x() * point.derivative.y();
  point.curvature = cross / (point.arc_speed * point.arc_speed * point.arc_speed);
  if (!point.position.allFinite() || !point.derivative.allFinite() ||
      !point.second_derivative.allFinite()) {
    throw NonFinite("curve evaluation produced a non-finite value");
  }
  return point;
}

double Path::normalize(double gamma) const {
  const Domain dom = domain();
  if (closed()) {
    double len = dom.length();
    double g = std::fmod(gamma - dom.lower, len);
    if (g < 0.0) g += len;
    return dom.lower + g;
  }
  return std::clamp(gamma, dom.lower, dom.upper);
}

PathPoint Path::eval_clamped(double gamma) const { return eval(normalize(gamma)); }

PathPoint Path::eval_extended(double gamma) const {
  const Domain dom = domain();
  if (closed() || (gamma >= dom.lower && gamma <= dom.upper)) {
    return eval(normalize(gamma));
  }
  const double edge = gamma < dom.lower ? dom.lower : dom.upper;
  PathPoint point = eval(edge);
  point.gamma = gamma;
  point.position += (gamma - edge) * point.derivative;
  point.second_derivative.setZero();
  point.curvature = 0.0;
  return point;
}

double Path::polish_projection(const Eigen::Vector2d& p, double gamma,
                               double max_step) const {
  // Newton iterations on the stationarity condition (p(g) - q) . p'(g) = 0,
  // tightening the golden-section result toward machine precision.
  for (int it = 0; it < 4; ++it) {
    const PathPoint pt = eval(normalize(gamma));
    const Eigen::Vector2d rel = pt.position - p;
    const double slope = rel.dot(pt.derivative);
    const double curvature_term =
        pt.derivative.squaredNorm() + rel.dot(pt.second_derivative);
    if (curvature_term <= 0.0) break;  // not locally convex; keep the bracket result
    const double step = slope / curvature_term;
    if (!std::isfinite(step) || std::abs(step) > max_step) break;
    gamma = normalize(gamma - step);
    if (std::abs(step) < 1e-14) break;
  }
  return gamma;
}

double Path::project(const Eigen::Vector2d& p, int grid_samples) const {
  if (auto g = curve_->analytic_project(p)) return *g;

  const Domain dom = domain();
  const double len = dom.length();
  const int n = std::max(grid_samples, 16);
  const double step = len / n;
  // Closed curves include the wrap interval by sampling one extra cell.
  const int last = closed() ? n - 1 : n;

  std::vector<double> dist(static_cast<std::size_t>(last) + 1);
  for (int i = 0; i <= last; ++i) {
    dist[i] = (eval_clamped(dom.lower + i * step).position - p).norm();
  }
  auto neighbor = [&](int i, int off) {
    int j = i + off;
    if (closed()) return (j % (last + 1) + (last + 1)) % (last + 1);
    return std::clamp(j, 0, last);
  };

  std::vector<int> minima;
  for (int i = 0; i <= last; ++i) {
    if (dist[i] <= dist[neighbor(i, -1)] && dist[i] <= dist[neighbor(i, 1)]) {
      minima.push_back(i);
    }
  }

  auto refine = [&](int i) {
    double lo = dom.lower + (i - 1) * step;
    double hi = dom.lower + (i + 1) * step;
    double g = detail::golden_section(
        [&](double x) { return (eval_clamped(x).position - p).norm(); }, lo, hi, 1e-8);
    return polish_projection(p, normalize(g), step);
  };

  int best = minima.front();
  for (int i : minima) {
    if (dist[i] < dist[best]) best = i;
  }
  double best_gamma = refine(best);
  double best_dist = (eval_clamped(best_gamma).position - p).norm();

  for (int i : minima) {
    if (i == best) continue;
    double sep = std::abs(i - best) * step;
    if (closed()) sep = std::min(sep, len - sep);
    if (sep <= 0.05 * len) continue;
    if (dist[i] > best_dist + step) continue;  // cannot tie after refinement
    double rival_gamma = refine(i);
    double rival_dist = (eval_clamped(rival_gamma).position - p).norm();
    if (std::abs(rival_dist - best_dist) < 1e-9) {
      throw AmbiguousProjection("two closest-point candidates tie far apart on the curve");
    }
    if (rival_dist < best_dist) {
      best_dist = rival_dist;
      best_gamma = rival_gamma;
    }
  }
  return best_gamma;
}

double Path::project(const Eigen::Vector2d& p, double seed, int grid_samples) const {
  if (auto g = curve_->analytic_project(p)) return *g;

  const Domain dom = domain();
  const double len = dom.length();
  const double window = std::max(0.05 * len, 32.0 * len / std::max(grid_samples, 16));
  const int n = 128;
  const double step = 2.0 * window / n;

  double best_gamma = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i <= n; ++i) {
    double g = seed - window + i * step;
    if (!closed()) g = std::clamp(g, dom.lower, dom.upper);
    double d = (eval_clamped(g).position - p).norm();
    if (d < best_dist) {
      best_dist = d;
      best_gamma = g;
      best_i = i;
    }
  }
  // A minimum at the window edge means the query left the neighborhood of
  // the seed; redo the search globally.
  if (best_i == 0 || best_i == n) {
    bool at_domain_end = false;
    if (!closed()) {
      double g_edge = best_i == 0 ? seed - window : seed + window;
      at_domain_end = g_edge <= dom.lower || g_edge >= dom.upper;
    }
    if (!at_domain_end) return project(p, grid_samples);
  }

  double lo = best_gamma - step;
  double hi = best_gamma + step;
  if (!closed()) {
    lo = std::max(lo, dom.lower);
    hi = std::min(hi, dom.upper);
  }
  double g = detail::golden_section(
      [&](double x) { return (eval_clamped(x).position - p).norm(); }, lo, hi, 1e-8);
  return polish_projection(p, normalize(g), step);
}

SpeedProfile SpeedProfile::constant(double speed) {
  if (!(speed > 0.0)) throw ValidationError("speed profile: desired speed must be positive");
  SpeedProfile p;
  p.constant_speed_ = speed;
  return p;
}

SpeedProfile::SpeedProfile(std::function<double(double, double)> speed,
                           std::function<double(double, double)> rate)
    : speed_fn_(std::move(speed)), rate_fn_(std::move(rate)) {
  if (!speed_fn_) throw ValidationError("speed profile: missing speed function");
}

double SpeedProfile::speed(double gamma, double t) const {
  double u = speed_fn_ ? speed_fn_(gamma, t) : constant_speed_;
  if (!(u > 0.0)) throw ValidationError("speed profile: desired speed must be positive");
  return u;
}

double SpeedProfile::rate(double gamma, double t) const {
  if (rate_fn_) return rate_fn_(gamma, t);
  return 0.0;
}

double parameter_rate(const SpeedProfile& profile, const PathPoint& point, double t) {
  if (point.arc_speed < 1e-12) throw DegenerateTangent("parameter_rate: |p'| ~ 0");
  return profile.speed(point.gamma, t) / point.arc_speed;
}

double parameter_rate_max(const SpeedProfile& profile, const Path& path, double t,
                          int samples) {
  const Path::Domain dom = path.domain();
  double vmax = 0.0;
  for (int i = 0; i <= samples; ++i) {
    double g = dom.lower + dom.length() * i / samples;
    vmax = std::max(vmax, parameter_rate(profile, path.eval_clamped(g), t));
  }
  return vmax;
}

double parameter_accel(const SpeedProfile& profile, const PathPoint& point,
                       double gamma_rate, double t) {
  double s = point.arc_speed;
  double ds_dgamma = point.derivative.dot(point.second_derivative) / s;
  return profile.rate(point.gamma, t) / s -
         profile.speed(point.gamma, t) * ds_dgamma * gamma_rate / (s * s);
}

}  // namespace pf
