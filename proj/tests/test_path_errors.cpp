#include <doctest.h>

#include <cmath>

#include "pf/exceptions.hpp"
#include "pf/frames.hpp"
#include "pf/path.hpp"
#include "pf/path_errors.hpp"
#include "pf/vehicle.hpp"
#include "support.hpp"

using pf::BodyFrameError;
using pf::Path;
using pf::PathFrameError;
using pf::VehicleState;
using test_support::uniform;

TEST_CASE("path-frame error: direct geometry") {
  Path line = Path::line({0.0, 0.0}, 0.0, 50.0);
  // Vehicle on the path, aligned.
  PathFrameError zero = pf::path_frame_error({10.0, 0.0}, 0.0, line.eval(10.0));
  CHECK(zero.along_track == doctest::Approx(0.0));
  CHECK(zero.cross_track == doctest::Approx(0.0));
  CHECK(zero.heading_error == doctest::Approx(0.0));

  PathFrameError e = pf::path_frame_error({2.0, 1.0}, 0.0, line.eval(0.0));
  CHECK(e.along_track == doctest::Approx(2.0));
  CHECK(e.cross_track == doctest::Approx(1.0));

  // Tangent at a quarter turn: (0,3) resolves onto the along-track axis.
  Path up = Path::line({0.0, 0.0}, M_PI / 2, 50.0);
  PathFrameError q = pf::path_frame_error({0.0, 3.0}, M_PI / 2, up.eval(0.0));
  CHECK(q.along_track == doctest::Approx(3.0));
  CHECK(q.cross_track == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotation preserves the error norm") {
  Path lem = Path::lemniscate({0.0, 0.0}, 20.0);
  for (int i = 0; i < 50; ++i) {
    const double g = uniform(0.0, 2.0 * M_PI);
    const Eigen::Vector2d p{uniform(-30, 30), uniform(-30, 30)};
    const auto point = lem.eval(g);
    PathFrameError e = pf::path_frame_error(p, uniform(-3, 3), point);
    const double norm = std::hypot(e.along_track, e.cross_track);
    CHECK(norm == doctest::Approx((p - point.position).norm()).epsilon(1e-12));
  }
}

TEST_CASE("path-frame error rates: closed-form special cases") {
  PathFrameError eq;  // on the path, aligned
  auto rates = pf::path_frame_error_rates(eq, 0.5, 0.5, 0.0, 0.0, 0.0);
  CHECK(rates.along_track == doctest::Approx(0.0));
  CHECK(rates.cross_track == doctest::Approx(0.0));

  // Straight segment, on-path projection: cross-track rate is u sin(psi_e).
  PathFrameError off;
  off.heading_error = 0.4;
  auto r2 = pf::path_frame_error_rates(off, 0.5, 0.5 * std::cos(0.4), 0.0, 0.0, 0.0);
  CHECK(r2.cross_track == doctest::Approx(0.5 * std::sin(0.4)));
}

TEST_CASE("path-frame error rates match finite differences along a trajectory") {
  // Plant and reference point are advanced together; the analytic rates
  // must match the central difference of the recomputed error.
  Path circle = Path::circle({0.0, 0.0}, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    VehicleState s;
    s.position = {uniform(-15, 15), uniform(-15, 15)};
    s.heading = uniform(-2, 2);
    s.current = {uniform(-0.2, 0.2), uniform(-0.2, 0.2)};
    const double surge = uniform(0.2, 0.8);
    const double yaw_rate = uniform(-0.3, 0.3);
    double gamma = uniform(0.5, 5.5);
    const double gamma_rate = uniform(-0.05, 0.08);

    const double h = 1e-4;
    auto error_at = [&](double offset) {
      VehicleState sh = s;
      const pf::ActuationInput input{surge, yaw_rate, 0.0};
      if (offset > 0) sh = pf::step_with_current(sh, input, offset);
      const auto point = circle.eval_clamped(gamma + gamma_rate * offset);
      return pf::path_frame_error(sh.position, sh.heading, point);
    };
    // Central difference around t = h using states at t = 0 and t = 2h.
    const PathFrameError e0 = error_at(0.0);
    const PathFrameError e1 = error_at(h);
    const PathFrameError e2 = error_at(2.0 * h);
    (void)e0;

    const auto point = circle.eval_clamped(gamma + gamma_rate * h);
    const double point_speed = pf::point_speed(point, gamma_rate);
    auto mid_state = [&]() {
      VehicleState sh = pf::step_with_current(s, {surge, yaw_rate, 0.0}, h);
      return sh;
    }();
    const PathFrameError mid =
        pf::path_frame_error(mid_state.position, mid_state.heading, point);
    const auto rates =
        pf::path_frame_error_rates(mid, surge, point_speed, point.curvature,
                                   yaw_rate, point.tangent_angle, mid_state.current);

    const double fd_s1 = (e2.along_track - e0.along_track) / (2.0 * h);
    const double fd_y1 = (e2.cross_track - e0.cross_track) / (2.0 * h);
    const double fd_psi =
        std::remainder(e2.heading_error - e0.heading_error, 2.0 * M_PI) / (2.0 * h);
    const double scale = std::max(
        1.0, Eigen::Vector3d(rates.along_track, rates.cross_track, rates.heading_error)
                 .norm());
    CHECK(std::abs(fd_s1 - rates.along_track) / scale < 1e-3);
    CHECK(std::abs(fd_y1 - rates.cross_track) / scale < 1e-3);
    CHECK(std::abs(fd_psi - rates.heading_error) / scale < 1e-3);
  }
}

TEST_CASE("body-frame error: offset equilibrium and direct substitution") {
  const Eigen::Vector2d offset{1.0, 0.0};
  // p - pd equals the offset rotated into the world: error is zero.
  const double psi = 0.7;
  const Eigen::Vector2d pd{3.0, -2.0};
  const Eigen::Vector2d p = pd + pf::Rot2(psi).to_world(offset);
  BodyFrameError zero = pf::body_frame_error(p, psi, pd, offset);
  CHECK(zero.error.norm() < 1e-12);

  BodyFrameError sub = pf::body_frame_error(pd, 0.0, pd, offset);
  CHECK(sub.error.x() == doctest::Approx(-1.0));
  CHECK(sub.error.y() == doctest::Approx(0.0));
}

TEST_CASE("body-frame error rates match finite differences along a trajectory") {
  Path circle = Path::circle({0.0, 0.0}, 10.0);
  const Eigen::Vector2d offset{1.0, 0.0};
  for (int trial = 0; trial < 20; ++trial) {
    VehicleState s;
    s.position = {uniform(-15, 15), uniform(-15, 15)};
    s.heading = uniform(-2, 2);
    s.current = {uniform(-0.2, 0.2), uniform(-0.2, 0.2)};
    const double surge = uniform(0.2, 0.8);
    const double yaw_rate = uniform(-0.3, 0.3);
    double gamma = uniform(0.5, 5.5);
    const double gamma_rate = uniform(-0.05, 0.08);

    const double h = 1e-4;
    auto error_at = [&](double offset_t) {
      VehicleState sh = s;
      if (offset_t > 0) sh = pf::step_with_current(sh, {surge, yaw_rate, 0.0}, offset_t);
      const auto point = circle.eval_clamped(gamma + gamma_rate * offset_t);
      return pf::body_frame_error(sh.position, sh.heading, point.position, offset).error;
    };
    const Eigen::Vector2d e0 = error_at(0.0);
    const Eigen::Vector2d e2 = error_at(2.0 * h);

    VehicleState mid_state = pf::step_with_current(s, {surge, yaw_rate, 0.0}, h);
    const auto point = circle.eval_clamped(gamma + gamma_rate * h);
    const Eigen::Vector2d mid =
        pf::body_frame_error(mid_state.position, mid_state.heading, point.position, offset)
            .error;
    // Body velocity contribution Delta * (u, r) for the offset formulation.
    const Eigen::Vector2d body_velocity{surge + offset.y() * yaw_rate,
                                        -offset.x() * yaw_rate};
    const Eigen::Vector2d rates = pf::body_frame_error_rates(
        mid, yaw_rate, body_velocity, mid_state.heading, point.derivative, gamma_rate,
        mid_state.current);

    const Eigen::Vector2d fd = (e2 - e0) / (2.0 * h);
    CHECK((fd - rates).norm() / std::max(1.0, rates.norm()) < 1e-3);
  }
}

TEST_CASE("reference point speeds") {
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  CHECK(pf::point_speed(line.eval(2.0), 0.5) == doctest::Approx(0.5));

  // Straight-line limit of the projected-point speed.
  CHECK(pf::projected_point_speed(0.5, 0.3, 4.0, 0.0) ==
        doctest::Approx(0.5 * std::cos(0.3)));

  CHECK_THROWS_AS((void)pf::projected_point_speed(0.5, 0.0, 10.0, 0.1),
                  pf::ProjectionSingularity);
}
