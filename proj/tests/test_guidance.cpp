#include <doctest.h>

#include <cmath>

#include "pf/exceptions.hpp"
#include "pf/guidance.hpp"
#include "pf/path.hpp"
#include "support.hpp"

using namespace pf;
using test_support::uniform;

namespace {

GuidanceGains default_gains() { return GuidanceGains{}; }

SpeedProfile half_speed() { return SpeedProfile::constant(0.5); }

}  // namespace

TEST_CASE("gain validation") {
  GuidanceGains g;
  CHECK_NOTHROW(g.validate());
  g.k1 = 0.0;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = GuidanceGains{};
  g.approach_angle = 2.0;  // outside (0, pi/2)
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = GuidanceGains{};
  g.position_gain << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(g.validate(), ValidationError);
}

TEST_CASE("approach angle shaper") {
  auto d0 = approach_angle(0.0, 0.7, 0.0, 0.0, M_PI / 4, 1.0);
  CHECK(d0.angle == 0.0);

  auto dsat = approach_angle(1e6, 0.5, 0.0, 0.0, M_PI / 4, 1.0);
  CHECK(dsat.angle == doctest::Approx(-M_PI / 4).epsilon(1e-9));

  // Sign condition y1 * u * sin(delta) <= 0 over a random grid.
  for (int i = 0; i < 200; ++i) {
    const double y1 = uniform(-20, 20);
    const double u = uniform(-1, 1);
    const auto d = approach_angle(y1, u, 0.0, 0.0, M_PI / 4, 1.0);
    CHECK(y1 * u * std::sin(d.angle) <= 1e-15);
  }

  // The rate follows the chain rule (finite-difference check in time).
  const double y1 = 1.3, u = 0.5, y1_rate = 0.2;
  const double h = 1e-7;
  auto at = [&](double dt) {
    return approach_angle(y1 + y1_rate * dt, u, y1_rate, 0.0, M_PI / 4, 1.0);
  };
  const double fd = (at(h).angle - at(-h).angle) / (2.0 * h);
  CHECK(at(0.0).rate == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("shaped yaw rate is finite and correct in the aligned limit") {
  // psi_tilde -> 0: the ratio term approaches cos(delta).
  const double delta_angle = -0.4;
  ApproachAngle delta{delta_angle, 0.0};
  const double r_limit =
      shaped_yaw_rate(delta_angle, delta, 1.0, 0.5, 0.0, 0.5, 1.0, 1.0);
  const double expected = -1.0 * 1.0 * 0.5 * std::cos(delta_angle);
  CHECK(r_limit == doctest::Approx(expected).epsilon(1e-9));

  // Near (not at) the limit the stable form matches the raw ratio.
  const double psi_e = delta_angle + 1e-5;
  const double raw = (std::sin(psi_e) - std::sin(delta_angle)) / (psi_e - delta_angle);
  const double r_near = shaped_yaw_rate(psi_e, delta, 1.0, 0.5, 0.0, 0.5, 1.0, 1.0);
  const double r_manual = -1.0 * (psi_e - delta_angle) - 1.0 * 1.0 * 0.5 * raw;
  CHECK(r_near == doctest::Approx(r_manual).epsilon(1e-9));
}

TEST_CASE("projected law commands on the path are the trivial equilibrium") {
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  ApproachAngleLaw law(line, half_speed(), default_gains());
  VehicleState s;
  s.position = {10.0, 0.0};
  s.heading = 0.0;
  auto out = law.step(s, 0.0, 0.02, std::nullopt);
  const auto& cmd = std::get<YawRateCommand>(out.command.actuation);
  CHECK(cmd.surge == doctest::Approx(0.5));
  CHECK(cmd.yaw_rate == doctest::Approx(0.0));
  CHECK(out.lyapunov == doctest::Approx(0.0));
}

TEST_CASE("projected law matches the hand-evaluated offset case") {
  // y1 = 1 on a straight line, heading exactly at the approach angle:
  // r = ddelta - k2 y1 u cos(delta) with uP = u cos(delta).
  const GuidanceGains g = default_gains();
  const double u = 0.5;
  const double delta = -g.approach_angle * std::tanh(g.approach_sharpness * 1.0 * u);
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  ApproachAngleLaw law(line, half_speed(), g);
  VehicleState s;
  s.position = {10.0, 1.0};
  s.heading = delta;  // psi_e == delta, so psi_tilde == 0
  auto out = law.step(s, 0.0, 0.02, std::nullopt);

  const double y1_rate = u * std::sin(delta);
  const double sech2 = 1.0 - std::tanh(g.approach_sharpness * 1.0 * u) *
                                 std::tanh(g.approach_sharpness * 1.0 * u);
  const double delta_rate = -g.approach_angle * sech2 * g.approach_sharpness * (y1_rate * u);
  const double expected = delta_rate - g.k2 * 1.0 * u * std::cos(delta);
  const auto& cmd = std::get<YawRateCommand>(out.command.actuation);
  CHECK(cmd.yaw_rate == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::isfinite(cmd.yaw_rate));
}

TEST_CASE("coordination speed") {
  CHECK(coordination_speed(0.5, 0.0, 0.0, 0.5) == doctest::Approx(0.5));
  // Reference point backs up when the vehicle lags far behind.
  CHECK(coordination_speed(0.5, 0.0, -2.0, 0.5) == doctest::Approx(-0.5));
}

TEST_CASE("lookahead and saturated heading errors stay inside (-pi/2, pi/2)") {
  CHECK(lookahead_heading_error(0.0, 3.0) == 0.0);
  CHECK(lookahead_heading_error(3.0, 3.0) == doctest::Approx(-M_PI / 4));
  CHECK(lookahead_heading_error(1e12, 3.0) == doctest::Approx(-M_PI / 2).epsilon(1e-9));

  CHECK(saturated_heading_error(0.0, 0.5, 1.0, 0.0) == 0.0);
  CHECK(saturated_heading_error(1.0, 0.5, 1.0, 0.0) == doctest::Approx(-M_PI / 2));

  for (int i = 0; i < 200; ++i) {
    const double y1 = uniform(-50, 50);
    CHECK(std::abs(lookahead_heading_error(y1, 3.0)) < M_PI / 2);
    CHECK(std::abs(saturated_heading_error(y1, 0.5, 1.0, uniform(-1, 1))) <=
          M_PI / 2 + 1e-12);
  }
}

TEST_CASE("los law on the path commands the tangent") {
  Path line = Path::line({0.0, 0.0}, 0.3, 100.0);
  LookaheadLosLaw law(line, half_speed(), default_gains());
  VehicleState s;
  s.position = line.eval(5.0).position;
  s.heading = 0.3;
  auto out = law.step(s, 0.0, 0.02, std::nullopt);
  CHECK(std::get<HeadingCommand>(out.command.actuation).heading == doctest::Approx(0.3));
}

TEST_CASE("virtual-target laws share the coordination law") {
  Path mower = Path::lawnmower(30, 10, 20, 30, 0.0, {0.0, 0.0});
  VehicleState s;
  s.position = {4.0, 3.0};
  s.heading = 0.2;
  VirtualTargetLaw m2(mower, half_speed(), default_gains(), 1.0);
  LosVirtualTargetLaw m4(mower, half_speed(), default_gains(), 1.0);
  auto o2 = m2.step(s, 0.0, 0.02, std::nullopt);
  auto o4 = m4.step(s, 0.0, 0.02, std::nullopt);
  CHECK(*o2.command.parameter_rate == doctest::Approx(*o4.command.parameter_rate));
}

TEST_CASE("los virtual-target law at the on-path equilibrium") {
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  LosVirtualTargetLaw law(line, half_speed(), default_gains(), 10.0);
  VehicleState s;
  s.position = {10.0, 0.0};
  auto out = law.step(s, 0.0, 0.02, std::nullopt);
  CHECK(std::get<HeadingCommand>(out.command.actuation).heading == doctest::Approx(0.0));
  CHECK(*out.command.parameter_rate == doctest::Approx(0.5));
}

TEST_CASE("integral los at the origin does not wind up") {
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  IntegralLosLaw law(line, half_speed(), default_gains());
  VehicleState s;
  s.position = {5.0, 0.0};
  auto out = law.step(s, 0.0, 0.02, std::nullopt);
  CHECK(std::get<HeadingCommand>(out.command.actuation).heading == doctest::Approx(0.0));
  CHECK(law.integrator() == doctest::Approx(0.0));
}

TEST_CASE("integral los integrator rate is bounded by y1 / lookahead") {
  const GuidanceGains g = default_gains();
  Path line = Path::line({0.0, 0.0}, 0.0, 200.0);
  for (int i = 0; i < 30; ++i) {
    IntegralLosLaw law(line, half_speed(), g);
    VehicleState s;
    const double y1 = uniform(-5, 5);
    s.position = {20.0, y1};
    const double dt = 0.02;
    (void)law.step(s, 0.0, dt, std::nullopt);
    const double rate = law.integrator() / dt;
    CHECK(std::abs(rate) <= std::abs(y1) / g.lookahead + 1e-12);
  }
}

TEST_CASE("saturated los clamps and compensates") {
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  const GuidanceGains g = default_gains();

  SaturatedLosLaw sat(line, half_speed(), g, false);
  VehicleState s;
  s.position = {10.0, 1.0};  // k1*y1/u = 2 saturates the argument
  auto out = sat.step(s, 0.0, 0.02, std::nullopt);
  CHECK(std::get<HeadingCommand>(out.command.actuation).heading ==
        doctest::Approx(-M_PI / 2));

  SaturatedLosLaw comp(line, half_speed(), g, true);
  CHECK_THROWS_AS((void)comp.step(s, 0.0, 0.02, std::nullopt), ValidationError);
  VehicleState on;
  on.position = {10.0, 0.0};
  auto c = comp.step(on, 0.0, 0.02, Eigen::Vector2d{0.0, 0.1});
  // Drift pushes +y; the compensated heading leans against it.
  CHECK(std::get<HeadingCommand>(c.command.actuation).heading ==
        doctest::Approx(std::asin(-0.2)));
}

TEST_CASE("body-offset law: tracking equilibrium and hand-checked interaction inverse") {
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  GuidanceGains g = default_gains();

  // On the offset equilibrium with the target moving at v_d: u = Ud, r = 0,
  // parameter acceleration zero.
  BodyOffsetLaw law(line, half_speed(), g, 10.0, 0.5, false);
  VehicleState s;
  s.position = Eigen::Vector2d{10.0, 0.0} + Eigen::Vector2d{1.0, 0.0};
  s.heading = 0.0;
  auto out = law.step(s, 0.0, 0.02, std::nullopt);
  const auto& cmd = std::get<YawRateCommand>(out.command.actuation);
  CHECK(cmd.surge == doctest::Approx(0.5));
  CHECK(cmd.yaw_rate == doctest::Approx(0.0));
  CHECK(*out.command.parameter_accel == doctest::Approx(0.0));

  // eB = (0.3, -0.2) with Kp = I: desired = (0.5, 0) - eB = (0.2, 0.2);
  // the interaction inverse for offset (1, 0) maps it to u = 0.2, r = -0.2.
  GuidanceGains gi = g;
  gi.position_gain = Eigen::Matrix2d::Identity();
  BodyOffsetLaw law2(line, half_speed(), gi, 10.0, 0.5, false);
  VehicleState s2;
  s2.position = Eigen::Vector2d{10.0, 0.0} + Eigen::Vector2d{1.3, -0.2};
  s2.heading = 0.0;
  auto out2 = law2.step(s2, 0.0, 0.02, std::nullopt);
  const auto& cmd2 = std::get<YawRateCommand>(out2.command.actuation);
  CHECK(cmd2.surge == doctest::Approx(0.2));
  CHECK(cmd2.yaw_rate == doctest::Approx(-0.2));
}

TEST_CASE("body-offset law rejects a singular offset") {
  GuidanceGains g = default_gains();
  g.body_offset = {0.0, 1.0};
  Path line = Path::line({0.0, 0.0}, 0.0, 100.0);
  CHECK_THROWS_AS(BodyOffsetLaw(line, half_speed(), g, 0.0, 0.0, false), SingularOffset);
}

TEST_CASE("free-heading law on an eastward line with zero heading") {
  // Path tangent along +y, body frame at heading 0: the sway channel
  // carries the full path speed.
  Path line = Path::line({0.0, 0.0}, M_PI / 2, 100.0);
  FreeHeadingLaw law(line, half_speed(), default_gains(), 10.0, 0.5,
                     [](double, double) { return 0.0; });
  VehicleState s;
  s.position = line.eval(10.0).position;
  s.heading = 0.0;
  auto out = law.step(s, 0.0, 0.02, std::nullopt);
  const auto& cmd = std::get<VelocityCommand>(out.command.actuation);
  CHECK(cmd.heading == doctest::Approx(0.0));
  CHECK(cmd.surge == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cmd.sway == doctest::Approx(0.5));
}
