#include <cmath>
#include <limits>
#include <optional>

#include "pf/exceptions.hpp"
#include "pf/frames.hpp"
#include "pf/observer.hpp"
#include "pf/scenario.hpp"

namespace pf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Applied {
  double surge = 0.0;
  double yaw_rate = 0.0;
  double sway = 0.0;
};

struct ServoState {
  bool lag_primed = false;
  double lagged_surge = 0.0;
};

// Turns a guidance command into plant inputs, emulating the inner loops.
// Ideal mode snaps the heading to the reference before the plant step;
// proportional mode issues a saturated yaw rate toward it.
Applied resolve_actuation(const GuidanceCommand& cmd, VehicleState& state,
                          const InnerLoopConfig& loop, ServoState& servo, double dt,
                          TraceRow& row) {
  Applied applied;
  row.yaw_rate_cmd = kNaN;
  row.heading_cmd = kNaN;
  row.sway_cmd = kNaN;

  double surge_cmd = 0.0;
  std::optional<double> heading_ref;
  if (const auto* ur = std::get_if<YawRateCommand>(&cmd.actuation)) {
    surge_cmd = ur->surge;
    applied.yaw_rate = ur->yaw_rate;
    row.yaw_rate_cmd = ur->yaw_rate;
  } else if (const auto* up = std::get_if<HeadingCommand>(&cmd.actuation)) {
    surge_cmd = up->surge;
    heading_ref = up->heading;
    row.heading_cmd = up->heading;
  } else {
    const auto& full = std::get<VelocityCommand>(cmd.actuation);
    surge_cmd = full.surge;
    applied.sway = full.sway;
    heading_ref = full.heading;
    row.heading_cmd = full.heading;
    row.sway_cmd = full.sway;
  }
  row.surge_cmd = surge_cmd;

  if (heading_ref) {
    if (loop.ideal) {
      state.heading = *heading_ref;
      applied.yaw_rate = 0.0;
    } else {
      const double err = wrap_pi(*heading_ref - state.heading);
      applied.yaw_rate =
          std::clamp(loop.heading_gain * err, -loop.max_yaw_rate, loop.max_yaw_rate);
    }
  }

  if (loop.surge_lag > 0.0) {
    if (!servo.lag_primed) {
      servo.lagged_surge = 0.0;
      servo.lag_primed = true;
    }
    servo.lagged_surge += (surge_cmd - servo.lagged_surge) * (1.0 - std::exp(-dt / loop.surge_lag));
    applied.surge = servo.lagged_surge;
  } else {
    applied.surge = surge_cmd;
  }
  return applied;
}

}  // namespace

RunResult run(const Scenario& sc) {
  sc.validate();
  RunResult result;
  TraceTable& trace = result.trace;
  trace.method = sc.method;
  trace.scenario_name = sc.name;

  if (sc.method == "ilos" && !sc.path.is_straight()) {
    trace.notes.push_back(
        "ilos on a curved path: the straight-line convergence guarantee does not apply");
  }

  std::optional<CurrentObserver> observer;
  if (sc.observer.enabled) {
    // Position rows start at the measured fix; the drift estimate at zero.
    Eigen::Vector4d x0;
    x0 << sc.initial.position, Eigen::Vector2d::Zero();
    observer.emplace(CurrentObserver::place_poles(sc.observer.pole1, sc.observer.pole2), x0);
  }

  const bool fully_actuated_plant = sc.method == "fully_actuated";
  const double domain_end = sc.path.domain().upper;
  const long steps = std::lround(sc.duration / sc.dt);

  auto law = sc.make_law();
  VehicleState state = sc.initial;
  ServoState servo;
  std::optional<double> path_proj_seed;

  try {
    for (long k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * sc.dt;

      std::optional<Eigen::Vector2d> estimate;
      if (sc.current_source == CurrentSource::observer) {
        estimate = observer->current_estimate();
      } else if (sc.current_source == CurrentSource::oracle) {
        estimate = state.current;
      }

      GuidanceTelemetry telemetry = law->step(state, t, sc.dt, estimate);
      if (telemetry.gamma > domain_end + 1e-9) break;  // ran off the path end

      TraceRow row;
      row.t = t;
      row.x = state.position.x();
      row.y = state.position.y();
      row.heading = state.heading;
      row.gamma = telemetry.gamma;
      row.gamma_rate = telemetry.gamma_rate;
      row.along_track = telemetry.error.along_track;
      row.cross_track = telemetry.error.cross_track;
      row.heading_error = telemetry.error.heading_error;
      row.lyapunov = telemetry.lyapunov;
      if (estimate) {
        row.current_est_x = estimate->x();
        row.current_est_y = estimate->y();
      } else {
        row.current_est_x = kNaN;
        row.current_est_y = kNaN;
      }

      // Signed distance to the curve itself (independent of how the active
      // method places its reference point).
      {
        const double gstar = path_proj_seed
                                 ? sc.path.project(state.position, *path_proj_seed)
                                 : sc.path.project(state.position);
        path_proj_seed = gstar;
        const PathPoint nearest = sc.path.eval(gstar);
        row.cross_track_path =
            Rot2(nearest.tangent_angle).to_frame(state.position - nearest.position).y();
      }

      const Applied applied =
          resolve_actuation(telemetry.command, state, sc.inner_loop, servo, sc.dt, row);
      row.surge_applied = applied.surge;
      row.yaw_rate_applied = applied.yaw_rate;
      row.sway_applied = fully_actuated_plant ? applied.sway : kNaN;
      trace.rows.push_back(row);

      if (observer) {
        observer->step(applied.surge, state.heading, state.position, sc.dt);
      }

      const ActuationInput input{applied.surge, applied.yaw_rate, applied.sway};
      if (fully_actuated_plant) {
        state = step_fully_actuated(state, input, sc.dt);
      } else if (state.current.norm() > 0.0) {
        state = step_with_current(state, input, sc.dt);
      } else {
        state = step_underactuated(state, input, sc.dt);
      }
    }
  } catch (const Error& e) {
    trace.aborted = true;
    trace.abort_reason = e.what();
  }

  result.metrics = compute_metrics(trace, sc.convergence_threshold);
  return result;
}

}  // namespace pf
