#pragma once

#include <memory>
#include <optional>
#include <string>

#include "pf/guidance.hpp"
#include "pf/nmpc.hpp"
#include "pf/path.hpp"
#include "pf/trace.hpp"
#include "pf/vehicle.hpp"

namespace pf {

/// Emulation of the vehicle's inner loops.  `ideal` applies heading
/// references exactly (and yaw-rate/velocity commands directly); the
/// proportional mode turns a heading reference into a saturated yaw rate.
/// A positive surge_lag adds a first-order lag on surge tracking.
struct InnerLoopConfig {
  bool ideal = false;
  double heading_gain = 2.0;   // 1/s
  double max_yaw_rate = 0.6;   // rad/s, proportional mode only
  double surge_lag = 0.0;      // s, 0 = ideal surge tracking
};

struct ObserverConfig {
  bool enabled = false;
  double pole1 = -0.5;
  double pole2 = -0.5;
};

enum class CurrentSource { none, observer, oracle };

/// A fully-specified closed-loop experiment.  Runs are deterministic; the
/// seed field is reserved and unused.
struct Scenario {
  std::string name;
  Path path = Path::line({0.0, 0.0}, 0.0, 1.0);
  std::string method = "method3";
  GuidanceGains gains;
  std::optional<NmpcConfig> nmpc;
  double desired_speed = 0.5;

  VehicleState initial;           // initial.current is the true disturbance
  double initial_gamma = 0.0;
  double initial_gamma_rate = 0.0;

  // Fully-actuated heading reference: constant or tangent + offset.
  std::optional<double> heading_reference;
  std::optional<double> heading_tangent_offset;

  ObserverConfig observer;
  CurrentSource current_source = CurrentSource::none;
  InnerLoopConfig inner_loop;

  double dt = 0.02;
  double duration = 300.0;
  double convergence_threshold = 0.1;
  long seed = 0;

  void validate() const;  // throws ValidationError
  std::unique_ptr<GuidanceLaw> make_law() const;
};

/// All method selector strings accepted by a scenario document.
const std::vector<std::string>& method_names();

/// Parses and validates a JSON scenario document.  Unknown keys are
/// rejected; error messages carry the path to the offending field.
Scenario load_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::string& filename);

struct RunResult {
  TraceTable trace;
  Metrics metrics;
};

/// Executes the closed loop: guidance law, inner-loop emulation, plant
/// step, observer update, trace row per step.  The mission ends at the
/// configured duration or when the reference parameter leaves the path
/// domain.  Law or plant errors abort the run with the partial trace
/// flagged instead of propagating.
RunResult run(const Scenario& scenario);

}  // namespace pf
