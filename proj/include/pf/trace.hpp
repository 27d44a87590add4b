#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pf {

/// One sample of the closed loop.  Columns that do not apply to the active
/// method hold NaN (e.g. yaw_rate_cmd for heading-commanded laws).
struct TraceRow {
  double t = 0.0;
  double x = 0.0, y = 0.0, heading = 0.0;
  double gamma = 0.0, gamma_rate = 0.0;
  double along_track = 0.0, cross_track = 0.0, heading_error = 0.0;
  double cross_track_path = 0.0;  // signed distance to the curve itself
  double surge_cmd = 0.0, yaw_rate_cmd = 0.0, heading_cmd = 0.0, sway_cmd = 0.0;
  double surge_applied = 0.0, yaw_rate_applied = 0.0, sway_applied = 0.0;
  double current_est_x = 0.0, current_est_y = 0.0;
  double lyapunov = 0.0;
};

struct TraceTable {
  std::string method;
  std::string scenario_name;
  std::vector<std::string> notes;  // e.g. "ilos on a curved path"
  std::vector<TraceRow> rows;
  bool aborted = false;
  std::string abort_reason;

  static const std::vector<std::string>& columns();
};

/// Mission statistics derived from a trace alone.
struct Metrics {
  std::optional<double> convergence_time;    // first t after which |cross_track_path|
                                             // stays below the threshold
  double threshold = 0.1;
  double rms_cross_track = 0.0;              // over the converged tail
  double steady_state_along_track = 0.0;     // mean s1 over the trailing window
  double max_yaw_rate = 0.0;                 // |r| commanded (applied when absent)
  int lyapunov_violations = 0;               // V(t+dt) > V(t) + 1e-4 (1 + V(t))
  double final_cross_track = 0.0;
  double final_cross_track_path = 0.0;
};

Metrics compute_metrics(const TraceTable& trace, double threshold);

/// CSV with a fixed column order and 9 significant digits per value.
void write_csv(const TraceTable& trace, std::ostream& out);
std::string to_csv(const TraceTable& trace);

/// Parses a document produced by write_csv (used for round-trip checks and
/// offline reprocessing).
TraceTable read_csv(std::istream& in);

/// Aligned text comparison across methods, ordered by convergence time
/// (non-converged entries last).
std::string summarize(const std::vector<std::pair<std::string, Metrics>>& entries);

/// Same content as a machine-readable JSON text.
std::string summary_json(const std::vector<std::pair<std::string, Metrics>>& entries);

}  // namespace pf
