#include "pf/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pf/exceptions.hpp"

namespace pf {
namespace {

const char* const kColumns[] = {
    "t",           "x",          "y",           "heading",       "gamma",
    "gamma_rate",  "s1",         "y1",          "psi_e",         "y1_path",
    "surge_cmd",   "r_cmd",      "heading_cmd", "sway_cmd",      "surge_applied",
    "r_applied",   "sway_applied", "vhat_x",    "vhat_y",        "lyapunov"};

constexpr int kColumnCount = 20;

void fill(double* slots, const TraceRow& r) {
  double values[kColumnCount] = {
      r.t,           r.x,           r.y,           r.heading,        r.gamma,
      r.gamma_rate,  r.along_track, r.cross_track, r.heading_error,  r.cross_track_path,
      r.surge_cmd,   r.yaw_rate_cmd, r.heading_cmd, r.sway_cmd,      r.surge_applied,
      r.yaw_rate_applied, r.sway_applied, r.current_est_x, r.current_est_y, r.lyapunov};
  std::copy(values, values + kColumnCount, slots);
}

TraceRow unfill(const double* slots) {
  TraceRow r;
  r.t = slots[0];
  r.x = slots[1];
  r.y = slots[2];
  r.heading = slots[3];
  r.gamma = slots[4];
  r.gamma_rate = slots[5];
  r.along_track = slots[6];
  r.cross_track = slots[7];
  r.heading_error = slots[8];
  r.cross_track_path = slots[9];
  r.surge_cmd = slots[10];
  r.yaw_rate_cmd = slots[11];
  r.heading_cmd = slots[12];
  r.sway_cmd = slots[13];
  r.surge_applied = slots[14];
  r.yaw_rate_applied = slots[15];
  r.sway_applied = slots[16];
  r.current_est_x = slots[17];
  r.current_est_y = slots[18];
  r.lyapunov = slots[19];
  return r;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& TraceTable::columns() {
  static const std::vector<std::string> cols(kColumns, kColumns + kColumnCount);
  return cols;
}

void write_csv(const TraceTable& trace, std::ostream& out) {
  const auto& cols = TraceTable::columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << cols[i];
  }
  out << "\n";
  double slots[kColumnCount];
  for (const TraceRow& row : trace.rows) {
    fill(slots, row);
    for (int i = 0; i < kColumnCount; ++i) {
      out << (i ? "," : "") << format_value(slots[i]);
    }
    out << "\n";
  }
}

std::string to_csv(const TraceTable& trace) {
  std::ostringstream ss;
  write_csv(trace, ss);
  return ss.str();
}

TraceTable read_csv(std::istream& in) {
  TraceTable trace;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: missing header");
  {
    std::ostringstream expected;
    const auto& cols = TraceTable::columns();
    for (std::size_t i = 0; i < cols.size(); ++i) expected << (i ? "," : "") << cols[i];
    if (line != expected.str()) throw ParseError("csv: unexpected header: " + line);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double slots[kColumnCount];
    const char* p = line.c_str();
    for (int i = 0; i < kColumnCount; ++i) {
      char* end = nullptr;
      slots[i] = std::strtod(p, &end);
      if (end == p) throw ParseError("csv: bad number in row: " + line);
      p = end;
      if (*p == ',') ++p;
    }
    trace.rows.push_back(unfill(slots));
  }
  return trace;
}

Metrics compute_metrics(const TraceTable& trace, double threshold) {
  Metrics m;
  m.threshold = threshold;
  const auto& rows = trace.rows;
  if (rows.empty()) return m;

  // Last sample that still violates the threshold; everything after it is
  // the converged tail.
  std::ptrdiff_t last_violation = -1;
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(rows.size()) - 1; i >= 0; --i) {
    if (std::abs(rows[i].cross_track_path) >= threshold) {
      last_violation = i;
      break;
    }
  }
  std::size_t first_converged = static_cast<std::size_t>(last_violation + 1);
  if (first_converged < rows.size()) {
    m.convergence_time = rows[first_converged].t;
    double acc = 0.0;
    for (std::size_t i = first_converged; i < rows.size(); ++i) {
      acc += rows[i].cross_track_path * rows[i].cross_track_path;
    }
    m.rms_cross_track = std::sqrt(acc / static_cast<double>(rows.size() - first_converged));
  }

  const double t_end = rows.back().t;
  const double span = t_end - rows.front().t;
  const double window = std::max(20.0, 0.1 * span);
  double s1_acc = 0.0;
  std::size_t s1_count = 0;
  for (const auto& r : rows) {
    if (r.t >= t_end - window) {
      s1_acc += r.along_track;
      ++s1_count;
    }
  }
  if (s1_count > 0) m.steady_state_along_track = s1_acc / static_cast<double>(s1_count);

  for (const auto& r : rows) {
    const double rate = std::isfinite(r.yaw_rate_cmd) ? r.yaw_rate_cmd : r.yaw_rate_applied;
    if (std::isfinite(rate)) m.max_yaw_rate = std::max(m.max_yaw_rate, std::abs(rate));
  }

  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double v0 = rows[i].lyapunov;
    const double v1 = rows[i + 1].lyapunov;
    if (!std::isfinite(v0) || !std::isfinite(v1)) continue;
    if (v1 > v0 + 1e-4 * (1.0 + v0)) ++m.lyapunov_violations;
  }

  m.final_cross_track = rows.back().cross_track;
  m.final_cross_track_path = rows.back().cross_track_path;
  return m;
}

namespace {

std::string format_opt(const std::optional<double>& v) {
  if (!v) return "never";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

}  // namespace

std::string summarize(const std::vector<std::pair<std::string, Metrics>>& entries) {
  auto sorted = entries;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    const auto& ca = a.second.convergence_time;
    const auto& cb = b.second.convergence_time;
    if (ca && cb) return *ca < *cb;
    return static_cast<bool>(ca) && !cb;
  });

  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %12s %12s %12s %10s %8s\n", "scenario",
                "conv_time[s]", "rms_y1[m]", "ss_s1[m]", "max|r|", "V_viol");
  out << line;
  for (const auto& [name, m] : sorted) {
    std::snprintf(line, sizeof(line), "%-28s %12s %12.4f %12.4f %10.4f %8d\n", name.c_str(),
                  format_opt(m.convergence_time).c_str(), m.rms_cross_track,
                  m.steady_state_along_track, m.max_yaw_rate, m.lyapunov_violations);
    out << line;
  }
  return out.str();
}

std::string summary_json(const std::vector<std::pair<std::string, Metrics>>& entries) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& [name, m] : entries) {
    nlohmann::json e;
    e["scenario"] = name;
    if (m.convergence_time) {
      e["convergence_time"] = *m.convergence_time;
    } else {
      e["convergence_time"] = nullptr;
    }
    e["threshold"] = m.threshold;
    e["rms_cross_track"] = m.rms_cross_track;
    e["steady_state_along_track"] = m.steady_state_along_track;
    e["max_yaw_rate"] = m.max_yaw_rate;
    e["lyapunov_violations"] = m.lyapunov_violations;
    e["final_cross_track"] = m.final_cross_track;
    e["final_cross_track_path"] = m.final_cross_track_path;
    doc.push_back(e);
  }
  return doc.dump(2);
}

}  // namespace pf
