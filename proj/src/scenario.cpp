#include "pf/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pf/exceptions.hpp"
#include "pf/observer.hpp"

namespace pf {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      fail(where + "." + item.key(), "unknown key");
    }
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

double number_or(const json& j, const std::string& where, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  return get_number(j.at(key), where + "." + key);
}

double require_number(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return get_number(j.at(key), where + "." + key);
}

Eigen::Vector2d get_vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [x, y]");
  return {get_number(j.at(0), where + "[0]"), get_number(j.at(1), where + "[1]")};
}

Eigen::VectorXd get_vecn(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = get_number(j.at(i), where + "[" + std::to_string(i) + "]");
  }
  return v;
}

Path parse_path(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind")) fail(where, "expected an object with 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "line") {
    check_keys(j, where, {"kind", "origin", "heading", "length"});
    return Path::line(get_vec2(j.at("origin"), where + ".origin"),
                      require_number(j, where, "heading"), require_number(j, where, "length"));
  }
  if (kind == "circle") {
    check_keys(j, where, {"kind", "center", "radius"});
    return Path::circle(get_vec2(j.at("center"), where + ".center"),
                        require_number(j, where, "radius"));
  }
  if (kind == "arc") {
    check_keys(j, where, {"kind", "start", "heading", "curvature", "length"});
    return Path::arc(get_vec2(j.at("start"), where + ".start"),
                     require_number(j, where, "heading"),
                     require_number(j, where, "curvature"),
                     require_number(j, where, "length"));
  }
  if (kind == "lemniscate") {
    check_keys(j, where, {"kind", "center", "half_width"});
    return Path::lemniscate(get_vec2(j.at("center"), where + ".center"),
                            require_number(j, where, "half_width"));
  }
  if (kind == "sinusoid") {
    check_keys(j, where, {"kind", "origin", "heading", "amplitude", "wavelength", "length"});
    return Path::sinusoid(get_vec2(j.at("origin"), where + ".origin"),
                          require_number(j, where, "heading"),
                          require_number(j, where, "amplitude"),
                          require_number(j, where, "wavelength"),
                          require_number(j, where, "length"));
  }
  if (kind == "lawnmower") {
    check_keys(j, where, {"kind", "origin", "heading", "leg1", "radius", "leg2", "leg3"});
    Eigen::Vector2d origin{0.0, 0.0};
    if (j.contains("origin")) origin = get_vec2(j.at("origin"), where + ".origin");
    return Path::lawnmower(require_number(j, where, "leg1"), require_number(j, where, "radius"),
                           require_number(j, where, "leg2"), require_number(j, where, "leg3"),
                           number_or(j, where, "heading", 0.0), origin);
  }
  if (kind == "composite") {
    check_keys(j, where, {"kind", "segments"});
    if (!j.contains("segments") || !j.at("segments").is_array()) {
      fail(where + ".segments", "expected an array of path objects");
    }
    std::vector<Path> segments;
    std::size_t i = 0;
    for (const auto& seg : j.at("segments")) {
      segments.push_back(parse_path(seg, where + ".segments[" + std::to_string(i++) + "]"));
    }
    return Path::composite(std::move(segments));
  }
  fail(where + ".kind", "unknown path kind '" + kind + "'");
}

GuidanceGains parse_gains(const json& j, const std::string& where) {
  check_keys(j, where,
             {"k1", "k2", "k3", "approach_angle", "approach_sharpness", "lookahead",
              "integral_rate", "position_gain", "parameter_gain", "body_offset"});
  GuidanceGains g;
  g.k1 = number_or(j, where, "k1", g.k1);
  g.k2 = number_or(j, where, "k2", g.k2);
  g.k3 = number_or(j, where, "k3", g.k3);
  g.approach_angle = number_or(j, where, "approach_angle", g.approach_angle);
  g.approach_sharpness = number_or(j, where, "approach_sharpness", g.approach_sharpness);
  g.lookahead = number_or(j, where, "lookahead", g.lookahead);
  g.integral_rate = number_or(j, where, "integral_rate", g.integral_rate);
  g.parameter_gain = number_or(j, where, "parameter_gain", g.parameter_gain);
  if (j.contains("position_gain")) {
    Eigen::Vector2d diag = get_vec2(j.at("position_gain"), where + ".position_gain");
    g.position_gain = diag.asDiagonal();
  }
  if (j.contains("body_offset")) {
    g.body_offset = get_vec2(j.at("body_offset"), where + ".body_offset");
  }
  return g;
}

NmpcConfig parse_nmpc(const json& j, const std::string& where) {
  check_keys(j, where,
             {"horizon", "sample_time", "state_weights", "input_weights", "speed_weight",
              "parameter_rate_bounds", "yaw_rate_max", "surge_bounds", "max_iterations",
              "initial_step", "tolerance", "fd_step", "max_substep"});
  NmpcConfig c;
  c.horizon = number_or(j, where, "horizon", c.horizon);
  c.sample_time = number_or(j, where, "sample_time", c.sample_time);
  if (j.contains("state_weights")) {
    c.state_weights = get_vecn(j.at("state_weights"), where + ".state_weights");
  }
  if (j.contains("input_weights")) {
    c.input_weights = get_vecn(j.at("input_weights"), where + ".input_weights");
  }
  c.speed_weight = number_or(j, where, "speed_weight", c.speed_weight);
  if (j.contains("parameter_rate_bounds")) {
    Eigen::Vector2d b = get_vec2(j.at("parameter_rate_bounds"), where + ".parameter_rate_bounds");
    c.parameter_rate_min = b.x();
    c.parameter_rate_max = b.y();
  }
  c.yaw_rate_max = number_or(j, where, "yaw_rate_max", c.yaw_rate_max);
  if (j.contains("surge_bounds")) {
    Eigen::Vector2d b = get_vec2(j.at("surge_bounds"), where + ".surge_bounds");
    c.surge_min = b.x();
    c.surge_max = b.y();
  }
  c.max_iterations = static_cast<int>(number_or(j, where, "max_iterations", c.max_iterations));
  c.initial_step = number_or(j, where, "initial_step", c.initial_step);
  c.tolerance = number_or(j, where, "tolerance", c.tolerance);
  c.fd_step = number_or(j, where, "fd_step", c.fd_step);
  c.max_substep = number_or(j, where, "max_substep", c.max_substep);
  return c;
}

}  // namespace

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "method1",      "method2", "method3",      "method3_sat", "method4",
      "method5",      "method6", "method7",      "ilos",        "method3_comp",
      "method6_comp", "fully_actuated"};
  return names;
}

namespace {

bool is_nmpc_method(const std::string& m) { return m == "method5" || m == "method7"; }

bool is_compensated_method(const std::string& m) {
  return m == "method3_comp" || m == "method6_comp";
}

Eigen::VectorXd default_weights(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

void Scenario::validate() const {
  const auto& names = method_names();
  if (std::find(names.begin(), names.end(), method) == names.end()) {
    throw ValidationError("unknown method '" + method + "'");
  }
  if (!(dt > 0.0 && dt <= 0.5)) throw ValidationError("dt must be in (0, 0.5]");
  if (!(duration >= dt)) throw ValidationError("duration must be at least dt");
  if (!(desired_speed > 0.0)) throw ValidationError("desired speed must be positive");
  if (!(convergence_threshold > 0.0)) {
    throw ValidationError("convergence threshold must be positive");
  }
  gains.validate();

  if (method == "fully_actuated") {
    if (initial.current.norm() > 0.0) {
      throw ValidationError(
          "fully_actuated runs on the disturbance-free plant; remove the disturbance");
    }
    if (heading_reference && heading_tangent_offset) {
      throw ValidationError("give either heading_reference.constant or .tangent_offset");
    }
  } else if (heading_reference || heading_tangent_offset) {
    throw ValidationError("heading_reference applies to fully_actuated only");
  }

  if (is_compensated_method(method) && current_source == CurrentSource::none) {
    throw ValidationError(method + " needs current_source = observer or oracle");
  }
  if (current_source == CurrentSource::observer && !observer.enabled) {
    throw ValidationError("current_source = observer requires an observer block");
  }
  if (observer.enabled) {
    CurrentObserver::place_poles(observer.pole1, observer.pole2);  // validates sign
  }

  if (is_nmpc_method(method)) {
    if (!nmpc) throw ValidationError(method + " requires an nmpc block");
    if (nmpc->sample_time < dt - 1e-12) {
      throw ValidationError("nmpc sample_time must be at least the scenario dt");
    }
    const SpeedProfile profile = SpeedProfile::constant(desired_speed);
    if (method == "method5") {
      validate_nmpc_config(*nmpc, 3, 2, path, profile);
    } else {
      validate_nmpc_config(*nmpc, 2, 2, path, profile);
    }
  } else if (nmpc) {
    throw ValidationError("nmpc block is only valid for method5 and method7");
  }
}

std::unique_ptr<GuidanceLaw> Scenario::make_law() const {
  const SpeedProfile profile = SpeedProfile::constant(desired_speed);
  if (method == "method1") {
    return std::make_unique<ApproachAngleLaw>(path, profile, gains);
  }
  if (method == "method2") {
    return std::make_unique<VirtualTargetLaw>(path, profile, gains, initial_gamma);
  }
  if (method == "method3") {
    return std::make_unique<LookaheadLosLaw>(path, profile, gains);
  }
  if (method == "method3_sat" || method == "method3_comp") {
    return std::make_unique<SaturatedLosLaw>(path, profile, gains,
                                             method == "method3_comp");
  }
  if (method == "method4") {
    return std::make_unique<LosVirtualTargetLaw>(path, profile, gains, initial_gamma);
  }
  if (method == "method5") {
    return std::make_unique<PathFrameNmpcLaw>(path, profile, *nmpc, initial_gamma);
  }
  if (method == "method6" || method == "method6_comp") {
    return std::make_unique<BodyOffsetLaw>(path, profile, gains, initial_gamma,
                                           initial_gamma_rate, method == "method6_comp");
  }
  if (method == "method7") {
    return std::make_unique<BodyFrameNmpcLaw>(path, profile, *nmpc, gains.body_offset,
                                              initial_gamma);
  }
  if (method == "ilos") {
    return std::make_unique<IntegralLosLaw>(path, profile, gains);
  }
  if (method == "fully_actuated") {
    if (heading_reference) {
      const double ref = *heading_reference;
      return std::make_unique<FreeHeadingLaw>(path, profile, gains, initial_gamma,
                                              initial_gamma_rate,
                                              [ref](double, double) { return ref; });
    }
    const double offset = heading_tangent_offset.value_or(0.0);
    return std::make_unique<FreeHeadingLaw>(FreeHeadingLaw::tangent_offset(
        path, profile, gains, initial_gamma, initial_gamma_rate, offset));
  }
  throw ValidationError("unknown method '" + method + "'");
}

Scenario load_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  const std::string root = "$";
  check_keys(doc, root,
             {"name", "path", "method", "gains", "nmpc", "speed", "initial", "disturbance",
              "observer", "current_source", "heading_reference", "inner_loop", "dt",
              "duration", "convergence_threshold", "seed"});

  Scenario sc;
  if (doc.contains("name")) {
    if (!doc.at("name").is_string()) fail("$.name", "expected a string");
    sc.name = doc.at("name").get<std::string>();
  }
  if (!doc.contains("path")) fail(root, "missing key 'path'");
  sc.path = parse_path(doc.at("path"), "$.path");
  if (!doc.contains("method")) fail(root, "missing key 'method'");
  if (!doc.at("method").is_string()) fail("$.method", "expected a string");
  sc.method = doc.at("method").get<std::string>();

  if (doc.contains("gains")) sc.gains = parse_gains(doc.at("gains"), "$.gains");
  if (doc.contains("nmpc")) {
    NmpcConfig cfg = parse_nmpc(doc.at("nmpc"), "$.nmpc");
    if (cfg.state_weights.size() == 0) {
      cfg.state_weights = default_weights(sc.method == "method7" ? std::initializer_list<double>{1.0, 1.0}
                                                                 : std::initializer_list<double>{1.0, 1.0, 1.0});
    }
    if (cfg.input_weights.size() == 0) {
      cfg.input_weights = default_weights({0.1, 0.1});
    }
    sc.nmpc = cfg;
  }

  if (doc.contains("speed")) {
    check_keys(doc.at("speed"), "$.speed", {"desired"});
    sc.desired_speed = require_number(doc.at("speed"), "$.speed", "desired");
  }
  if (doc.contains("initial")) {
    const json& init = doc.at("initial");
    check_keys(init, "$.initial", {"position", "heading", "gamma", "gamma_rate"});
    if (init.contains("position")) {
      sc.initial.position = get_vec2(init.at("position"), "$.initial.position");
    }
    sc.initial.heading = number_or(init, "$.initial", "heading", 0.0);
    sc.initial_gamma = number_or(init, "$.initial", "gamma", 0.0);
    sc.initial_gamma_rate = number_or(init, "$.initial", "gamma_rate", 0.0);
  }
  if (doc.contains("disturbance")) {
    sc.initial.current = get_vec2(doc.at("disturbance"), "$.disturbance");
  }
  if (doc.contains("observer")) {
    const json& obs = doc.at("observer");
    check_keys(obs, "$.observer", {"poles"});
    sc.observer.enabled = true;
    if (obs.contains("poles")) {
      Eigen::Vector2d poles = get_vec2(obs.at("poles"), "$.observer.poles");
      sc.observer.pole1 = poles.x();
      sc.observer.pole2 = poles.y();
    }
  }
  if (doc.contains("current_source")) {
    const std::string src = doc.at("current_source").get<std::string>();
    if (src == "none") {
      sc.current_source = CurrentSource::none;
    } else if (src == "observer") {
      sc.current_source = CurrentSource::observer;
    } else if (src == "oracle") {
      sc.current_source = CurrentSource::oracle;
    } else {
      fail("$.current_source", "expected none | observer | oracle");
    }
  }
  if (doc.contains("heading_reference")) {
    const json& href = doc.at("heading_reference");
    check_keys(href, "$.heading_reference", {"type", "value", "offset"});
    if (!href.contains("type")) fail("$.heading_reference", "missing key 'type'");
    const std::string type = href.at("type").get<std::string>();
    if (type == "constant") {
      sc.heading_reference = require_number(href, "$.heading_reference", "value");
    } else if (type == "tangent_offset") {
      sc.heading_tangent_offset = require_number(href, "$.heading_reference", "offset");
    } else {
      fail("$.heading_reference.type", "expected constant | tangent_offset");
    }
  }
  if (doc.contains("inner_loop")) {
    const json& il = doc.at("inner_loop");
    check_keys(il, "$.inner_loop", {"mode", "heading_gain", "max_yaw_rate", "surge_lag"});
    if (il.contains("mode")) {
      const std::string mode = il.at("mode").get<std::string>();
      if (mode == "ideal") {
        sc.inner_loop.ideal = true;
      } else if (mode == "proportional") {
        sc.inner_loop.ideal = false;
      } else {
        fail("$.inner_loop.mode", "expected ideal | proportional");
      }
    }
    sc.inner_loop.heading_gain =
        number_or(il, "$.inner_loop", "heading_gain", sc.inner_loop.heading_gain);
    sc.inner_loop.max_yaw_rate =
        number_or(il, "$.inner_loop", "max_yaw_rate", sc.inner_loop.max_yaw_rate);
    sc.inner_loop.surge_lag =
        number_or(il, "$.inner_loop", "surge_lag", sc.inner_loop.surge_lag);
  }
  sc.dt = number_or(doc, root, "dt", sc.dt);
  sc.duration = number_or(doc, root, "duration", sc.duration);
  sc.convergence_threshold =
      number_or(doc, root, "convergence_threshold", sc.convergence_threshold);
  sc.seed = static_cast<long>(number_or(doc, root, "seed", 0.0));

  sc.validate();
  return sc;
}

Scenario load_scenario_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ParseError("cannot open scenario file: " + filename);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

}  // namespace pf
