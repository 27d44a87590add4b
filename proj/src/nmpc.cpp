#include "pf/nmpc.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pf/exceptions.hpp"

namespace pf {

int NmpcConfig::steps() const {
  const double ratio = horizon / sample_time;
  const int n = static_cast<int>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - n) > 1e-6) {
    throw ValidationError("nmpc: horizon must be an integer multiple of sample_time");
  }
  return n;
}

void validate_nmpc_config(const NmpcConfig& config, int state_weights, int input_weights,
                          const Path& path, const SpeedProfile& profile) {
  if (!(config.sample_time > 0.0) || !(config.horizon > config.sample_time)) {
    throw ValidationError("nmpc: need horizon > sample_time > 0");
  }
  config.steps();
  if (config.state_weights.size() != state_weights ||
      config.input_weights.size() != input_weights) {
    std::ostringstream msg;
    msg << "nmpc: expected " << state_weights << " state weights and " << input_weights
        << " input weights";
    throw ValidationError(msg.str());
  }
  if (config.state_weights.minCoeff() <= 0.0 || config.input_weights.minCoeff() <= 0.0 ||
      !(config.speed_weight > 0.0)) {
    throw ValidationError("nmpc: weights must be positive");
  }
  if (!(config.parameter_rate_min <= 0.0)) {
    throw ValidationError("nmpc: parameter_rate_min must be <= 0");
  }
  const double peak_rate = parameter_rate_max(profile, path, 0.0);
  if (!(config.parameter_rate_max > peak_rate)) {
    std::ostringstream msg;
    msg << "nmpc: parameter_rate_max must exceed the peak desired rate " << peak_rate;
    throw ValidationError(msg.str());
  }
  if (!(config.yaw_rate_max > 0.0)) throw ValidationError("nmpc: yaw_rate_max must be positive");
  if (!(config.surge_min < config.surge_max)) {
    throw ValidationError("nmpc: need surge_min < surge_max");
  }
  if (config.max_iterations < 1 || !(config.initial_step > 0.0) ||
      !(config.tolerance > 0.0) || !(config.fd_step > 0.0) || !(config.max_substep > 0.0)) {
    throw ValidationError("nmpc: bad solver settings");
  }
}

// --- path-frame formulation -------------------------------------------------

PathFrameFocp::PathFrameFocp(Path path, SpeedProfile profile, const NmpcConfig& cfg)
    : path_(std::move(path)), profile_(std::move(profile)) {
  if (cfg.state_weights.size() != 3 || cfg.input_weights.size() != 2) {
    throw ValidationError("path-frame focp: need 3 state weights and 2 input weights");
  }
  q_ = cfg.state_weights;
  r_ = cfg.input_weights;
  lower_ = {-cfg.yaw_rate_max, cfg.parameter_rate_min};
  upper_ = {cfg.yaw_rate_max, cfg.parameter_rate_max};
}

Eigen::VectorXd PathFrameFocp::derivative(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) const {
  const PathPoint point = path_.eval_extended(x(3));
  const double speed = profile_.speed(point.gamma, 0.0);
  const double target_speed = point.arc_speed * u(1);  // |p'| v_gamma
  Eigen::Vector4d dx;
  dx(0) = -target_speed * (1.0 - point.curvature * x(1)) + speed * std::cos(x(2));
  dx(1) = -point.curvature * target_speed * x(0) + speed * std::sin(x(2));
  dx(2) = u(0) - point.curvature * target_speed;
  dx(3) = u(1);
  return dx;
}

double PathFrameFocp::stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const PathPoint point = path_.eval_extended(x(3));
  const double speed = profile_.speed(point.gamma, 0.0);
  const double target_speed = point.arc_speed * u(1);
  // Input residual that vanishes once the errors do.
  const double a0 = speed * std::cos(x(2)) - target_speed;
  const double a1 = u(0) - point.curvature * target_speed;
  return q_(0) * x(0) * x(0) + q_(1) * x(1) * x(1) + q_(2) * x(2) * x(2) +
         r_(0) * a0 * a0 + r_(1) * a1 * a1;
}

Eigen::VectorXd PathFrameFocp::input_lower() const { return lower_; }
Eigen::VectorXd PathFrameFocp::input_upper() const { return upper_; }

// --- body-frame formulation -------------------------------------------------

BodyFrameFocp::BodyFrameFocp(Path path, SpeedProfile profile,
                             const Eigen::Vector2d& body_offset, const NmpcConfig& cfg)
    : path_(std::move(path)), profile_(std::move(profile)), offset_(body_offset) {
  if (std::abs(offset_.x()) < 1e-9) {
    throw SingularOffset("body offset x-component must be nonzero");
  }
  if (cfg.state_weights.size() != 2 || cfg.input_weights.size() != 2) {
    throw ValidationError("body-frame focp: need 2 state weights and 2 input weights");
  }
  interaction_ << 1.0, offset_.y(), 0.0, -offset_.x();
  q_ = cfg.state_weights;
  r_ = cfg.input_weights;
  o_ = cfg.speed_weight;
  lower_ = {cfg.surge_min, -cfg.yaw_rate_max, cfg.parameter_rate_min};
  upper_ = {cfg.surge_max, cfg.yaw_rate_max, cfg.parameter_rate_max};
}

Eigen::VectorXd BodyFrameFocp::derivative(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) const {
  const PathPoint point = path_.eval_extended(x(3));
  const Eigen::Vector2d body_velocity = interaction_ * Eigen::Vector2d(u(0), u(1));
  const Eigen::Vector2d de = body_frame_error_rates(x.head<2>(), u(1), body_velocity, x(2),
                                                    point.derivative, u(2));
  Eigen::Vector4d dx;
  dx.head<2>() = de;
  dx(2) = u(1);
  dx(3) = u(2);
  return dx;
}

double BodyFrameFocp::stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const PathPoint point = path_.eval_extended(x(3));
  const Eigen::Vector2d residual =
      interaction_ * Eigen::Vector2d(u(0), u(1)) -
      Rot2(x(2)).to_frame(point.derivative) * u(2);
  const double rate_error = u(2) - parameter_rate(profile_, point, 0.0);
  return q_(0) * x(0) * x(0) + q_(1) * x(1) * x(1) + r_(0) * residual.x() * residual.x() +
         r_(1) * residual.y() * residual.y() + o_ * rate_error * rate_error;
}

Eigen::VectorXd BodyFrameFocp::input_lower() const { return lower_; }
Eigen::VectorXd BodyFrameFocp::input_upper() const { return upper_; }

// --- rollout and cost -------------------------------------------------------

Eigen::MatrixXd rollout(const FocpModel& model, const Eigen::VectorXd& x0,
                        const Eigen::MatrixXd& inputs, double interval, double max_substep) {
  const int n = static_cast<int>(inputs.cols());
  Eigen::MatrixXd states(model.state_dim(), n + 1);
  states.col(0) = x0;
  const int substeps = std::max(1, static_cast<int>(std::ceil(interval / max_substep)));
  const double h = interval / substeps;
  Eigen::VectorXd x = x0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd u = inputs.col(k);
    for (int s = 0; s < substeps; ++s) {
      const Eigen::VectorXd k1 = model.derivative(x, u);
      const Eigen::VectorXd k2 = model.derivative(x + 0.5 * h * k1, u);
      const Eigen::VectorXd k3 = model.derivative(x + 0.5 * h * k2, u);
      const Eigen::VectorXd k4 = model.derivative(x + h * k3, u);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite()) throw NonFinite("nmpc rollout produced a non-finite state");
    states.col(k + 1) = x;
  }
  return states;
}

double trajectory_cost(const FocpModel& model, const Eigen::VectorXd& x0,
                       const Eigen::MatrixXd& inputs, double interval, double max_substep) {
  const Eigen::MatrixXd states = rollout(model, x0, inputs, interval, max_substep);
  double cost = 0.0;
  for (int k = 0; k < inputs.cols(); ++k) {
    const double left = model.stage_cost(states.col(k), inputs.col(k));
    const double right = model.stage_cost(states.col(k + 1), inputs.col(k));
    cost += 0.5 * (left + right) * interval;
  }
  return cost;
}

// --- solver -------------------------------------------------------------

NmpcSolver::NmpcSolver(std::shared_ptr<const FocpModel> model, NmpcConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.steps();
}

Eigen::MatrixXd NmpcSolver::clamp_inputs(Eigen::MatrixXd inputs) const {
  const Eigen::VectorXd lo = model_->input_lower();
  const Eigen::VectorXd hi = model_->input_upper();
  for (int k = 0; k < inputs.cols(); ++k) {
    inputs.col(k) = inputs.col(k).cwiseMax(lo).cwiseMin(hi);
  }
  return inputs;
}

NmpcSolver::Result NmpcSolver::solve(const Eigen::VectorXd& x0,
                                     const std::optional<Eigen::MatrixXd>& warm_start) const {
  const int n = config_.steps();
  const int dim = model_->input_dim();
  if (warm_start && (warm_start->rows() != dim || warm_start->cols() != n)) {
    throw ValidationError("nmpc solve: warm start has the wrong shape");
  }
  Eigen::MatrixXd inputs = warm_start
                               ? clamp_inputs(*warm_start)
                               : clamp_inputs(Eigen::MatrixXd::Zero(dim, n));
  auto cost_of = [&](const Eigen::MatrixXd& u) {
    return trajectory_cost(*model_, x0, u, config_.sample_time, config_.max_substep);
  };

  double cost = cost_of(inputs);
  double step = config_.initial_step;
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd grad(dim, n);

  for (; iter < config_.max_iterations; ++iter) {
    // Central finite differences over the input samples.
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < dim; ++i) {
        Eigen::MatrixXd probe = inputs;
        probe(i, k) = inputs(i, k) + config_.fd_step;
        const double up = cost_of(probe);
        probe(i, k) = inputs(i, k) - config_.fd_step;
        const double down = cost_of(probe);
        grad(i, k) = (up - down) / (2.0 * config_.fd_step);
      }
    }
    const double scale = grad.cwiseAbs().maxCoeff();
    if (scale < config_.tolerance) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd direction = grad / scale;

    bool accepted = false;
    for (int back = 0; back < 40; ++back) {
      const Eigen::MatrixXd trial = clamp_inputs(inputs - step * direction);
      const double trial_cost = cost_of(trial);
      if (trial_cost < cost - 1e-15) {
        const double drop = cost - trial_cost;
        inputs = trial;
        cost = trial_cost;
        accepted = true;
        step = std::min(step * 1.5, 1e3 * config_.initial_step);
        if (drop < config_.tolerance * (1.0 + cost)) converged = true;
        break;
      }
      step *= 0.5;
      if (step < 1e-14) break;
    }
    if (!accepted || converged) {
      converged = true;  // stationary within the line-search resolution
      break;
    }
  }

  Result result;
  result.inputs = inputs;
  result.first_input = inputs.col(0);
  result.cost = cost;
  result.iterations = iter;
  result.converged = converged;
  return result;
}

Eigen::MatrixXd NmpcSolver::shift(const Eigen::MatrixXd& previous) const {
  Eigen::MatrixXd shifted = previous;
  const auto n = previous.cols();
  if (n > 1) {
    shifted.leftCols(n - 1) = previous.rightCols(n - 1);
  }
  shifted.col(n - 1) = previous.col(n - 1);
  return shifted;
}

Eigen::MatrixXd brute_force_search(const FocpModel& model, const NmpcConfig& config,
                                   const Eigen::VectorXd& x0, int grid_points) {
  const int n = config.steps();
  const int dim = model.input_dim();
  if (n > 3) throw ValidationError("brute force: at most 3 shooting steps");
  if (grid_points < 2 || grid_points > 15) {
    throw ValidationError("brute force: grid must have 2..15 points per dimension");
  }
  const int axes = dim * n;
  double combos = std::pow(grid_points, axes);
  if (combos > 5e6) throw ValidationError("brute force: grid too large");

  const Eigen::VectorXd lo = model.input_lower();
  const Eigen::VectorXd hi = model.input_upper();
  std::vector<int> index(axes, 0);
  Eigen::MatrixXd candidate(dim, n);
  Eigen::MatrixXd best(dim, n);
  double best_cost = std::numeric_limits<double>::infinity();

  const long total = static_cast<long>(combos);
  for (long it = 0; it < total; ++it) {
    long rem = it;
    for (int a = 0; a < axes; ++a) {
      index[a] = static_cast<int>(rem % grid_points);
      rem /= grid_points;
    }
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < dim; ++i) {
        const double frac =
            static_cast<double>(index[k * dim + i]) / (grid_points - 1);
        candidate(i, k) = lo(i) + frac * (hi(i) - lo(i));
      }
    }
    const double cost =
        trajectory_cost(model, x0, candidate, config.sample_time, config.max_substep);
    if (cost < best_cost) {
      best_cost = cost;
      best = candidate;
    }
  }
  return best;
}

// --- receding-horizon laws --------------------------------------------------

PathFrameNmpcLaw::PathFrameNmpcLaw(Path path, SpeedProfile profile, NmpcConfig config,
                                   double initial_gamma)
    : path_(path),
      profile_(profile),
      solver_(std::make_shared<PathFrameFocp>(path, profile, config), config),
      gamma_(initial_gamma) {
  validate_nmpc_config(config, 3, 2, path_, profile_);
}

GuidanceTelemetry PathFrameNmpcLaw::step(const VehicleState& state, double t, double dt,
                                         const std::optional<Eigen::Vector2d>&) {
  const PathPoint point = path_.eval_extended(gamma_);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  if (!solved_once_ || t >= next_solve_time_ - 1e-9) {
    Eigen::Vector4d x0{err.along_track, err.cross_track, err.heading_error, gamma_};
    const auto result = solver_.solve(x0, warm_);
    held_yaw_rate_ = result.first_input(0);
    held_parameter_rate_ = result.first_input(1);
    warm_ = solver_.shift(result.inputs);
    next_solve_time_ = t + solver_.config().sample_time;
    solved_once_ = true;
  }

  GuidanceTelemetry out;
  out.command.actuation = YawRateCommand{profile_.speed(gamma_, t), held_yaw_rate_};
  out.command.parameter_rate = held_parameter_rate_;
  out.error = err;
  out.gamma = gamma_;
  out.gamma_rate = held_parameter_rate_;
  out.lyapunov = 0.5 * (err.along_track * err.along_track +
                        err.cross_track * err.cross_track +
                        err.heading_error * err.heading_error);

  gamma_ += dt * held_parameter_rate_;  // exact for the held input
  return out;
}

BodyFrameNmpcLaw::BodyFrameNmpcLaw(Path path, SpeedProfile profile, NmpcConfig config,
                                   const Eigen::Vector2d& body_offset, double initial_gamma)
    : path_(path),
      profile_(profile),
      offset_(body_offset),
      solver_(std::make_shared<BodyFrameFocp>(path, profile, body_offset, config), config),
      gamma_(initial_gamma) {
  validate_nmpc_config(config, 2, 2, path_, profile_);
}

GuidanceTelemetry BodyFrameNmpcLaw::step(const VehicleState& state, double t, double dt,
                                         const std::optional<Eigen::Vector2d>&) {
  const PathPoint point = path_.eval_extended(gamma_);
  const double tangent = tangent_unwrap_.unwrap(point.tangent_angle);
  const PathFrameError err = path_frame_error(state.position, state.heading, point, tangent);

  if (!solved_once_ || t >= next_solve_time_ - 1e-9) {
    const Eigen::Vector2d eb =
        body_frame_error(state.position, state.heading, point.position, offset_).error;
    Eigen::Vector4d x0{eb.x(), eb.y(), state.heading, gamma_};
    const auto result = solver_.solve(x0, warm_);
    held_surge_ = result.first_input(0);
    held_yaw_rate_ = result.first_input(1);
    held_parameter_rate_ = result.first_input(2);
    warm_ = solver_.shift(result.inputs);
    next_solve_time_ = t + solver_.config().sample_time;
    solved_once_ = true;
  }

  GuidanceTelemetry out;
  out.command.actuation = YawRateCommand{held_surge_, held_yaw_rate_};
  out.command.parameter_rate = held_parameter_rate_;
  out.error = err;
  out.gamma = gamma_;
  out.gamma_rate = held_parameter_rate_;
  const Eigen::Vector2d eb =
      body_frame_error(state.position, state.heading, point.position, offset_).error;
  const double rate_error = held_parameter_rate_ - parameter_rate(profile_, point, t);
  out.lyapunov = 0.5 * (eb.squaredNorm() + rate_error * rate_error);

  gamma_ += dt * held_parameter_rate_;
  return out;
}

}  // namespace pf
