#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "pf/guidance.hpp"
#include "pf/path.hpp"

namespace pf {

/// Receding-horizon configuration shared by the two sampled-data optimal
/// control formulations.  The horizon is discretized into N = horizon /
/// sample_time shooting intervals with piecewise-constant inputs; the first
/// interval of the solution is applied and held until the next solve.
struct NmpcConfig {
  double horizon = 5.0;      // prediction horizon [s]
  double sample_time = 0.1;  // solve/hold interval and shooting step [s]

  Eigen::VectorXd state_weights;  // diagonal of Q
  Eigen::VectorXd input_weights;  // diagonal of R
  double speed_weight = 1.0;      // O, weight on (v_gamma - v_d), body form only

  double parameter_rate_min = 0.0;  // v_gamma lower bound (<= 0 required)
  double parameter_rate_max = 1.0;  // must exceed the peak desired rate
  double yaw_rate_max = 0.6;
  double surge_min = 0.0;  // body formulation only
  double surge_max = 1.0;

  int max_iterations = 60;      // projected-gradient iterations per solve
  double initial_step = 1.0;    // first trial step length
  double tolerance = 1e-9;      // relative cost-decrease stop
  double fd_step = 1e-6;        // central-difference probe
  double max_substep = 0.05;    // integrator substep bound inside one interval

  int steps() const;
};

/// A finite-horizon optimal control formulation: stacked error/parameter
/// state, piecewise-constant inputs, integral stage cost.
class FocpModel {
 public:
  virtual ~FocpModel() = default;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) const = 0;
  virtual double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
  virtual Eigen::VectorXd input_lower() const = 0;
  virtual Eigen::VectorXd input_upper() const = 0;
};

/// Path-frame formulation: state (s1, y1, psi_e, gamma), inputs (r, v_gamma),
/// surge pinned to the desired profile.  Stage cost |(s1,y1,psi_e)|_Q^2 +
/// |u_a|_R^2 with u_a the input residual that vanishes on the path.
class PathFrameFocp final : public FocpModel {
 public:
  PathFrameFocp(Path path, SpeedProfile profile, const NmpcConfig& cfg);
  int state_dim() const override { return 4; }
  int input_dim() const override { return 2; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;
  double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd input_lower() const override;
  Eigen::VectorXd input_upper() const override;

 private:
  Path path_;
  SpeedProfile profile_;
  Eigen::Vector3d q_;
  Eigen::Vector2d r_;
  Eigen::Vector2d lower_, upper_;
};

/// Body-frame formulation: state (eB, psi, gamma), inputs (u, r, v_gamma),
/// surge optimized alongside.  Stage cost |eB|_Q^2 + |u_b|_R^2 +
/// O (v_gamma - v_d)^2.
class BodyFrameFocp final : public FocpModel {
 public:
  BodyFrameFocp(Path path, SpeedProfile profile, const Eigen::Vector2d& body_offset,
                const NmpcConfig& cfg);
  int state_dim() const override { return 4; }
  int input_dim() const override { return 3; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;
  double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd input_lower() const override;
  Eigen::VectorXd input_upper() const override;

 private:
  Path path_;
  SpeedProfile profile_;
  Eigen::Vector2d offset_;
  Eigen::Matrix2d interaction_;  // Delta
  Eigen::Vector2d q_;
  Eigen::Vector2d r_;  // weights the 2-vector input residual
  double o_;
  Eigen::Vector3d lower_, upper_;
};

/// RK4 rollout of the model over N shooting intervals (columns of `inputs`);
/// returns state_dim x (N+1) trajectory including the initial state.
Eigen::MatrixXd rollout(const FocpModel& model, const Eigen::VectorXd& x0,
                        const Eigen::MatrixXd& inputs, double interval, double max_substep);

/// Trapezoidal quadrature of the stage cost along the rollout (terminal
/// cost intentionally zero; convergence comes from the horizon length).
double trajectory_cost(const FocpModel& model, const Eigen::VectorXd& x0,
                       const Eigen::MatrixXd& inputs, double interval, double max_substep);

/// Projected-gradient shooting solver with finite-difference gradients and
/// a backtracking step.  Monotone: the returned cost never exceeds the cost
/// of the initial iterate (warm start when given, zeros otherwise).
class NmpcSolver {
 public:
  struct Result {
    Eigen::MatrixXd inputs;       // input_dim x N
    Eigen::VectorXd first_input;  // applied sample
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;  // false when the iteration budget ran out
  };

  NmpcSolver(std::shared_ptr<const FocpModel> model, NmpcConfig config);

  Result solve(const Eigen::VectorXd& x0,
               const std::optional<Eigen::MatrixXd>& warm_start = std::nullopt) const;

  /// Previous solution advanced by one interval, last sample duplicated.
  Eigen::MatrixXd shift(const Eigen::MatrixXd& previous) const;

  const NmpcConfig& config() const { return config_; }
  const FocpModel& model() const { return *model_; }

 private:
  Eigen::MatrixXd clamp_inputs(Eigen::MatrixXd inputs) const;

  std::shared_ptr<const FocpModel> model_;
  NmpcConfig config_;
};

/// Exhaustive search over a per-input value grid; the test oracle for the
/// solver.  Requires N <= 3 shooting steps and at most 15 grid points per
/// input dimension.
Eigen::MatrixXd brute_force_search(const FocpModel& model, const NmpcConfig& config,
                                   const Eigen::VectorXd& x0, int grid_points);

/// Receding-horizon law on the path-frame formulation; yaw rate and the
/// virtual target rate come from the optimizer, surge from the profile.
class PathFrameNmpcLaw final : public GuidanceLaw {
 public:
  PathFrameNmpcLaw(Path path, SpeedProfile profile, NmpcConfig config, double initial_gamma);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "method5"; }

 private:
  Path path_;
  SpeedProfile profile_;
  NmpcSolver solver_;
  double gamma_;
  double held_yaw_rate_ = 0.0;
  double held_parameter_rate_ = 0.0;
  double next_solve_time_ = 0.0;
  bool solved_once_ = false;
  std::optional<Eigen::MatrixXd> warm_;
  AngleUnwrapper tangent_unwrap_;
};

/// Receding-horizon law on the body-frame formulation; surge, yaw rate and
/// the target rate are all optimized.
class BodyFrameNmpcLaw final : public GuidanceLaw {
 public:
  BodyFrameNmpcLaw(Path path, SpeedProfile profile, NmpcConfig config,
                   const Eigen::Vector2d& body_offset, double initial_gamma);
  GuidanceTelemetry step(const VehicleState& state, double t, double dt,
                         const std::optional<Eigen::Vector2d>& current_estimate) override;
  std::string_view name() const override { return "method7"; }

 private:
  Path path_;
  SpeedProfile profile_;
  Eigen::Vector2d offset_;
  NmpcSolver solver_;
  double gamma_;
  double held_surge_ = 0.0;
  double held_yaw_rate_ = 0.0;
  double held_parameter_rate_ = 0.0;
  double next_solve_time_ = 0.0;
  bool solved_once_ = false;
  std::optional<Eigen::MatrixXd> warm_;
  AngleUnwrapper tangent_unwrap_;
};

/// Validates an NmpcConfig against a formulation: weight sizes, bound
/// ordering, v_min <= 0 and v_max above the peak desired parameter rate.
void validate_nmpc_config(const NmpcConfig& config, int state_weights, int input_weights,
                          const Path& path, const SpeedProfile& profile);

}  // namespace pf
