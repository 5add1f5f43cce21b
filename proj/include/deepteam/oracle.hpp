#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deepteam/strategy.hpp"

namespace deepteam {

inline constexpr int kDefaultOracleCap = 64;

// Stacked system over all agents. Stacked vectors are VEC(v_1, ..., v_n),
// i.e. the column-major flattening of a column-per-agent block.
struct JointStage {
  Matrix A, B, E, C, S;  // I (x) M + (1/n) alpha alpha' (x) Mbar
  Matrix Sigma_w, Sigma_v;  // I (x) Sigma
  Matrix Q, R;  // team stage cost is x'Qx + u'Ru
};

struct JointModel {
  Dimensions dims;
  std::vector<JointStage> stages;
  Vector mean0;  // 1 (x) mu_x
  Matrix cov0;   // I (x) Sigma_x

  const JointStage& stage(int t) const { return stages.at(t - 1); }
};

// Throws std::length_error when n * dx exceeds `cap`.
JointModel build_joint_model(const TeamModel& model, int cap = kDefaultOracleCap);

Vector stack_columns(const Matrix& per_agent);
Matrix unstack_columns(const Vector& stacked, Eigen::Index rows);

struct CentralizedEstimates {
  std::vector<Vector> mean_pred, mean_post;  // t = 1..T
  std::vector<Matrix> cov_pred, cov_post;
};

// Textbook Kalman filter on the stacked system conditioning on every agent's
// observations. observations[t-1] is the stacked y_t; actions[t-1] the
// stacked u_t for t = 1..T-1.
CentralizedEstimates centralized_filter(const JointModel& joint,
                                        const std::vector<Vector>& observations,
                                        const std::vector<Vector>& actions);

// Affine finite-state team controller on stacked signals, per t:
//   zeta_post = F zeta + G y + f
//   u         = K zeta_post + D y + k        (u_T = 0)
//   zeta_next = W zeta_post + M u + omega
struct ControllerStage {
  Matrix F, G, K, D, W, M;
  Vector f, k, omega;
};

struct LinearController {
  Vector initial;
  std::vector<ControllerStage> stages;  // t = 1..T
};

LinearController build_controller(const TeamModel& model, const TeamSolution& solution,
                                  const StrategyKind& strategy);

// Exact team cost by propagating the mean and covariance of (state,
// controller state) through the closed loop.
double exact_cost(const JointModel& joint, const LinearController& controller);
double exact_cost(const TeamModel& model, const TeamSolution& solution,
                  const StrategyKind& strategy, int cap = kDefaultOracleCap);

// A parametrized family of strategies for numerical search.
struct StrategyClass {
  std::string name;
  int dimension = 0;
  std::function<StrategyKind(const Vector&)> make;
};

StrategyClass custom_linear_class(const Dimensions& dims);
StrategyClass singleton_class(const StrategyKind& strategy);
Vector custom_linear_parameters(const CustomLinear& custom);
CustomLinear custom_linear_from_parameters(const Dimensions& dims, const Vector& params);

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double step = 1e-5);

struct BruteForceOptions {
  int starts = 16;
  std::uint64_t seed = 1;
  double start_scale = 1.0;
  double fd_step = 1e-5;
  double rel_tol = 1e-10;
  int max_iterations = 1000;
  int cap = kDefaultOracleCap;
  int workers = 1;
};

struct BruteForceResult {
  Vector best_parameters;
  StrategyKind best = ZeroAction{};
  double best_cost = 0.0;
  int finite_starts = 0;
  int excluded_starts = 0;  // starts whose cost was not finite
  std::vector<double> start_costs;  // final cost per start, NaN if excluded
};

// Multi-start quasi-Newton descent on exact_cost with central-difference
// gradients; returns the best local minimum found.
BruteForceResult brute_force_optimize(const TeamModel& model, const TeamSolution& solution,
                                      const StrategyClass& strategies,
                                      const BruteForceOptions& options = {});

}  // namespace deepteam
