#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "deepteam/filters.hpp"
#include "deepteam/model.hpp"
#include "deepteam/strategy.hpp"

namespace deepteam {

enum class RecordLevel { CostsOnly, FullTrace };

struct RolloutConfig {
  std::uint64_t seed = 0;
  int num_rollouts = 1;
  StrategyKind strategy = OptimalIDSS{};
  RecordLevel record = RecordLevel::CostsOnly;
  int workers = 0;  // 0: available parallelism
};

// One time step of a rollout. Collections are column-per-agent. The estimates
// are those of the exact (Delta, z) filters fed with the realized actions,
// whatever strategy produced them; the errors are e_i = dx_i - dxhat_i and
// xi = xbar - z at the updated phase.
struct StepRecord {
  int t = 1;
  Matrix x, u, y;
  Vector xbar, ubar, ybar;
  Matrix w, v;          // primitive noise drawn at t (w is empty at t = T)
  Matrix dxhat_pred;    // dxhat_{t|t-1}
  Vector z_pred;        // z_{t|t-1}
  Matrix dxhat;         // dxhat_{t|t}
  Vector z;             // z_{t|t}
  Matrix xhat;          // dxhat_i + alpha_i z
  Matrix e;             // auxiliary estimation errors
  Vector xi;            // deep-state estimation error
  Vector cost;          // c^i_t
  InnovationRecord innovation;
};

struct Trace {
  std::uint64_t index = 0;
  std::string strategy;
  double total_cost = 0.0;          // sum_t (1/n) sum_i c^i_t
  std::vector<double> step_cost;    // (1/n) sum_i c^i_t per t
  double ms_correction = 0.0;       // sum_t ||Lbar_t pbar_t||^2
  double max_cost_split_residual = 0.0;
  std::vector<StepRecord> steps;    // FullTrace only
};

// Holds the noise factors of one model so repeated rollouts share them.
class RolloutEngine {
 public:
  RolloutEngine(const TeamModel& model, const TeamSolution& solution);

  Trace rollout(const StrategyKind& strategy, std::uint64_t seed, std::uint64_t index,
                RecordLevel record) const;

  // Rollouts 0..num_rollouts-1, returned in index order.
  std::vector<Trace> run(const RolloutConfig& config) const;

  const TeamModel& model() const { return model_; }
  const TeamSolution& solution() const { return solution_; }

 private:
  const TeamModel& model_;
  const TeamSolution& solution_;
  Matrix factor_x_;
  MatrixSchedule factor_w_;
  MatrixSchedule factor_v_;
};

Trace rollout(const TeamModel& model, const TeamSolution& solution, const RolloutConfig& config,
              std::uint64_t index);

struct CostEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
  bool has_standard_error = false;  // false for a single sample
};

CostEstimate evaluate_cost(std::span<const double> costs);
CostEstimate evaluate_cost(const std::vector<Trace>& traces);

// The family's per-agent matrices with n agents and alpha = 1.
TeamModel with_population(const TeamModel& family, int n);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct ConvergenceRow {
  int n = 0;
  double max_sigma_bar = 0.0;
  double ms_correction = 0.0;
  double ms_correction_se = 0.0;
  double cost_gap = 0.0;  // J(meanfield) - J(optimal), common random numbers
  double cost_gap_se = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double slope_max_sigma_bar = 0.0;
  double slope_ms_correction = 0.0;
  double slope_cost_gap = 0.0;  // NaN unless every gap is positive
  double max_cost_split_residual = 0.0;
};

// config.strategy is ignored; both strategies share seed and rollout indices.
ConvergenceTable convergence_experiment(const TeamModel& family, std::span<const int> n_list,
                                        const RolloutConfig& config);

// CSV writers; floats use 17 significant digits.
void write_costs_csv(const std::filesystem::path& path, const std::vector<Trace>& traces);
void write_trace_csv(const std::filesystem::path& path, const std::vector<Trace>& traces);
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table);
std::string format_double(double v);

}  // namespace deepteam
