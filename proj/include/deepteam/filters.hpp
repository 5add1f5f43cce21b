#pragma once

#include "deepteam/model.hpp"

namespace deepteam {

// Covariance/gain schedule of one scale-free filter. Index k is t = k+1.
struct CovarianceSchedule {
  MatrixSchedule Sigma_pred;  // Sigma_{t|t-1}
  MatrixSchedule Sigma_post;  // Sigma_{t|t}
  MatrixSchedule gain;        // dx x dy

  const Matrix& pred(int t) const { return Sigma_pred.at(t - 1); }
  const Matrix& post(int t) const { return Sigma_post.at(t - 1); }
  const Matrix& L(int t) const { return gain.at(t - 1); }
  int horizon() const { return static_cast<int>(gain.size()); }
};

// Index-invariant schedule of the auxiliary (gauge-transformed) filter. Agent
// i's own auxiliary error covariance is (1 - alpha_i^2/n) times these.
struct LocalFilterSchedule : CovarianceSchedule {};

// Schedule of the deep-state filter; starts from Sigma_x / n.
struct GlobalFilterSchedule : CovarianceSchedule {};

struct FilterSchedules {
  LocalFilterSchedule local;
  GlobalFilterSchedule global;
};

inline constexpr double kInnovationSingularity = 1e-12;

LocalFilterSchedule precompute_local(const TeamModel& model);
GlobalFilterSchedule precompute_global(const TeamModel& model);
FilterSchedules precompute_filters(const TeamModel& model);

// Agent i's own auxiliary error covariance (1 - alpha_i^2/n) Sigma.
Matrix agent_auxiliary_covariance(const Matrix& index_invariant, double alpha_i, int n);

// (I + alpha_i^-2 a a') where a is alpha without entry i; the closed-form
// inverse of I - a a'/n for a normalized influence vector.
Matrix other_agents_inverse(const InfluenceVector& influence, int i);
Vector other_agents(const InfluenceVector& influence, int i);

enum class Phase { Predicted, Updated };

// Per-agent auxiliary estimates (column i = agent i) and the shared deep-state
// estimate, both at time t in the given phase.
struct EstimatorState {
  Matrix dxhat;  // dx x n
  Vector z;      // dx
  int t = 1;
  Phase phase = Phase::Predicted;
};

// Prior at t = 1: dxhat_i = (1 - alpha_i * mean(alpha)) mu_x, z = mean(alpha) mu_x.
EstimatorState initial_estimate(const TeamModel& model);

// Measurement update at state.t. dy holds the auxiliary observations
// y_i - alpha_i * ybar, ybar the shared deep observation.
EstimatorState correct(const TeamModel& model, const FilterSchedules& schedules,
                       const EstimatorState& predicted, const Matrix& dy, const Vector& ybar);

// Time update from t to t+1 given auxiliary actions du and the deep action ubar.
EstimatorState predict(const TeamModel& model, const EstimatorState& updated, const Matrix& du,
                       const Vector& ubar);

// Auxiliary filter advanced from dxhat_{t|t} to dxhat_{t+1|t+1}.
Matrix local_step(const TeamModel& model, const LocalFilterSchedule& schedule, int t,
                  const Matrix& dxhat_post, const Matrix& du, const Matrix& dy_next);

// Deep-state filter advanced from z_{t|t} to z_{t+1|t+1}.
Vector global_step(const TeamModel& model, const GlobalFilterSchedule& schedule, int t,
                   const Vector& z_post, const Vector& ubar, const Vector& ybar_next);

inline Vector combined_agent_estimate(const Vector& dxhat_i, const Vector& z, double alpha_i) {
  return dxhat_i + alpha_i * z;
}

// All agents' estimates xhat_i = dxhat_i + alpha_i z as columns.
Matrix agent_estimates(const EstimatorState& state, const InfluenceVector& influence);

// The same estimates propagated directly in per-agent coordinates:
//   xhat_{t+1|t} = A xhat + B u_i + alpha_i (Abar z + Bbar ubar)
//   xhat_{t|t}   = xhat_{t|t-1} + L p_i + alpha_i (Lbar - L) (ybar - (C+Cbar) z_{t|t-1})
// with p_i = y_i - C xhat_{t|t-1} - alpha_i Cbar z_{t|t-1}.
Matrix direct_predict(const TeamModel& model, int t, const Matrix& xhat_post, const Vector& z_post,
                      const Matrix& u, const Vector& ubar);
Matrix direct_correct(const TeamModel& model, const FilterSchedules& schedules, int t,
                      const Matrix& xhat_pred, const Vector& z_pred, const Matrix& y,
                      const Vector& ybar);

struct InnovationRecord {
  Matrix p;     // dy x n, y_i - E[y_i | history]
  Matrix dp;    // dy x n, p_i - alpha_i pbar
  Vector pbar;  // dy
  int t = 1;
};

InnovationRecord innovations(const TeamModel& model, const EstimatorState& predicted,
                             const Matrix& y);

}  // namespace deepteam
