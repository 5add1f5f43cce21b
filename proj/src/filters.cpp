#include "deepteam/filters.hpp"

#include <stdexcept>

#include "deepteam/errors.hpp"

namespace deepteam {

namespace {

// Shared forward recursion. The callbacks return the stage matrices of the
// filtered subsystem: transition, observation, process and measurement noise.
template <typename Stage>
CovarianceSchedule run_schedule(const TeamModel& model, const std::string& name,
                                const Matrix& initial, const Stage& stage_of) {
  const int T = model.T();
  CovarianceSchedule out;
  out.Sigma_pred.resize(T);
  out.Sigma_post.resize(T);
  out.gain.resize(T);

  Matrix pred = initial;
  for (int t = 1; t <= T; ++t) {
    const auto [A, C, process, measurement] = stage_of(t);
    const Matrix innovation = symmetrized(C * pred * C.transpose() + measurement);
    const double lo = min_symmetric_eigenvalue(innovation);
    if (!(lo > kInnovationSingularity * innovation.trace())) throw SingularInnovation(name, t);
    Eigen::LLT<Matrix> llt(innovation);
    if (llt.info() != Eigen::Success) throw SingularInnovation(name, t);
    const Matrix L = llt.solve(C * pred).transpose();
    const Eigen::Index dx = pred.rows();
    const Matrix post = symmetrized((Matrix::Identity(dx, dx) - L * C) * pred);

    out.Sigma_pred[t - 1] = pred;
    out.Sigma_post[t - 1] = post;
    out.gain[t - 1] = L;
    if (t < T) pred = symmetrized(A * post * A.transpose() + process);
  }
  return out;
}

struct FilterStage {
  Matrix A, C, process, measurement;
};

void require_range(const TeamModel& model, int t, int last, const char* what) {
  if (t < 1 || t > last)
    throw std::out_of_range(std::string(what) + ": t=" + std::to_string(t) +
                            " outside 1.." + std::to_string(last) + " (T=" +
                            std::to_string(model.T()) + ")");
}

void require_phase(const EstimatorState& s, Phase phase, const char* what) {
  if (s.phase != phase)
    throw std::logic_error(std::string(what) + ": estimator state is in the wrong phase");
}

}  // namespace

LocalFilterSchedule precompute_local(const TeamModel& model) {
  require_valid(model);
  auto stage = [&](int t) {
    const StageMatrices& s = model.stage(t);
    return FilterStage{s.A, s.C, s.E * model.Sigma_w(t) * s.E.transpose(),
                       s.S * model.Sigma_v(t) * s.S.transpose()};
  };
  return {run_schedule(model, "filters.local", model.noise.Sigma_x, stage)};
}

GlobalFilterSchedule precompute_global(const TeamModel& model) {
  require_valid(model);
  const double n = model.n();
  auto stage = [&](int t) {
    const StageMatrices& s = model.stage(t);
    const Matrix E = s.E_deep();
    const Matrix S = s.S_deep();
    return FilterStage{s.A_deep(), s.C_deep(), E * model.Sigma_w(t) * E.transpose() / n,
                       S * model.Sigma_v(t) * S.transpose() / n};
  };
  return {run_schedule(model, "filters.global", model.noise.Sigma_x / n, stage)};
}

FilterSchedules precompute_filters(const TeamModel& model) {
  return {precompute_local(model), precompute_global(model)};
}

Matrix agent_auxiliary_covariance(const Matrix& index_invariant, double alpha_i, int n) {
  return (1.0 - alpha_i * alpha_i / n) * index_invariant;
}

EstimatorState initial_estimate(const TeamModel& model) {
  const InfluenceVector& a = model.influence;
  const double mean = a.mean();
  EstimatorState s;
  s.dxhat = model.noise.mu_x * (Vector::Ones(a.size()) - mean * a.alpha).transpose();
  s.z = mean * model.noise.mu_x;
  s.t = 1;
  s.phase = Phase::Predicted;
  return s;
}

EstimatorState correct(const TeamModel& model, const FilterSchedules& schedules,
                       const EstimatorState& predicted, const Matrix& dy, const Vector& ybar) {
  require_phase(predicted, Phase::Predicted, "correct");
  const int t = predicted.t;
  require_range(model, t, model.T(), "correct");
  const StageMatrices& s = model.stage(t);
  EstimatorState out;
  out.dxhat = predicted.dxhat + schedules.local.L(t) * (dy - s.C * predicted.dxhat);
  out.z = predicted.z + schedules.global.L(t) * (ybar - s.C_deep() * predicted.z);
  out.t = t;
  out.phase = Phase::Updated;
  return out;
}

EstimatorState predict(const TeamModel& model, const EstimatorState& updated, const Matrix& du,
                       const Vector& ubar) {
  require_phase(updated, Phase::Updated, "predict");
  const int t = updated.t;
  require_range(model, t, model.T() - 1, "predict");
  const StageMatrices& s = model.stage(t);
  EstimatorState out;
  out.dxhat = s.A * updated.dxhat + s.B * du;
  out.z = s.A_deep() * updated.z + s.B_deep() * ubar;
  out.t = t + 1;
  out.phase = Phase::Predicted;
  return out;
}

Matrix local_step(const TeamModel& model, const LocalFilterSchedule& schedule, int t,
                  const Matrix& dxhat_post, const Matrix& du, const Matrix& dy_next) {
  require_range(model, t, model.T() - 1, "local_step");
  const StageMatrices& now = model.stage(t);
  const StageMatrices& next = model.stage(t + 1);
  const Matrix pred = now.A * dxhat_post + now.B * du;
  return pred + schedule.L(t + 1) * (dy_next - next.C * pred);
}

Vector global_step(const TeamModel& model, const GlobalFilterSchedule& schedule, int t,
                   const Vector& z_post, const Vector& ubar, const Vector& ybar_next) {
  require_range(model, t, model.T() - 1, "global_step");
  const StageMatrices& now = model.stage(t);
  const StageMatrices& next = model.stage(t + 1);
  const Vector pred = now.A_deep() * z_post + now.B_deep() * ubar;
  return pred + schedule.L(t + 1) * (ybar_next - next.C_deep() * pred);
}

Matrix agent_estimates(const EstimatorState& state, const InfluenceVector& influence) {
  return state.dxhat + state.z * influence.alpha.transpose();
}

Matrix direct_predict(const TeamModel& model, int t, const Matrix& xhat_post, const Vector& z_post,
                      const Matrix& u, const Vector& ubar) {
  require_range(model, t, model.T() - 1, "direct_predict");
  const StageMatrices& s = model.stage(t);
  const Vector shared = s.Abar * z_post + s.Bbar * ubar;
  return s.A * xhat_post + s.B * u + shared * model.influence.alpha.transpose();
}

Matrix direct_correct(const TeamModel& model, const FilterSchedules& schedules, int t,
                      const Matrix& xhat_pred, const Vector& z_pred, const Matrix& y,
                      const Vector& ybar) {
  require_range(model, t, model.T(), "direct_correct");
  const StageMatrices& s = model.stage(t);
  const Matrix& L = schedules.local.L(t);
  const Matrix& Lbar = schedules.global.L(t);
  const Vector& alpha = model.influence.alpha;
  const Matrix p = y - s.C * xhat_pred - (s.Cbar * z_pred) * alpha.transpose();
  const Vector global_correction = (Lbar - L) * (ybar - s.C_deep() * z_pred);
  return xhat_pred + L * p + global_correction * alpha.transpose();
}

InnovationRecord innovations(const TeamModel& model, const EstimatorState& predicted,
                             const Matrix& y) {
  require_phase(predicted, Phase::Predicted, "innovations");
  const int t = predicted.t;
  require_range(model, t, model.T(), "innovations");
  const StageMatrices& s = model.stage(t);
  if (y.rows() != model.dims.dy || y.cols() != model.n())
    throw ModelError("innovations: observation block has wrong shape");
  const Matrix xhat = agent_estimates(predicted, model.influence);
  InnovationRecord rec;
  rec.p = y - s.C * xhat - (s.Cbar * predicted.z) * model.influence.alpha.transpose();
  const GaugeSplit split = gauge_decompose(rec.p, model.influence);
  rec.dp = split.deltas;
  rec.pbar = split.bar;
  rec.t = t;
  return rec;
}

Vector other_agents(const InfluenceVector& influence, int i) {
  const int n = influence.size();
  if (i < 0 || i >= n) throw std::out_of_range("other_agents: agent index out of range");
  Vector a(n - 1);
  for (int j = 0, k = 0; j < n; ++j)
    if (j != i) a(k++) = influence[j];
  return a;
}

Matrix other_agents_inverse(const InfluenceVector& influence, int i) {
  const Vector a = other_agents(influence, i);
  const double ai = influence[i];
  return Matrix::Identity(a.size(), a.size()) + a * a.transpose() / (ai * ai);
}

}  // namespace deepteam
