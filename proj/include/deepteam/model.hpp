#pragma once

#include <string>
#include <vector>

#include "deepteam/linalg.hpp"

namespace deepteam {

struct Dimensions {
  int n = 2;   // agents
  int T = 1;   // horizon
  int dx = 1;
  int du = 1;
  int dy = 1;
  int dw = 1;
  int dv = 1;
};

// System, observation and cost matrices for one time step. The *_bar members
// multiply deep (influence-weighted aggregate) variables.
struct StageMatrices {
  Matrix A, Abar;   // dx x dx
  Matrix B, Bbar;   // dx x du
  Matrix E, Ebar;   // dx x dw
  Matrix C, Cbar;   // dy x dx
  Matrix S, Sbar;   // dy x dv
  Matrix Q, Qbar;   // dx x dx
  Matrix R, Rbar;   // du x du

  // Matrices of the aggregate (deep) subsystem.
  Matrix A_deep() const { return A + Abar; }
  Matrix B_deep() const { return B + Bbar; }
  Matrix E_deep() const { return E + Ebar; }
  Matrix C_deep() const { return C + Cbar; }
  Matrix S_deep() const { return S + Sbar; }
  Matrix Q_deep() const { return Q + Qbar; }
  Matrix R_deep() const { return R + Rbar; }

  static StageMatrices zeros(const Dimensions& d);
};

struct NoiseModel {
  Vector mu_x;             // dx
  Matrix Sigma_x;          // dx x dx
  MatrixSchedule Sigma_w;  // dw x dw per t
  MatrixSchedule Sigma_v;  // dv x dv per t
};

struct InfluenceVector {
  Vector alpha;

  int size() const { return static_cast<int>(alpha.size()); }
  double operator[](int i) const { return alpha(i); }
  // (1/n) sum_j alpha_j
  double mean() const { return alpha.size() ? alpha.mean() : 0.0; }

  static InfluenceVector homogeneous(int n) { return {Vector::Ones(n)}; }
};

// Time-indexed accessors take the 1-based t used throughout the library.
struct TeamModel {
  Dimensions dims;
  std::vector<StageMatrices> stages;  // length T
  NoiseModel noise;                   // Sigma_w, Sigma_v length T
  InfluenceVector influence;

  const StageMatrices& stage(int t) const { return stages.at(t - 1); }
  const Matrix& Sigma_w(int t) const { return noise.Sigma_w.at(t - 1); }
  const Matrix& Sigma_v(int t) const { return noise.Sigma_v.at(t - 1); }
  int n() const { return dims.n; }
  int T() const { return dims.T; }
};

// Builds a model from either one stage record (held constant over the horizon)
// or a full length-T schedule; the same applies to Sigma_w and Sigma_v.
// Symmetric inputs (Q, R, covariances) with asymmetry at most 1e-12 are
// symmetrized; larger asymmetry is kept so validate() reports it.
TeamModel assemble_model(const Dimensions& dims, std::vector<StageMatrices> stages,
                         NoiseModel noise, InfluenceVector influence);

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kNormalizationTolerance = 1e-9;

ValidationReport validate(const TeamModel& model);

// Throws ModelError if the report is not empty.
void require_valid(const TeamModel& model);

// c * raw with c = sqrt(n / sum raw_i^2). Requires n >= 2 and no zero entry.
InfluenceVector normalize_influence(const Vector& raw);

// Per-agent collections are stored column-wise: column i belongs to agent i.

// (1/n) sum_i alpha_i v_i
Vector deep_aggregate(const Matrix& per_agent, const InfluenceVector& influence);

struct GaugeSplit {
  Matrix deltas;  // column i: v_i - alpha_i * bar
  Vector bar;
};

GaugeSplit gauge_decompose(const Matrix& per_agent, const InfluenceVector& influence);
Matrix gauge_recompose(const Matrix& deltas, const Vector& bar, const InfluenceVector& influence);

// Per-agent stage costs c^i_t for states x (dx x n) and actions u (du x n).
Vector stage_costs(const StageMatrices& stage, const Matrix& x, const Matrix& u,
                   const InfluenceVector& influence);

// Both sides of the orthogonal cost split of (1/n) sum_i (x_i'Q x_i + u_i'R u_i).
struct CostSplit {
  double direct = 0.0;
  double decomposed = 0.0;

  // |direct - decomposed| / max(|direct|, |decomposed|); 0 when both vanish.
  double relative_residual() const;
};

CostSplit cost_decomposition(const StageMatrices& stage, const Matrix& x, const Matrix& u,
                             const InfluenceVector& influence);

}  // namespace deepteam
