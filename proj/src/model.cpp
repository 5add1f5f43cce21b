#include "deepteam/model.hpp"

#include <cmath>
#include <sstream>

#include "deepteam/errors.hpp"

namespace deepteam {

namespace {

void symmetrize_if_close(Matrix& m) {
  if (m.rows() == m.cols() && max_asymmetry(m) <= kSymmetryTolerance) m = symmetrized(m);
}

std::string at_t(const std::string& what, int t) {
  return what + " at t=" + std::to_string(t);
}

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_shape(std::vector<std::string>& out, const std::string& name, const Matrix& m,
                 Eigen::Index rows, Eigen::Index cols, int t) {
  if (m.rows() != rows || m.cols() != cols) {
    out.push_back(at_t(name + " has shape " + shape_of(m) + ", expected " +
                           std::to_string(rows) + "x" + std::to_string(cols),
                       t));
  }
}

// Symmetry plus eigenvalue floor; `strict` asks for positive definiteness.
void check_definite(std::vector<std::string>& out, const std::string& name, const Matrix& m,
                    bool strict, int t) {
  if (m.rows() != m.cols()) return;  // reported as a shape violation
  if (!m.allFinite()) {
    out.push_back(at_t(name + " has non-finite entries", t));
    return;
  }
  if (max_asymmetry(m) > kSymmetryTolerance) {
    out.push_back(at_t(name + " not symmetric", t));
    return;
  }
  const double lo = min_symmetric_eigenvalue(m);
  if (strict && !(lo > kPsdTolerance)) {
    out.push_back(at_t(name + " not positive definite", t));
  } else if (!strict && !(lo >= -kPsdTolerance)) {
    out.push_back(at_t(name + " not positive semi-definite", t));
  }
}

}  // namespace

StageMatrices StageMatrices::zeros(const Dimensions& d) {
  StageMatrices s;
  s.A = s.Abar = Matrix::Zero(d.dx, d.dx);
  s.B = s.Bbar = Matrix::Zero(d.dx, d.du);
  s.E = s.Ebar = Matrix::Zero(d.dx, d.dw);
  s.C = s.Cbar = Matrix::Zero(d.dy, d.dx);
  s.S = s.Sbar = Matrix::Zero(d.dy, d.dv);
  s.Q = s.Qbar = Matrix::Zero(d.dx, d.dx);
  s.R = s.Rbar = Matrix::Zero(d.du, d.du);
  return s;
}

TeamModel assemble_model(const Dimensions& dims, std::vector<StageMatrices> stages,
                         NoiseModel noise, InfluenceVector influence) {
  const auto horizon = static_cast<std::size_t>(std::max(dims.T, 0));
  auto expand = [horizon](auto& schedule) {
    if (schedule.size() == 1 && horizon > 1) schedule.assign(horizon, schedule.front());
  };
  expand(stages);
  expand(noise.Sigma_w);
  expand(noise.Sigma_v);

  for (auto& s : stages) {
    for (Matrix* m : {&s.Q, &s.Qbar, &s.R, &s.Rbar}) symmetrize_if_close(*m);
  }
  symmetrize_if_close(noise.Sigma_x);
  for (auto& m : noise.Sigma_w) symmetrize_if_close(m);
  for (auto& m : noise.Sigma_v) symmetrize_if_close(m);

  return TeamModel{dims, std::move(stages), std::move(noise), std::move(influence)};
}

ValidationReport validate(const TeamModel& model) {
  ValidationReport report;
  auto& out = report.violations;
  const Dimensions& d = model.dims;

  if (d.n < 2) out.push_back("dims.n must be at least 2 (got " + std::to_string(d.n) + ")");
  for (auto [name, value] : {std::pair{"T", d.T}, {"dx", d.dx}, {"du", d.du}, {"dy", d.dy},
                             {"dw", d.dw}, {"dv", d.dv}}) {
    if (value < 1) out.push_back(std::string("dims.") + name + " must be positive");
  }
  if (!out.empty()) return report;

  const auto horizon = static_cast<std::size_t>(d.T);
  if (model.stages.size() != horizon) {
    out.push_back("stages has length " + std::to_string(model.stages.size()) + ", expected T=" +
                  std::to_string(d.T));
  }
  if (model.noise.Sigma_w.size() != horizon)
    out.push_back("noise.Sigma_w schedule length mismatch");
  if (model.noise.Sigma_v.size() != horizon)
    out.push_back("noise.Sigma_v schedule length mismatch");

  for (std::size_t k = 0; k < model.stages.size(); ++k) {
    const int t = static_cast<int>(k) + 1;
    const StageMatrices& s = model.stages[k];
    check_shape(out, "A", s.A, d.dx, d.dx, t);
    check_shape(out, "Abar", s.Abar, d.dx, d.dx, t);
    check_shape(out, "B", s.B, d.dx, d.du, t);
    check_shape(out, "Bbar", s.Bbar, d.dx, d.du, t);
    check_shape(out, "E", s.E, d.dx, d.dw, t);
    check_shape(out, "Ebar", s.Ebar, d.dx, d.dw, t);
    check_shape(out, "C", s.C, d.dy, d.dx, t);
    check_shape(out, "Cbar", s.Cbar, d.dy, d.dx, t);
    check_shape(out, "S", s.S, d.dy, d.dv, t);
    check_shape(out, "Sbar", s.Sbar, d.dy, d.dv, t);
    check_shape(out, "Q", s.Q, d.dx, d.dx, t);
    check_shape(out, "Qbar", s.Qbar, d.dx, d.dx, t);
    check_shape(out, "R", s.R, d.du, d.du, t);
    check_shape(out, "Rbar", s.Rbar, d.du, d.du, t);
    const std::size_t before = out.size();
    for (const Matrix* m : {&s.A, &s.Abar, &s.B, &s.Bbar, &s.E, &s.Ebar, &s.C, &s.Cbar, &s.S,
                            &s.Sbar}) {
      if (!m->allFinite()) {
        out.push_back(at_t("system matrix has non-finite entries", t));
        break;
      }
    }
    if (out.size() != before) continue;
    if (s.Q.rows() == d.dx && s.Qbar.rows() == d.dx && s.Q.cols() == d.dx &&
        s.Qbar.cols() == d.dx) {
      check_definite(out, "Q", s.Q, false, t);
      check_definite(out, "Q+Qbar", s.Q + s.Qbar, false, t);
    }
    if (s.R.rows() == d.du && s.Rbar.rows() == d.du && s.R.cols() == d.du &&
        s.Rbar.cols() == d.du) {
      check_definite(out, "R", s.R, true, t);
      check_definite(out, "R+Rbar", s.R + s.Rbar, true, t);
    }
  }

  const NoiseModel& nz = model.noise;
  if (nz.mu_x.size() != d.dx) out.push_back("noise.mu_x has wrong length");
  if (!nz.mu_x.allFinite()) out.push_back("noise.mu_x has non-finite entries");
  check_shape(out, "Sigma_x", nz.Sigma_x, d.dx, d.dx, 1);
  check_definite(out, "Sigma_x", nz.Sigma_x, false, 1);
  for (std::size_t k = 0; k < nz.Sigma_w.size(); ++k) {
    check_shape(out, "Sigma_w", nz.Sigma_w[k], d.dw, d.dw, static_cast<int>(k) + 1);
    check_definite(out, "Sigma_w", nz.Sigma_w[k], false, static_cast<int>(k) + 1);
  }
  for (std::size_t k = 0; k < nz.Sigma_v.size(); ++k) {
    check_shape(out, "Sigma_v", nz.Sigma_v[k], d.dv, d.dv, static_cast<int>(k) + 1);
    check_definite(out, "Sigma_v", nz.Sigma_v[k], false, static_cast<int>(k) + 1);
  }

  const Vector& alpha = model.influence.alpha;
  if (alpha.size() != d.n) {
    out.push_back("alpha has length " + std::to_string(alpha.size()) + ", expected n=" +
                  std::to_string(d.n) + " (length mismatch)");
  } else {
    for (int i = 0; i < d.n; ++i) {
      if (!std::isfinite(alpha(i)) || alpha(i) == 0.0)
        out.push_back("alpha[" + std::to_string(i) + "] must be finite and non-zero");
    }
    const double norm = alpha.squaredNorm() / d.n;
    if (!(std::abs(norm - 1.0) <= kNormalizationTolerance)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "alpha not normalized: (1/n) sum alpha_i^2 = " << norm;
      out.push_back(msg.str());
    }
  }
  return report;
}

void require_valid(const TeamModel& model) {
  const ValidationReport report = validate(model);
  if (!report.ok()) {
    std::string msg = "invalid model:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw ModelError(msg);
  }
}

InfluenceVector normalize_influence(const Vector& raw) {
  if (raw.size() < 2) throw ModelError("invalid influence: need at least 2 agents");
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw(i)) || raw(i) == 0.0)
      throw ModelError("invalid influence: entry " + std::to_string(i) + " is zero or non-finite");
  }
  const double c = std::sqrt(static_cast<double>(raw.size()) / raw.squaredNorm());
  return {c * raw};
}

Vector deep_aggregate(const Matrix& per_agent, const InfluenceVector& influence) {
  if (per_agent.cols() != influence.size())
    throw ModelError("deep_aggregate: expected " + std::to_string(influence.size()) +
                     " vectors, got " + std::to_string(per_agent.cols()));
  return per_agent * influence.alpha / static_cast<double>(influence.size());
}

GaugeSplit gauge_decompose(const Matrix& per_agent, const InfluenceVector& influence) {
  GaugeSplit split;
  split.bar = deep_aggregate(per_agent, influence);
  split.deltas = per_agent - split.bar * influence.alpha.transpose();
  return split;
}

Matrix gauge_recompose(const Matrix& deltas, const Vector& bar, const InfluenceVector& influence) {
  if (deltas.cols() != influence.size() || deltas.rows() != bar.size())
    throw ModelError("gauge_recompose: shape mismatch");
  return deltas + bar * influence.alpha.transpose();
}

Vector stage_costs(const StageMatrices& stage, const Matrix& x, const Matrix& u,
                   const InfluenceVector& influence) {
  const Vector xbar = deep_aggregate(x, influence);
  const Vector ubar = deep_aggregate(u, influence);
  const double shared = xbar.dot(stage.Qbar * xbar) + ubar.dot(stage.Rbar * ubar);
  const Vector local =
      (x.array() * (stage.Q * x).array()).colwise().sum().transpose() +
      (u.array() * (stage.R * u).array()).colwise().sum().transpose();
  return local.array() + shared;
}

double CostSplit::relative_residual() const {
  const double scale = std::max(std::abs(direct), std::abs(decomposed));
  if (scale == 0.0) return 0.0;
  return std::abs(direct - decomposed) / scale;
}

CostSplit cost_decomposition(const StageMatrices& stage, const Matrix& x, const Matrix& u,
                             const InfluenceVector& influence) {
  const double n = influence.size();
  auto quad_sum = [](const Matrix& w, const Matrix& v) {
    return (v.array() * (w * v).array()).sum();
  };
  const GaugeSplit gx = gauge_decompose(x, influence);
  const GaugeSplit gu = gauge_decompose(u, influence);
  CostSplit split;
  split.direct = (quad_sum(stage.Q, x) + quad_sum(stage.R, u)) / n;
  split.decomposed = gx.bar.dot(stage.Q * gx.bar) + gu.bar.dot(stage.R * gu.bar) +
                     (quad_sum(stage.Q, gx.deltas) + quad_sum(stage.R, gu.deltas)) / n;
  return split;
}

}  // namespace deepteam
