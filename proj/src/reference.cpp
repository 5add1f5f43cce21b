#include "deepteam/reference.hpp"

namespace deepteam {

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Matrix random_pd(SplitMixStream& rng, Eigen::Index d, double scale, double floor) {
  const Matrix g = rng.normal_matrix(d, d, scale);
  return g * g.transpose() + floor * Matrix::Identity(d, d);
}

StageMatrices random_stage(SplitMixStream& rng, const Dimensions& d) {
  StageMatrices s;
  s.A = 0.6 * Matrix::Identity(d.dx, d.dx) + rng.normal_matrix(d.dx, d.dx, 0.25);
  s.Abar = rng.normal_matrix(d.dx, d.dx, 0.2);
  s.B = rng.normal_matrix(d.dx, d.du, 0.6);
  s.Bbar = rng.normal_matrix(d.dx, d.du, 0.3);
  s.E = Matrix::Identity(d.dx, d.dw) + rng.normal_matrix(d.dx, d.dw, 0.3);
  s.Ebar = rng.normal_matrix(d.dx, d.dw, 0.2);
  s.C = rng.normal_matrix(d.dy, d.dx, 0.8);
  s.Cbar = rng.normal_matrix(d.dy, d.dx, 0.4);
  s.S = Matrix::Identity(d.dy, d.dv) + rng.normal_matrix(d.dy, d.dv, 0.3);
  s.Sbar = rng.normal_matrix(d.dy, d.dv, 0.2);
  const Matrix gq = rng.normal_matrix(d.dx, d.dx, 0.7);
  s.Q = gq * gq.transpose();
  const Matrix hq = rng.normal_matrix(d.dx, d.dx, 0.4);
  s.Qbar = hq * hq.transpose();
  s.R = random_pd(rng, d.du, 0.5, 0.5);
  const Matrix hr = rng.normal_matrix(d.du, d.du, 0.3);
  s.Rbar = hr * hr.transpose();
  return s;
}

}  // namespace

TeamModel reference_model_s1(int T) {
  Dimensions d;
  d.n = 2;
  d.T = T;
  StageMatrices s = StageMatrices::zeros(d);
  s.A = s.B = s.E = s.C = s.S = s.Q = s.R = scalar(1.0);
  NoiseModel noise{Vector::Zero(1), scalar(1.0), {scalar(1.0)}, {scalar(1.0)}};
  return assemble_model(d, {s}, std::move(noise), InfluenceVector::homogeneous(2));
}

TeamModel reference_model_s2(int T) {
  TeamModel m = reference_model_s1(T);
  for (StageMatrices& s : m.stages) {
    s.Abar = scalar(1.0);
    s.Qbar = scalar(1.0);
  }
  return m;
}

InfluenceVector random_influence(SplitMixStream& rng, int n) {
  Vector raw(n);
  for (int i = 0; i < n; ++i) {
    raw(i) = rng.uniform(0.3, 1.7);
    if (rng.uniform() < 0.2) raw(i) = -raw(i);
  }
  return normalize_influence(raw);
}

TeamModel random_team_model(SplitMixStream& rng, const RandomModelOptions& o) {
  Dimensions d;
  d.n = o.n_choices.at(static_cast<std::size_t>(rng.integer(0, static_cast<int>(o.n_choices.size()) - 1)));
  d.T = rng.integer(1, o.max_T);
  d.dx = rng.integer(1, o.max_dx);
  d.dy = rng.integer(1, o.max_dy);
  d.du = rng.integer(1, o.max_du);
  d.dw = rng.integer(1, d.dx + 1);
  d.dv = rng.integer(d.dy, d.dy + 1);

  std::vector<StageMatrices> stages;
  NoiseModel noise;
  noise.mu_x = rng.normal_matrix(d.dx, 1);
  noise.Sigma_x = random_pd(rng, d.dx, 0.6, 0.2);
  const bool varying = rng.uniform() < 0.5;
  for (int t = 1; t <= (varying ? d.T : 1); ++t) {
    stages.push_back(random_stage(rng, d));
    noise.Sigma_w.push_back(random_pd(rng, d.dw, 0.5, 0.1));
    noise.Sigma_v.push_back(random_pd(rng, d.dv, 0.5, 0.2));
  }
  TeamModel m = assemble_model(d, std::move(stages), std::move(noise), random_influence(rng, d.n));
  require_valid(m);
  return m;
}

CustomLinear random_custom_linear(SplitMixStream& rng, const Dimensions& dims, double scale) {
  CustomLinear c = CustomLinear::zeros(dims);
  for (CustomStage& s : c.stages) {
    s.a = rng.normal_matrix(dims.du, dims.dx, scale);
    s.b = rng.normal_matrix(dims.du, dims.dx, scale);
    s.c = rng.normal_matrix(dims.du, dims.dy, scale);
    s.d = rng.normal_matrix(dims.du, dims.dy, scale);
  }
  return c;
}

}  // namespace deepteam
