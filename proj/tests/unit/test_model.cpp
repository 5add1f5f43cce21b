#include <doctest.h>

#include <cmath>

#include "deepteam/errors.hpp"
#include "deepteam/model.hpp"
#include "deepteam/reference.hpp"
#include "helpers.hpp"

using namespace deepteam;
using dt_test::scalar;

namespace {

bool mentions(const ValidationReport& r, const std::string& needle) {
  for (const auto& v : r.violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("reference model validates cleanly") {
  CHECK(validate(reference_model_s1()).ok());
  CHECK(validate(reference_model_s2()).ok());
}

TEST_CASE("zero R is reported with its time index") {
  TeamModel m = reference_model_s1();
  for (auto& s : m.stages) s.R = scalar(0.0);
  const ValidationReport r = validate(m);
  CHECK_FALSE(r.ok());
  CHECK(mentions(r, "R not positive definite at t=1"));
  CHECK(mentions(r, "R not positive definite at t=2"));
  CHECK_THROWS_AS(require_valid(m), ModelError);
}

TEST_CASE("influence vector longer than the population is a length mismatch") {
  TeamModel m = reference_model_s1();
  m.influence.alpha = Vector::Ones(3);
  CHECK(mentions(validate(m), "length mismatch"));
}

TEST_CASE("unnormalized influence and indefinite Q are rejected") {
  TeamModel m = reference_model_s1();
  m.influence.alpha << 1.0, 2.0;
  CHECK(mentions(validate(m), "normaliz"));
  m = reference_model_s1();
  m.stages[1].Q = scalar(-1.0);
  CHECK(mentions(validate(m), "t=2"));
  m = reference_model_s1();
  m.influence.alpha << std::sqrt(2.0), 0.0;
  CHECK_FALSE(validate(m).ok());
}

TEST_CASE("near-symmetric inputs are symmetrized, asymmetric ones reported") {
  Dimensions d;
  d.dx = 2;
  d.dw = 2;
  StageMatrices s = StageMatrices::zeros(d);
  s.A = s.E = Matrix::Identity(2, 2);
  s.B = Matrix::Ones(2, 1);
  s.C = Matrix::Ones(1, 2);
  s.S = scalar(1.0);
  s.R = scalar(1.0);
  s.Q = Matrix::Identity(2, 2);
  s.Q(0, 1) = 1e-13;
  NoiseModel noise{Vector::Zero(2), Matrix::Identity(2, 2), {Matrix::Identity(2, 2)}, {scalar(1.0)}};
  TeamModel ok = assemble_model(d, {s}, noise, InfluenceVector::homogeneous(2));
  CHECK(ok.stage(1).Q(0, 1) == ok.stage(1).Q(1, 0));
  CHECK(validate(ok).ok());

  s.Q(0, 1) = 1e-6;
  TeamModel bad = assemble_model(d, {s}, noise, InfluenceVector::homogeneous(2));
  CHECK(mentions(validate(bad), "symmetric"));
}

TEST_CASE("constant stages expand over the horizon") {
  const TeamModel m = reference_model_s1(5);
  CHECK(m.stages.size() == 5);
  CHECK(m.noise.Sigma_w.size() == 5);
  CHECK(m.noise.Sigma_v.size() == 5);
  CHECK(m.stage(5).A(0, 0) == 1.0);
}

TEST_CASE("normalize_influence") {
  CHECK(normalize_influence(Vector::Ones(2)).alpha.isApprox(Vector::Ones(2)));
  Vector raw(2);
  raw << 1.0, 2.0;
  const Vector a = normalize_influence(raw).alpha;
  CHECK(a(0) == doctest::Approx(0.632455532).epsilon(1e-9));
  CHECK(a(1) == doctest::Approx(1.264911064).epsilon(1e-9));
  CHECK(a.squaredNorm() / 2.0 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(normalize_influence(Vector::Constant(1, 3.0)), ModelError);
  raw << 1.0, 0.0;
  CHECK_THROWS_AS(normalize_influence(raw), ModelError);
}

TEST_CASE("deep aggregate") {
  const InfluenceVector ones = InfluenceVector::homogeneous(2);
  Matrix v(1, 2);
  v << 2.0, 4.0;
  CHECK(deep_aggregate(v, ones)(0) == 3.0);
  CHECK(deep_aggregate(Matrix::Zero(1, 2), ones)(0) == 0.0);
  Vector raw(2);
  raw << 1.0, 2.0;
  const InfluenceVector skew = normalize_influence(raw);
  CHECK(deep_aggregate(Matrix::Ones(1, 2), skew)(0) == doctest::Approx(0.948683298).epsilon(1e-9));
  CHECK_THROWS(deep_aggregate(Matrix::Ones(1, 3), ones));
}

TEST_CASE("gauge decomposition examples") {
  const InfluenceVector ones = InfluenceVector::homogeneous(2);
  Matrix x(1, 2);
  x << 2.0, 4.0;
  GaugeSplit g = gauge_decompose(x, ones);
  CHECK(g.bar(0) == 3.0);
  CHECK(g.deltas(0, 0) == -1.0);
  CHECK(g.deltas(0, 1) == 1.0);

  x << 5.0, 5.0;
  g = gauge_decompose(x, ones);
  CHECK(g.bar(0) == 5.0);
  CHECK(dt_test::max_abs(g.deltas) == 0.0);

  Matrix d(1, 2);
  d << -1.0, 1.0;
  CHECK(gauge_recompose(d, Vector::Constant(1, 3.0), ones).isApprox(Matrix((Matrix(1, 2) << 2.0, 4.0).finished())));
  CHECK(gauge_recompose(Matrix::Zero(1, 2), Vector::Constant(1, 7.0), ones) == Matrix::Constant(1, 2, 7.0));
}

TEST_CASE("gauge properties on random inputs") {
  SplitMixStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(2, 9);
    const int d = rng.integer(1, 4);
    const InfluenceVector infl = random_influence(rng, n);
    const Matrix v = rng.normal_matrix(d, n, 3.0);
    const GaugeSplit g = gauge_decompose(v, infl);
    CHECK(dt_test::max_abs(g.deltas * infl.alpha) <= 1e-10);
    CHECK(dt_test::max_abs(gauge_recompose(g.deltas, g.bar, infl) - v) <= 1e-12 * (1.0 + dt_test::max_abs(v)));
  }
}

TEST_CASE("orthogonal cost split on random models") {
  SplitMixStream rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const TeamModel m = random_team_model(rng);
    const Matrix x = rng.normal_matrix(m.dims.dx, m.n(), 2.0);
    const Matrix u = rng.normal_matrix(m.dims.du, m.n(), 2.0);
    const CostSplit c = cost_decomposition(m.stage(1), x, u, m.influence);
    CHECK(c.relative_residual() <= 1e-9);
    const Vector per_agent = stage_costs(m.stage(1), x, u, m.influence);
    const StageMatrices& s = m.stage(1);
    const Vector xbar = deep_aggregate(x, m.influence);
    const Vector ubar = deep_aggregate(u, m.influence);
    const double shared = xbar.dot(s.Qbar * xbar) + ubar.dot(s.Rbar * ubar);
    CHECK(per_agent.mean() == doctest::Approx(c.direct + shared).epsilon(1e-12));
  }
}
