#include <doctest.h>

#include <cmath>

#include "deepteam/checks.hpp"
#include "deepteam/oracle.hpp"
#include "helpers.hpp"

using namespace deepteam;
using dt_test::max_abs;

TEST_CASE("joint transition for two coupled scalar agents") {
  dt_test::ScalarSpec spec;
  spec.Abar = 1.0;
  const JointModel j = build_joint_model(dt_test::scalar_model(spec));
  Matrix expected(2, 2);
  expected << 1.5, 0.5, 0.5, 1.5;
  CHECK(max_abs(j.stage(1).A - expected) <= 1e-15);
  CHECK(j.mean0.size() == 2);
}

TEST_CASE("decoupled models give block-diagonal joint matrices") {
  SplitMixStream rng(51);
  TeamModel m = random_team_model(rng);
  for (auto& s : m.stages) {
    s.Abar.setZero();
    s.Bbar.setZero();
    s.Cbar.setZero();
    s.Ebar.setZero();
    s.Sbar.setZero();
  }
  const JointModel j = build_joint_model(m);
  const int dx = m.dims.dx;
  for (int a = 0; a < m.n(); ++a)
    for (int b = 0; b < m.n(); ++b)
      if (a != b) CHECK(max_abs(j.stage(1).A.block(a * dx, b * dx, dx, dx)) == 0.0);
}

TEST_CASE("joint matrices reproduce the per-agent dynamics") {
  SplitMixStream rng(52);
  for (int k = 0; k < 30; ++k) {
    const TeamModel m = random_team_model(rng);
    const JointModel j = build_joint_model(m);
    const StageMatrices& s = m.stage(1);
    const Matrix x = rng.normal_matrix(m.dims.dx, m.n());
    const Matrix u = rng.normal_matrix(m.dims.du, m.n());
    const Matrix w = rng.normal_matrix(m.dims.dw, m.n());
    const Vector xbar = deep_aggregate(x, m.influence);
    const Vector ubar = deep_aggregate(u, m.influence);
    const Vector wbar = deep_aggregate(w, m.influence);
    const Matrix next = s.A * x + s.B * u + s.E * w +
                        (s.Abar * xbar + s.Bbar * ubar + s.Ebar * wbar) * m.influence.alpha.transpose();
    const Vector joint = j.stage(1).A * stack_columns(x) + j.stage(1).B * stack_columns(u) +
                         j.stage(1).E * stack_columns(w);
    CHECK(max_abs(unstack_columns(joint, m.dims.dx) - next) <= 1e-12 * (1.0 + max_abs(next)));

    const double direct = stage_costs(s, x, u, m.influence).mean();
    const Vector xs = stack_columns(x);
    const Vector us = stack_columns(u);
    CHECK(xs.dot(j.stage(1).Q * xs) + us.dot(j.stage(1).R * us) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("size cap") {
  CHECK_THROWS_AS(build_joint_model(with_population(reference_model_s1(), 65)), std::length_error);
  CHECK_NOTHROW(build_joint_model(with_population(reference_model_s1(), 65), 65));
}

TEST_CASE("centralized filter on the reference model at t=1") {
  const TeamModel m = reference_model_s1();
  const JointModel j = build_joint_model(m);
  const CentralizedEstimates c =
      centralized_filter(j, {Vector::Ones(2), Vector::Ones(2)}, {Vector::Zero(2)});
  CHECK(c.cov_post[0](0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(c.cov_post[0](0, 1)) <= 1e-15);
  CHECK(c.mean_post[0](0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("decoupled models keep the joint covariance block-diagonal") {
  SplitMixStream rng(53);
  TeamModel m = random_team_model(rng);
  for (auto& s : m.stages) {
    s.Abar.setZero();
    s.Cbar.setZero();
    s.Ebar.setZero();
    s.Sbar.setZero();
  }
  m.influence = InfluenceVector::homogeneous(m.n());
  const JointModel j = build_joint_model(m);
  std::vector<Vector> ys(static_cast<std::size_t>(m.T()), Vector::Zero(m.n() * m.dims.dy));
  std::vector<Vector> us(static_cast<std::size_t>(m.T()), Vector::Zero(m.n() * m.dims.du));
  const CentralizedEstimates c = centralized_filter(j, ys, us);
  const int dx = m.dims.dx;
  for (const Matrix& p : c.cov_post)
    CHECK(max_abs(p.block(0, dx, dx, dx)) <= 1e-12 * (1.0 + max_abs(p)));
}

TEST_CASE("decentralized estimates equal the centralized filter") {
  OracleSuiteOptions o;
  o.models = 40;
  o.seed = 7;
  for (const CheckResult& r : check_oracle_suite(o)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.passed);
    CHECK(r.observed <= 1e-9);
  }
}

TEST_CASE("exact cost of doing nothing on the reference model") {
  const TeamModel one = reference_model_s1(1);
  CHECK(exact_cost(one, solve_team(one), ZeroAction{}) == doctest::Approx(1.0).epsilon(1e-14));
  const TeamModel two = reference_model_s1(2);
  CHECK(exact_cost(two, solve_team(two), ZeroAction{}) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("no state cost means zero cost for zero action") {
  SplitMixStream rng(54);
  TeamModel m = random_team_model(rng);
  for (auto& s : m.stages) {
    s.Q.setZero();
    s.Qbar.setZero();
  }
  CHECK(exact_cost(m, solve_team(m), ZeroAction{}) == 0.0);
}

TEST_CASE("optimal strategy beats the alternatives exactly") {
  SplitMixStream rng(55);
  for (int k = 0; k < 20; ++k) {
    const TeamModel m = random_team_model(rng);
    const TeamSolution sol = solve_team(m);
    const double opt = exact_cost(m, sol, OptimalIDSS{});
    CHECK(opt <= exact_cost(m, sol, ZeroAction{}) + 1e-9 * std::abs(opt));
    CHECK(opt <= exact_cost(m, sol, MeanFieldDecentralized{}) + 1e-9 * std::abs(opt));
    CHECK(opt <= exact_cost(m, sol, random_custom_linear(rng, m.dims)) + 1e-9 * std::abs(opt));
    CHECK(exact_cost(m, sol, CustomLinear::from_optimal(m.dims, sol.riccati)) ==
          doctest::Approx(opt).epsilon(1e-12));
  }
}

TEST_CASE("parameter vector round trip") {
  SplitMixStream rng(56);
  const TeamModel m = random_team_model(rng);
  const CustomLinear c = random_custom_linear(rng, m.dims);
  const CustomLinear back = custom_linear_from_parameters(m.dims, custom_linear_parameters(c));
  for (int t = 1; t < m.T(); ++t) {
    CHECK(back.stage(t).a == c.stage(t).a);
    CHECK(back.stage(t).d == c.stage(t).d);
  }
  CHECK_THROWS_AS(custom_linear_from_parameters(m.dims, Vector::Zero(custom_linear_parameters(c).size() + 1)),
                  std::invalid_argument);
}

TEST_CASE("finite-difference gradient of a quadratic") {
  const auto f = [](const Vector& x) { return 3.0 * x(0) * x(0) + x(0) * x(1) - 2.0 * x(1); };
  Vector x(2);
  x << 1.0, -2.0;
  const Vector g = finite_difference_gradient(f, x);
  CHECK(g(0) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(g(1) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("brute force recovers the optimal cost on the tiny models") {
  for (const TeamModel& m : {reference_model_s1(2), reference_model_s2(2)}) {
    const TeamSolution sol = solve_team(m);
    const double opt = exact_cost(m, sol, OptimalIDSS{});
    const BruteForceResult r = brute_force_optimize(m, sol, custom_linear_class(m.dims));
    CHECK(r.finite_starts >= 16);
    CHECK(r.best_cost >= opt - 1e-6);
    CHECK(r.best_cost <= opt + 1e-6);
  }
}

TEST_CASE("singleton class returns its member's cost") {
  const TeamModel m = reference_model_s2(2);
  const TeamSolution sol = solve_team(m);
  const BruteForceResult r = brute_force_optimize(m, sol, singleton_class(ZeroAction{}));
  CHECK(r.best_cost == doctest::Approx(exact_cost(m, sol, ZeroAction{})).epsilon(1e-15));
  CHECK(strategy_name(r.best) == "zero");
}

TEST_CASE("unstable starts are excluded") {
  const TeamModel m = reference_model_s1(2);
  const TeamSolution sol = solve_team(m);
  StrategyClass cls = custom_linear_class(m.dims);
  const auto inner = cls.make;
  cls.make = [inner](const Vector& p) {
    Vector q = p;
    if (p.norm() > 2.0) q(0) = std::numeric_limits<double>::quiet_NaN();
    return inner(q);
  };
  BruteForceOptions o;
  o.start_scale = 3.0;
  const BruteForceResult r = brute_force_optimize(m, sol, cls, o);
  CHECK(r.excluded_starts > 0);
  CHECK(r.finite_starts + r.excluded_starts == o.starts);
  CHECK(std::isfinite(r.best_cost));
}
