#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "deepteam/errors.hpp"
#include "deepteam/strategy.hpp"
#include "helpers.hpp"

using namespace deepteam;
using dt_test::max_abs;
using dt_test::scalar;

TEST_CASE("optimal action on the reference model is -y/4 at t=1") {
  const TeamModel m = reference_model_s1();
  const TeamSolution sol = solve_team(m);
  CHECK(dt_test::entry(sol.riccati.gain_deep(1)) == doctest::Approx(-0.5));
  for (double y1 : {-2.0, 0.7, 3.0}) {
    Matrix y(1, 2);
    y << y1, -1.3;
    auto policy = make_policy(OptimalIDSS{}, m, sol);
    const Matrix u = policy->act(1, y, deep_aggregate(y, m.influence));
    CHECK(u(0, 0) == doctest::Approx(-0.25 * y1).epsilon(1e-14));
  }
}

TEST_CASE("act_optimal examples") {
  const TeamSolution sol = solve_team(reference_model_s2());
  const Vector zero = Vector::Zero(1);
  CHECK(act_optimal(zero, zero, 1.0, sol.riccati, 1)(0) == 0.0);
  CHECK_THROWS_AS(act_optimal(zero, zero, 1.0, sol.riccati, 2), std::out_of_range);
  CHECK_THROWS_AS(act_meanfield(zero, zero, 1.0, sol.riccati, 2), std::out_of_range);

  const TeamSolution plain = solve_team(reference_model_s1());
  const Vector x = Vector::Constant(1, 2.0);
  for (double z : {-4.0, 0.0, 9.0})
    CHECK(act_optimal(x, Vector::Constant(1, z), 1.0, plain.riccati, 1)(0) == doctest::Approx(-1.0));
}

TEST_CASE("aggregated optimal action equals theta_deep z") {
  SplitMixStream rng(41);
  for (int k = 0; k < 40; ++k) {
    const TeamModel m = random_team_model(rng);
    if (m.T() < 2) continue;
    const TeamSolution sol = solve_team(m);
    EstimatorState s = initial_estimate(m);
    const GaugeSplit gy = gauge_decompose(rng.normal_matrix(m.dims.dy, m.n()), m.influence);
    s = correct(m, sol.filters, s, gy.deltas, gy.bar);
    const Matrix xhat = agent_estimates(s, m.influence);
    Matrix u(m.dims.du, m.n());
    for (int i = 0; i < m.n(); ++i) u.col(i) = act_optimal(xhat.col(i), s.z, m.influence[i], sol.riccati, 1);
    const Vector ubar = deep_aggregate(u, m.influence);
    CHECK(max_abs(ubar - sol.riccati.gain_deep(1) * s.z) <= 1e-10 * (1.0 + max_abs(ubar)));
  }
}

TEST_CASE("mean-field trajectory") {
  TeamModel m = reference_model_s1();
  const RiccatiPass r = solve_riccati(m);
  for (const Vector& v : meanfield_trajectory(m, r)) CHECK(v(0) == 0.0);
  m.noise.mu_x(0) = 1.0;
  const std::vector<Vector> traj = meanfield_trajectory(m, r);
  CHECK(traj[0](0) == 1.0);
  CHECK(traj[1](0) == doctest::Approx(0.5).epsilon(1e-15));
  m.noise.mu_x(0) = 3.0;
  CHECK(meanfield_trajectory(m, r)[1](0) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("mean-field policy with no noise and zero mean stays at zero") {
  dt_test::ScalarSpec spec;
  spec.Sx = 0.0;
  spec.Sw = 0.0;
  spec.T = 4;
  const TeamModel m = dt_test::scalar_model(spec);
  const TeamSolution sol = solve_team(m);
  auto policy = make_policy(MeanFieldDecentralized{}, m, sol);
  for (int t = 1; t <= 4; ++t) CHECK(max_abs(policy->act(t, Matrix::Zero(1, 2), Vector::Zero(1))) == 0.0);
}

TEST_CASE("mean-field policy never reads the shared observation") {
  SplitMixStream rng(42);
  const TeamModel m = random_team_model(rng);
  const TeamSolution sol = solve_team(m);
  auto a = make_policy(MeanFieldDecentralized{}, m, sol);
  auto b = make_policy(MeanFieldDecentralized{}, m, sol);
  for (int t = 1; t <= m.T(); ++t) {
    const Matrix y = rng.normal_matrix(m.dims.dy, m.n());
    CHECK(a->act(t, y, deep_aggregate(y, m.influence)) == b->act(t, y, Vector::Constant(m.dims.dy, 1e6)));
  }
}

TEST_CASE("custom linear law built from the gains reproduces the optimal policy") {
  SplitMixStream rng(43);
  for (int k = 0; k < 20; ++k) {
    const TeamModel m = random_team_model(rng);
    const TeamSolution sol = solve_team(m);
    auto opt = make_policy(OptimalIDSS{}, m, sol);
    auto cus = make_policy(CustomLinear::from_optimal(m.dims, sol.riccati), m, sol);
    for (int t = 1; t <= m.T(); ++t) {
      const Matrix y = rng.normal_matrix(m.dims.dy, m.n());
      const Vector ybar = deep_aggregate(y, m.influence);
      const Matrix a = opt->act(t, y, ybar);
      const Matrix b = cus->act(t, y, ybar);
      CHECK(max_abs(a - b) <= 1e-12 * (1.0 + max_abs(a)));
    }
  }
}

TEST_CASE("policies return zero at the horizon and reject out-of-order steps") {
  const TeamModel m = reference_model_s1();
  const TeamSolution sol = solve_team(m);
  for (const StrategyKind& k : {StrategyKind{OptimalIDSS{}}, StrategyKind{MeanFieldDecentralized{}}}) {
    auto p = make_policy(k, m, sol);
    const Matrix y = Matrix::Ones(1, 2);
    p->act(1, y, Vector::Ones(1));
    CHECK(max_abs(p->act(2, y, Vector::Ones(1))) == 0.0);
    auto q = make_policy(k, m, sol);
    CHECK_THROWS_AS(q->act(2, y, Vector::Ones(1)), std::logic_error);
  }
}

TEST_CASE("strategy parsing") {
  const Dimensions d = reference_model_s1().dims;
  CHECK(strategy_name(parse_strategy("optimal", d)) == "optimal");
  CHECK(strategy_name(parse_strategy("meanfield", d)) == "meanfield");
  CHECK(strategy_name(parse_strategy("zero", d)) == "zero");
  CHECK_THROWS_AS(parse_strategy("greedy", d), std::invalid_argument);

  const auto path = std::filesystem::temp_directory_path() / "deepteam_custom.json";
  {
    std::ofstream out(path);
    out << R"({"stages": [{"a": [[-0.5]], "c": [[0.1]]}]})";
  }
  const StrategyKind c = parse_strategy("custom:" + path.string(), d);
  REQUIRE(std::holds_alternative<CustomLinear>(c));
  const CustomLinear& cl = std::get<CustomLinear>(c);
  CHECK(cl.stage(1).a(0, 0) == -0.5);
  CHECK(cl.stage(1).b(0, 0) == 0.0);
  CHECK(cl.stage(1).c(0, 0) == 0.1);
  CHECK(strategy_name(c).rfind("custom", 0) == 0);

  {
    std::ofstream out(path);
    out << R"({"stages": [{"a": [[1, 2]]}]})";
  }
  CHECK_THROWS_AS(load_custom_linear(path, d), ModelError);
  std::filesystem::remove(path);
}
