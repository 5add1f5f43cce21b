#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "deepteam/checks.hpp"
#include "deepteam/sim.hpp"
#include "helpers.hpp"

using namespace deepteam;
using dt_test::max_abs;

namespace {

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("counter-based noise is reproducible and order independent") {
  const Matrix a = standard_normal_block(5, 17, 3, NoiseKind::Process, 2, 4);
  const Matrix b = standard_normal_block(5, 17, 3, NoiseKind::Process, 2, 4);
  CHECK(a == b);
  CHECK(a != standard_normal_block(5, 18, 3, NoiseKind::Process, 2, 4));
  CHECK(a.col(1) == standard_normal_block(5, 17, 3, NoiseKind::Process, 2, 2).col(1));
  CHECK(a != standard_normal_block(5, 17, 3, NoiseKind::Measurement, 2, 4));
}

TEST_CASE("same seed and index give the same rollout") {
  SplitMixStream rng(61);
  const TeamModel m = random_team_model(rng);
  const TeamSolution sol = solve_team(m);
  const RolloutEngine engine(m, sol);
  const Trace a = engine.rollout(OptimalIDSS{}, 9, 4, RecordLevel::FullTrace);
  const Trace b = engine.rollout(OptimalIDSS{}, 9, 4, RecordLevel::FullTrace);
  CHECK(a.total_cost == b.total_cost);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) CHECK(a.steps[k].x == b.steps[k].x);
  CHECK(engine.rollout(OptimalIDSS{}, 10, 4, RecordLevel::CostsOnly).total_cost != a.total_cost);
}

TEST_CASE("results do not depend on the worker count") {
  const TeamModel m = reference_model_s2(4);
  const TeamSolution sol = solve_team(m);
  const RolloutEngine engine(m, sol);
  RolloutConfig c;
  c.seed = 3;
  c.num_rollouts = 50;
  c.workers = 1;
  const std::vector<Trace> one = engine.run(c);
  c.workers = 4;
  const std::vector<Trace> four = engine.run(c);
  REQUIRE(one.size() == four.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].index == k);
    CHECK(one[k].total_cost == four[k].total_cost);
  }
}

TEST_CASE("without state noise or informative observations nothing moves") {
  dt_test::ScalarSpec spec;
  spec.Sx = 0.0;
  spec.Sw = 0.0;
  spec.C = 0.0;
  spec.T = 3;
  const TeamModel m = dt_test::scalar_model(spec);
  const TeamSolution sol = solve_team(m);
  for (const StrategyKind& k : {StrategyKind{OptimalIDSS{}}, StrategyKind{ZeroAction{}}}) {
    const Trace tr = RolloutEngine(m, sol).rollout(k, 1, 0, RecordLevel::FullTrace);
    CHECK(tr.total_cost == 0.0);
    for (const StepRecord& s : tr.steps) CHECK(max_abs(s.x) == 0.0);
  }
}

TEST_CASE("cost estimate") {
  const std::vector<double> two{1.0, 3.0};
  const CostEstimate e = evaluate_cost(two);
  CHECK(e.mean == 2.0);
  CHECK(e.count == 2);
  CHECK(e.has_standard_error);
  CHECK(e.standard_error == doctest::Approx(1.0));
  const std::vector<double> one{4.0};
  const CostEstimate s = evaluate_cost(one);
  CHECK(s.mean == 4.0);
  CHECK_FALSE(s.has_standard_error);
}

TEST_CASE("recorded deep variables and the cost split are consistent") {
  SplitMixStream rng(62);
  for (int k = 0; k < 10; ++k) {
    const TeamModel m = random_team_model(rng);
    const TeamSolution sol = solve_team(m);
    const Trace tr = RolloutEngine(m, sol).rollout(MeanFieldDecentralized{}, 2, k, RecordLevel::FullTrace);
    CHECK(tr.max_cost_split_residual <= 1e-9);
    double total = 0.0;
    for (const StepRecord& s : tr.steps) {
      CHECK(max_abs(s.xbar - deep_aggregate(s.x, m.influence)) <= 1e-12 * (1.0 + max_abs(s.x)));
      CHECK(max_abs(s.ubar - deep_aggregate(s.u, m.influence)) <= 1e-12 * (1.0 + max_abs(s.u)));
      CHECK(max_abs(s.xi - (s.xbar - s.z)) <= 1e-12 * (1.0 + max_abs(s.xbar)));
      total += s.cost.mean();
    }
    CHECK(total == doctest::Approx(tr.total_cost).epsilon(1e-12));
  }
}

TEST_CASE("sampled cost agrees with the exact cost") {
  for (const StrategyKind& k : {StrategyKind{OptimalIDSS{}}, StrategyKind{ZeroAction{}},
                                StrategyKind{MeanFieldDecentralized{}}}) {
    const CheckResult r = check_mc_vs_exact(reference_model_s2(3), k, strategy_name(k), 4000, 11);
    INFO(r.detail);
    CHECK(r.passed);
  }
}

TEST_CASE("moment identities on a small sample") {
  SplitMixStream rng(63);
  RandomModelOptions o;
  o.n_choices = {3};
  o.max_T = 3;
  o.max_dx = 2;
  o.max_dy = 2;
  const TeamModel m = random_team_model(rng, o);
  for (const CheckResult& r : check_moment_identities(m, 30000, 5)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.passed);
  }
}

TEST_CASE("separation of estimation errors from the strategy") {
  SplitMixStream rng(64);
  const CheckResult r = check_separation(random_team_model(rng), 10, 8);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("population family") {
  const TeamModel m = with_population(reference_model_s2(3), 7);
  CHECK(m.n() == 7);
  CHECK(m.influence.alpha == Vector::Ones(7));
  CHECK(validate(m).ok());
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 / v);
  CHECK(loglog_slope(x, y) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("csv output") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);

  const TeamModel m = reference_model_s1();
  const TeamSolution sol = solve_team(m);
  RolloutConfig c;
  c.num_rollouts = 3;
  c.record = RecordLevel::FullTrace;
  const std::vector<Trace> traces = RolloutEngine(m, sol).run(c);
  const auto dir = std::filesystem::temp_directory_path() / "deepteam_csv_test";
  std::filesystem::create_directories(dir);
  write_costs_csv(dir / "costs.csv", traces);
  write_trace_csv(dir / "trace.csv", traces);
  CHECK(first_line(dir / "costs.csv") == "rollout_index,strategy,cost");
  CHECK(first_line(dir / "trace.csv") == "rollout,strategy,t,agent,variable,value");

  std::ifstream in(dir / "costs.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    const double v = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(v == traces[static_cast<std::size_t>(rows)].total_cost);
    ++rows;
  }
  CHECK(rows == 3);
  std::filesystem::remove_all(dir);
}
