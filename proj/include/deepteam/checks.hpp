#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deepteam/model_io.hpp"
#include "deepteam/oracle.hpp"
#include "deepteam/reference.hpp"
#include "deepteam/sim.hpp"

namespace deepteam {

// Outcome of one machine check. `observed` is the worst deviation (or the
// statistic being bounded) and `tolerance` the bound it was held to.
struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double cost_split_residual = 0.0;  // worst cost-split residual over simulated steps
};

json check_to_json(const CheckResult& r);

struct EquivalenceDeviation {
  double estimate = 0.0;    // agent estimates xhat_{t|t}
  double covariance = 0.0;  // joint error-covariance blocks, pred and post
};

// One full trace against the centralized filter fed with the same data.
EquivalenceDeviation compare_with_centralized(const TeamModel& model, const TeamSolution& solution,
                                              const JointModel& joint, const Trace& trace);

struct OracleSuiteOptions {
  int models = 100;
  std::uint64_t seed = 20240229;
  int cap = kDefaultOracleCap;
  RandomModelOptions model_options{};
};

// Decentralized estimates and joint covariance blocks against the
// centralized filter on random models; actions cycle through the optimal,
// zero, mean-field and a random linear strategy. Returns
// {"oracle-estimates", "oracle-covariance"}.
std::vector<CheckResult> check_oracle_suite(const OracleSuiteOptions& options);

// The same comparison for one given model.
std::vector<CheckResult> check_oracle_model(const TeamModel& model, std::uint64_t seed, int rollouts,
                                            int cap);

// Brute-force search over the linear class never beats the optimal strategy
// by more than 1e-6, and the optimal coefficients are stationary.
std::vector<CheckResult> check_optimality(const TeamModel& model, const std::string& label,
                                          const BruteForceOptions& options = {});

// Estimation errors under common noise are identical across strategies.
CheckResult check_separation(const TeamModel& model, int rollouts, std::uint64_t seed,
                             int workers = 1);

// Sigma_bar at n and 2n (halving) and the log-log slope of its max entry.
std::vector<CheckResult> check_sigma_bar_scaling(const TeamModel& family, std::span<const int> n_list);

// Slopes of the mean-field cost gap and of the mean-square global correction,
// plus positivity of the gap.
std::vector<CheckResult> check_meanfield_gap(const TeamModel& family, std::span<const int> n_list,
                                             int rollouts, std::uint64_t seed, int workers = 1);

// Sampled moment, orthogonality and covariance relations within `z_bound`
// standard errors.
std::vector<CheckResult> check_moment_identities(const TeamModel& model, int samples,
                                                 std::uint64_t seed, double z_bound = 5.0);

CheckResult check_other_agents_inverse(int count, std::uint64_t seed, int max_n = 8);

// |mean sampled cost - exact cost| in standard errors.
CheckResult check_mc_vs_exact(const TeamModel& model, const StrategyKind& strategy,
                              const std::string& label, int rollouts, std::uint64_t seed,
                              int workers = 1, double z_bound = 5.0);

CheckResult check_schedule_roundtrip(const TeamModel& model, const TeamSolution& stored);

}  // namespace deepteam
