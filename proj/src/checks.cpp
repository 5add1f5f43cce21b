#include "deepteam/checks.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "deepteam/errors.hpp"
#include "deepteam/parallel.hpp"
#include "deepteam/schedule_io.hpp"

namespace deepteam {

namespace {

constexpr double kTiny = 1e-300;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

CheckResult bounded(std::string name, double observed, double tolerance, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.observed = observed;
  r.tolerance = tolerance;
  r.passed = std::isfinite(observed) && observed <= tolerance;
  r.detail = std::move(detail);
  return r;
}

Matrix expected_joint_covariance(const InfluenceVector& infl, const Matrix& local,
                                 const Matrix& global) {
  const Vector& a = infl.alpha;
  const auto n = a.size();
  const Matrix aa = a * a.transpose();
  const Matrix pi = Matrix::Identity(n, n) - aa / static_cast<double>(n);
  return kron(pi, local) + kron(aa, global);
}

// Welford accumulator of scalar samples.
struct Running {
  long long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double standard_error() const {
    if (count < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
};

struct MatrixIdentity {
  std::string family;
  std::string label;
  Matrix expected;
  std::vector<Running> entries;
  bool nonzero = false;  // also require the largest expected entry to differ from 0
};

// Identities are registered in the order the sampler first reports them, so
// every sample must report the same sequence.
class IdentityBank {
 public:
  void begin_sample() { cursor_ = 0; }

  void add(const std::string& family, const std::string& label, const Matrix& sample,
           const Matrix& expected, bool nonzero = false) {
    if (cursor_ == items_.size()) {
      MatrixIdentity m{family, label, expected, std::vector<Running>(sample.size()), nonzero};
      items_.push_back(std::move(m));
    }
    MatrixIdentity& m = items_[cursor_++];
    for (Eigen::Index k = 0; k < sample.size(); ++k) m.entries[k].add(sample.data()[k]);
  }

  std::vector<CheckResult> results(const std::vector<std::string>& families, double z_bound) const {
    std::vector<CheckResult> out;
    for (const std::string& fam : families) {
      double worst = 0.0;
      std::string where;
      double weakest_signal = std::numeric_limits<double>::infinity();
      std::string weak_where;
      int count = 0;
      for (const MatrixIdentity& m : items_) {
        if (m.family != fam) continue;
        Eigen::Index strongest = 0;
        for (Eigen::Index k = 0; k < m.expected.size(); ++k) {
          const Running& r = m.entries[static_cast<std::size_t>(k)];
          const double c = m.expected.data()[k];
          const double se = r.standard_error();
          const double diff = std::abs(r.mean - c);
          const double z = se > 0.0 ? diff / se
                                    : (diff <= 1e-12 * (1.0 + std::abs(c))
                                           ? 0.0
                                           : std::numeric_limits<double>::infinity());
          ++count;
          if (z > worst) {
            worst = z;
            where = m.label + "[" + std::to_string(k) + "]";
          }
          if (std::abs(c) > std::abs(m.expected.data()[strongest])) strongest = k;
        }
        if (m.nonzero && m.expected.size() > 0) {
          const Running& r = m.entries[static_cast<std::size_t>(strongest)];
          const double se = r.standard_error();
          const double signal = se > 0.0 ? std::abs(r.mean) / se : 0.0;
          if (signal < weakest_signal) {
            weakest_signal = signal;
            weak_where = m.label;
          }
        }
      }
      CheckResult r = bounded(fam, worst, z_bound,
                              std::to_string(count) + " entries, worst " + where + " at " +
                                  fmt(worst) + " SE");
      if (std::isfinite(weakest_signal)) {
        r.detail += "; weakest nonzero signal " + weak_where + " at " + fmt(weakest_signal) + " SE";
        if (weakest_signal < z_bound) r.passed = false;
      }
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  std::vector<MatrixIdentity> items_;
  std::size_t cursor_ = 0;
};

}  // namespace

json check_to_json(const CheckResult& r) {
  return {{"name", r.name},           {"passed", r.passed}, {"observed", r.observed},
          {"tolerance", r.tolerance}, {"detail", r.detail}, {"cost_split_residual", r.cost_split_residual}};
}

EquivalenceDeviation compare_with_centralized(const TeamModel& model, const TeamSolution& solution,
                                              const JointModel& joint, const Trace& trace) {
  std::vector<Vector> ys;
  std::vector<Vector> us;
  for (const StepRecord& st : trace.steps) {
    ys.push_back(stack_columns(st.y));
    if (st.t < model.T()) us.push_back(stack_columns(st.u));
  }
  const CentralizedEstimates cent = centralized_filter(joint, ys, us);

  EquivalenceDeviation dev;
  for (const StepRecord& st : trace.steps) {
    const std::size_t k = static_cast<std::size_t>(st.t - 1);
    const Matrix xhat = unstack_columns(cent.mean_post[k], model.dims.dx);
    dev.estimate = std::max(dev.estimate, relative_deviation(st.xhat, xhat));
    const Matrix post = expected_joint_covariance(model.influence, solution.filters.local.post(st.t),
                                                  solution.filters.global.post(st.t));
    const Matrix pred = expected_joint_covariance(model.influence, solution.filters.local.pred(st.t),
                                                  solution.filters.global.pred(st.t));
    dev.covariance = std::max({dev.covariance, relative_deviation(cent.cov_post[k], post, kTiny),
                               relative_deviation(cent.cov_pred[k], pred, kTiny)});
  }
  return dev;
}

std::vector<CheckResult> check_oracle_suite(const OracleSuiteOptions& o) {
  SplitMixStream rng(o.seed);
  double est = 0.0;
  double cov = 0.0;
  double split = 0.0;
  std::string worst_est;
  std::string worst_cov;
  for (int k = 0; k < o.models; ++k) {
    const TeamModel model = random_team_model(rng, o.model_options);
    const TeamSolution solution = solve_team(model);
    const JointModel joint = build_joint_model(model, o.cap);
    StrategyKind strategy;
    switch (k % 4) {
      case 0: strategy = OptimalIDSS{}; break;
      case 1: strategy = random_custom_linear(rng, model.dims); break;
      case 2: strategy = ZeroAction{}; break;
      default: strategy = MeanFieldDecentralized{}; break;
    }
    const RolloutEngine engine(model, solution);
    const Trace trace = engine.rollout(strategy, o.seed, static_cast<std::uint64_t>(k),
                                       RecordLevel::FullTrace);
    split = std::max(split, trace.max_cost_split_residual);
    const EquivalenceDeviation dev = compare_with_centralized(model, solution, joint, trace);
    const std::string tag = "model " + std::to_string(k) + " (n=" + std::to_string(model.n()) +
                            ", T=" + std::to_string(model.T()) + ", " + strategy_name(strategy) + ")";
    if (dev.estimate >= est) {
      est = dev.estimate;
      worst_est = tag;
    }
    if (dev.covariance >= cov) {
      cov = dev.covariance;
      worst_cov = tag;
    }
  }
  const std::string suffix = std::to_string(o.models) + " random models, worst ";
  std::vector<CheckResult> out{bounded("oracle-estimates", est, 1e-9, suffix + worst_est),
                               bounded("oracle-covariance", cov, 1e-9, suffix + worst_cov)};
  for (auto& r : out) r.cost_split_residual = split;
  return out;
}

std::vector<CheckResult> check_oracle_model(const TeamModel& model, std::uint64_t seed, int rollouts,
                                            int cap) {
  const TeamSolution solution = solve_team(model);
  const JointModel joint = build_joint_model(model, cap);
  const RolloutEngine engine(model, solution);
  EquivalenceDeviation worst;
  double split = 0.0;
  const StrategyKind strategies[] = {OptimalIDSS{}, ZeroAction{}, MeanFieldDecentralized{}};
  for (int k = 0; k < rollouts; ++k) {
    const Trace trace =
        engine.rollout(strategies[k % 3], seed, static_cast<std::uint64_t>(k), RecordLevel::FullTrace);
    split = std::max(split, trace.max_cost_split_residual);
    const EquivalenceDeviation d = compare_with_centralized(model, solution, joint, trace);
    worst.estimate = std::max(worst.estimate, d.estimate);
    worst.covariance = std::max(worst.covariance, d.covariance);
  }
  const std::string detail = std::to_string(rollouts) + " rollouts on the supplied model";
  std::vector<CheckResult> out{bounded("model-oracle-estimates", worst.estimate, 1e-9, detail),
                               bounded("model-oracle-covariance", worst.covariance, 1e-9, detail)};
  for (auto& r : out) r.cost_split_residual = split;
  return out;
}

std::vector<CheckResult> check_optimality(const TeamModel& model, const std::string& label,
                                          const BruteForceOptions& options) {
  const TeamSolution solution = solve_team(model);
  const JointModel joint = build_joint_model(model, options.cap);
  const double j_opt = exact_cost(joint, build_controller(model, solution, OptimalIDSS{}));
  const StrategyClass cls = custom_linear_class(model.dims);
  const BruteForceResult best = brute_force_optimize(model, solution, cls, options);

  const double undercut = j_opt - best.best_cost;
  CheckResult gap = bounded("optimality-" + label, undercut, 1e-6,
                            "J_opt=" + format_double(j_opt) + " brute=" + format_double(best.best_cost) +
                                " over " + std::to_string(best.finite_starts) + " starts");

  const auto objective = [&](const Vector& p) {
    return exact_cost(joint, build_controller(model, solution, cls.make(p)));
  };
  const Vector at = custom_linear_parameters(CustomLinear::from_optimal(model.dims, solution.riccati));
  const double gnorm = finite_difference_gradient(objective, at, options.fd_step).norm();
  const double bound = 1e-5 * (1.0 + std::abs(j_opt));
  CheckResult stat = bounded("stationarity-" + label, gnorm, bound, "gradient norm at the optimal coefficients");
  return {gap, stat};
}

CheckResult check_separation(const TeamModel& model, int rollouts, std::uint64_t seed, int workers) {
  const TeamSolution solution = solve_team(model);
  const RolloutEngine engine(model, solution);
  SplitMixStream rng(seed ^ 0x5e9a7a7e5ull);
  const CustomLinear custom = random_custom_linear(rng, model.dims);
  std::vector<double> worst(static_cast<std::size_t>(rollouts), 0.0);
  std::vector<double> split(static_cast<std::size_t>(rollouts), 0.0);
  parallel_for(worst.size(), workers, [&](std::size_t k) {
    const Trace ref = engine.rollout(OptimalIDSS{}, seed, k, RecordLevel::FullTrace);
    double w = 0.0;
    double s = ref.max_cost_split_residual;
    for (const StrategyKind& other : {StrategyKind{ZeroAction{}}, StrategyKind{custom}}) {
      const Trace tr = engine.rollout(other, seed, k, RecordLevel::FullTrace);
      s = std::max(s, tr.max_cost_split_residual);
      for (std::size_t t = 0; t < tr.steps.size(); ++t) {
        w = std::max(w, relative_deviation(tr.steps[t].e, ref.steps[t].e));
        w = std::max(w, relative_deviation(tr.steps[t].xi, ref.steps[t].xi));
        const Matrix err = tr.steps[t].x - tr.steps[t].xhat;
        const Matrix ref_err = ref.steps[t].x - ref.steps[t].xhat;
        w = std::max(w, relative_deviation(err, ref_err));
      }
    }
    worst[k] = w;
    split[k] = s;
  });
  CheckResult r = bounded("separation", *std::max_element(worst.begin(), worst.end()), 1e-10,
                          std::to_string(rollouts) + " rollouts, optimal vs zero vs random linear");
  r.cost_split_residual = *std::max_element(split.begin(), split.end());
  return r;
}

std::vector<CheckResult> check_sigma_bar_scaling(const TeamModel& family, std::span<const int> n_list) {
  std::vector<double> ns;
  std::vector<double> peaks;
  std::vector<GlobalFilterSchedule> schedules;
  for (int n : n_list) {
    schedules.push_back(precompute_global(with_population(family, n)));
    ns.push_back(n);
    double peak = 0.0;
    for (const Matrix& m : schedules.back().Sigma_post) peak = std::max(peak, m.cwiseAbs().maxCoeff());
    peaks.push_back(peak);
  }
  double halving = 0.0;
  double gain = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < n_list.size(); ++a)
    for (std::size_t b = 0; b < n_list.size(); ++b) {
      if (n_list[b] != 2 * n_list[a]) continue;
      ++pairs;
      for (int t = 1; t <= family.T(); ++t) {
        halving = std::max({halving,
                            relative_deviation(schedules[b].post(t), schedules[a].post(t) / 2.0, kTiny),
                            relative_deviation(schedules[b].pred(t), schedules[a].pred(t) / 2.0, kTiny)});
        gain = std::max(gain, relative_deviation(schedules[b].L(t), schedules[a].L(t), kTiny));
      }
    }
  CheckResult half = bounded("sigma-bar-halving", halving, 1e-12,
                             std::to_string(pairs) + " (n, 2n) pairs; gain deviation " + fmt(gain));
  if (pairs == 0) half.passed = false;
  const double slope = loglog_slope(ns, peaks);
  CheckResult fit = bounded("sigma-bar-slope", std::abs(slope + 1.0), 1e-6, "slope " + format_double(slope));
  return {half, fit};
}

std::vector<CheckResult> check_meanfield_gap(const TeamModel& family, std::span<const int> n_list,
                                             int rollouts, std::uint64_t seed, int workers) {
  RolloutConfig cfg;
  cfg.seed = seed;
  cfg.num_rollouts = rollouts;
  cfg.workers = workers;
  const ConvergenceTable table = convergence_experiment(family, n_list, cfg);

  std::ostringstream rows;
  bool positive = true;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const ConvergenceRow& r = table.rows[k];
    rows << (k ? "; " : "") << "n=" << r.n << " gap=" << fmt(r.cost_gap) << "+-" << fmt(r.cost_gap_se);
    const bool clear = r.cost_gap >= 3.0 * r.cost_gap_se;
    const bool last = k + 1 == table.rows.size();
    if (!clear && !(last && std::abs(r.cost_gap) < 3.0 * r.cost_gap_se)) positive = false;
  }
  CheckResult slope = bounded("meanfield-gap-slope", std::abs(table.slope_cost_gap + 1.0), 0.3,
                              "slope " + format_double(table.slope_cost_gap) + "; " + rows.str());
  CheckResult pos;
  pos.name = "meanfield-gap-positive";
  pos.passed = positive;
  pos.observed = positive ? 0.0 : 1.0;
  pos.tolerance = 0.0;
  pos.detail = "gap >= 3 SE at every n, or indistinguishable from 0 at the largest n";
  CheckResult corr = bounded("global-correction-slope", std::abs(table.slope_ms_correction + 1.0), 0.15,
                             "slope " + format_double(table.slope_ms_correction));
  for (CheckResult* r : {&slope, &pos, &corr}) r->cost_split_residual = table.max_cost_split_residual;
  return {slope, pos, corr};
}

std::vector<CheckResult> check_moment_identities(const TeamModel& model, int samples,
                                                 std::uint64_t seed, double z_bound) {
  const TeamSolution solution = solve_team(model);
  const RolloutEngine engine(model, solution);
  const InfluenceVector& infl = model.influence;
  const Vector& alpha = infl.alpha;
  const int n = model.n();
  const double nn = static_cast<double>(n);
  if (n < 2) throw ModelError("moment identities need at least two agents");
  const int i = 0;
  const int j = 1;
  const double ai = alpha(i);
  const double aj = alpha(j);

  IdentityBank bank;
  double split = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Trace tr = engine.rollout(OptimalIDSS{}, seed, static_cast<std::uint64_t>(k), RecordLevel::FullTrace);
    split = std::max(split, tr.max_cost_split_residual);
    bank.begin_sample();
    for (const StepRecord& st : tr.steps) {
      const int t = st.t;
      const std::string at = "@t=" + std::to_string(t);
      const StageMatrices& s = model.stage(t);

      // primitive variables
      auto primitive = [&](const std::string& name, const Matrix& raw, const Matrix& sigma) {
        const GaugeSplit g = gauge_decompose(raw, infl);
        const Matrix zero = Matrix::Zero(sigma.rows(), sigma.cols());
        const std::string tag = name + at;
        bank.add("primitive-moments", "cross-delta " + tag, g.deltas.col(i) * g.deltas.col(j).transpose(),
                 -ai * aj / nn * sigma);
        bank.add("primitive-moments", "agent-aggregate " + tag, raw.col(i) * g.bar.transpose(), ai / nn * sigma);
        bank.add("primitive-moments", "own-delta " + tag, g.deltas.col(i) * g.deltas.col(i).transpose(),
                 (1.0 - ai * ai / nn) * sigma);
        bank.add("primitive-moments", "delta-aggregate " + tag, g.deltas.col(i) * g.bar.transpose(), zero);
      };
      if (t == 1) {
        Matrix centered = st.x;
        centered.colwise() -= model.noise.mu_x;
        primitive("x", centered, model.noise.Sigma_x);
      }
      if (t < model.T()) primitive("w", st.w, model.Sigma_w(t));
      primitive("v", st.v, model.Sigma_v(t));

      const InnovationRecord& p = st.innovation;
      const Matrix dx = st.x - st.xbar * alpha.transpose();
      const Matrix err = dx - st.dxhat_pred;
      const Matrix& Sp = solution.filters.local.pred(t);
      const Matrix& Sbp = solution.filters.global.pred(t);
      const Matrix M = s.C * Sp * s.C.transpose() + s.S * model.Sigma_v(t) * s.S.transpose();
      const Matrix Mbar = s.C_deep() * Sbp * s.C_deep().transpose() +
                          s.S_deep() * model.Sigma_v(t) * s.S_deep().transpose() / nn;
      const Matrix zy = Matrix::Zero(model.dims.dy, model.dims.dy);
      const Matrix zxy = Matrix::Zero(model.dims.dx, model.dims.dy);

      bank.add("innovation-orthogonality", "dp-pbar" + at, p.dp.col(i) * p.pbar.transpose(), zy);
      bank.add("innovation-orthogonality", "dp-xbar" + at, p.dp.col(i) * st.xbar.transpose(), zxy.transpose());
      bank.add("innovation-orthogonality", "dx-pbar" + at, dx.col(i) * p.pbar.transpose(), zxy);

      bank.add("error-covariance-sampled", "own" + at, err.col(i) * err.col(i).transpose(),
               (1.0 - ai * ai / nn) * Sp);
      bank.add("error-covariance-sampled", "cross" + at, err.col(i) * err.col(j).transpose(), -ai * aj / nn * Sp);
      bank.add("error-covariance-sampled", "state-other-innovation" + at, dx.col(i) * p.dp.col(j).transpose(),
               -ai * aj / nn * Sp * s.C.transpose());
      bank.add("error-covariance-sampled", "other-innovations" + at,
               p.dp.col(j) * p.dp.col(j).transpose(), (1.0 - aj * aj / nn) * M);

      const Matrix split_sample = p.p.col(i) * p.p.col(i).transpose() - p.dp.col(i) * p.dp.col(i).transpose() -
                                  ai * ai * p.pbar * p.pbar.transpose();
      bank.add("innovation-covariance-split", "split" + at, split_sample, zy);
      bank.add("innovation-covariance-split", "total" + at, p.p.col(i) * p.p.col(i).transpose(),
               (1.0 - ai * ai / nn) * M + ai * ai * Mbar);

      bank.add("innovation-correlations", "dp-dp" + at, p.dp.col(i) * p.dp.col(j).transpose(),
               -ai * aj / nn * M, true);
      bank.add("innovation-correlations", "p-pbar" + at, p.p.col(i) * p.pbar.transpose(), ai * Mbar, true);
      bank.add("innovation-correlations", "p-p" + at, p.p.col(i) * p.p.col(j).transpose(),
               -ai * aj / nn * M + ai * aj * Mbar, true);
    }
  }
  std::vector<CheckResult> out =
      bank.results({"primitive-moments", "innovation-orthogonality", "error-covariance-sampled",
                    "innovation-covariance-split", "innovation-correlations"},
                   z_bound);
  for (auto& r : out) r.cost_split_residual = split;
  return out;
}

CheckResult check_other_agents_inverse(int count, std::uint64_t seed, int max_n) {
  SplitMixStream rng(seed);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const int n = rng.integer(2, max_n);
    const InfluenceVector infl = random_influence(rng, n);
    for (int i = 0; i < n; ++i) {
      const Vector a = other_agents(infl, i);
      const Matrix direct = Matrix::Identity(n - 1, n - 1) - a * a.transpose() / static_cast<double>(n);
      const Matrix product = direct * other_agents_inverse(infl, i);
      worst = std::max(worst, (product - Matrix::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff());
    }
  }
  return bounded("other-agents-inverse", worst, 1e-10,
                 std::to_string(count) + " influence vectors, n <= " + std::to_string(max_n));
}

CheckResult check_mc_vs_exact(const TeamModel& model, const StrategyKind& strategy,
                              const std::string& label, int rollouts, std::uint64_t seed, int workers,
                              double z_bound) {
  const TeamSolution solution = solve_team(model);
  const double exact = exact_cost(model, solution, strategy);
  const RolloutEngine engine(model, solution);
  RolloutConfig cfg;
  cfg.seed = seed;
  cfg.num_rollouts = rollouts;
  cfg.strategy = strategy;
  cfg.workers = workers;
  const std::vector<Trace> traces = engine.run(cfg);
  const CostEstimate est = evaluate_cost(traces);
  double split = 0.0;
  for (const Trace& tr : traces) split = std::max(split, tr.max_cost_split_residual);
  const double z = est.standard_error > 0.0 ? std::abs(est.mean - exact) / est.standard_error
                                            : (est.mean == exact ? 0.0 : std::numeric_limits<double>::infinity());
  CheckResult r = bounded("mc-vs-exact-" + label, z, z_bound,
                          "exact " + format_double(exact) + ", sampled " + format_double(est.mean) + " +- " +
                              format_double(est.standard_error));
  r.cost_split_residual = split;
  return r;
}

CheckResult check_schedule_roundtrip(const TeamModel& model, const TeamSolution& stored) {
  const TeamSolution fresh = solve_team(model);
  std::string diff = first_bitwise_difference(fresh, stored);
  if (diff.empty()) {
    const TeamSolution reread = solution_from_json(json::parse(solution_to_json(stored).dump()));
    diff = first_bitwise_difference(stored, reread);
    if (!diff.empty()) diff = "serialization: " + diff;
  }
  CheckResult r;
  r.name = "schedules-bit-exact";
  r.passed = diff.empty();
  r.observed = r.passed ? 0.0 : 1.0;
  r.detail = r.passed ? "stored schedules equal recomputed ones bit for bit" : diff;
  return r;
}

}  // namespace deepteam
