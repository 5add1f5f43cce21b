#include "deepteam/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "deepteam/errors.hpp"
#include "deepteam/parallel.hpp"
#include "deepteam/rng.hpp"

namespace deepteam {

RolloutEngine::RolloutEngine(const TeamModel& model, const TeamSolution& solution)
    : model_(model), solution_(solution), factor_x_(psd_factor(model.noise.Sigma_x)) {
  for (int t = 1; t <= model.T(); ++t) {
    factor_w_.push_back(psd_factor(model.Sigma_w(t)));
    factor_v_.push_back(psd_factor(model.Sigma_v(t)));
  }
}

Trace RolloutEngine::rollout(const StrategyKind& strategy, std::uint64_t seed, std::uint64_t index,
                             RecordLevel record) const {
  const TeamModel& m = model_;
  const Dimensions& d = m.dims;
  const int n = d.n;
  const InfluenceVector& infl = m.influence;
  const Vector& alpha = infl.alpha;
  const bool full = record == RecordLevel::FullTrace;

  std::unique_ptr<TeamPolicy> policy = make_policy(strategy, m, solution_);

  Trace trace;
  trace.index = index;
  trace.strategy = strategy_name(strategy);
  trace.step_cost.reserve(static_cast<std::size_t>(d.T));
  if (full) trace.steps.reserve(static_cast<std::size_t>(d.T));

  Matrix x = factor_x_ * standard_normal_block(seed, index, 1, NoiseKind::InitialState, d.dx, n);
  x.colwise() += m.noise.mu_x;
  EstimatorState prior = initial_estimate(m);

  for (int t = 1; t <= d.T; ++t) {
    const StageMatrices& s = m.stage(t);
    const Matrix v =
        factor_v_[t - 1] * standard_normal_block(seed, index, t, NoiseKind::Measurement, d.dv, n);
    const Vector xbar = deep_aggregate(x, infl);
    const Vector vbar = deep_aggregate(v, infl);
    const Matrix y = s.C * x + s.S * v + (s.Cbar * xbar + s.Sbar * vbar) * alpha.transpose();
    const GaugeSplit gy = gauge_decompose(y, infl);

    InnovationRecord innov = innovations(m, prior, y);
    const EstimatorState post = correct(m, solution_.filters, prior, gy.deltas, gy.bar);

    Matrix u = policy->act(t, y, gy.bar);
    if (t == d.T) u.setZero();
    const GaugeSplit gu = gauge_decompose(u, infl);

    const Vector cost = stage_costs(s, x, u, infl);
    const double team_cost = cost.sum() / n;
    trace.step_cost.push_back(team_cost);
    trace.total_cost += team_cost;
    trace.max_cost_split_residual = std::max(trace.max_cost_split_residual,
                                             cost_decomposition(s, x, u, infl).relative_residual());
    trace.ms_correction += (solution_.filters.global.L(t) * innov.pbar).squaredNorm();

    Matrix w;
    Matrix x_next;
    EstimatorState next_prior;
    if (t < d.T) {
      w = factor_w_[t - 1] * standard_normal_block(seed, index, t, NoiseKind::Process, d.dw, n);
      const Vector wbar = deep_aggregate(w, infl);
      const Vector shared = s.Abar * xbar + s.Bbar * gu.bar + s.Ebar * wbar;
      x_next = s.A * x + s.B * u + s.E * w + shared * alpha.transpose();
      next_prior = predict(m, post, gu.deltas, gu.bar);
    }

    if (full) {
      StepRecord rec;
      rec.t = t;
      rec.x = x;
      rec.u = u;
      rec.y = y;
      rec.xbar = xbar;
      rec.ubar = gu.bar;
      rec.ybar = gy.bar;
      rec.w = w;
      rec.v = v;
      rec.dxhat_pred = prior.dxhat;
      rec.z_pred = prior.z;
      rec.dxhat = post.dxhat;
      rec.z = post.z;
      rec.xhat = agent_estimates(post, infl);
      rec.e = (x - xbar * alpha.transpose()) - post.dxhat;
      rec.xi = xbar - post.z;
      rec.cost = cost;
      rec.innovation = std::move(innov);
      trace.steps.push_back(std::move(rec));
    }
    if (t < d.T) {
      x = std::move(x_next);
      prior = std::move(next_prior);
    }
  }
  return trace;
}

std::vector<Trace> RolloutEngine::run(const RolloutConfig& config) const {
  if (config.num_rollouts < 1) throw std::invalid_argument("num_rollouts must be at least 1");
  std::vector<Trace> traces(static_cast<std::size_t>(config.num_rollouts));
  parallel_for(traces.size(), config.workers, [&](std::size_t i) {
    traces[i] = rollout(config.strategy, config.seed, i, config.record);
  });
  return traces;
}

Trace rollout(const TeamModel& model, const TeamSolution& solution, const RolloutConfig& config,
              std::uint64_t index) {
  return RolloutEngine(model, solution).rollout(config.strategy, config.seed, index, config.record);
}

CostEstimate evaluate_cost(std::span<const double> costs) {
  CostEstimate est;
  est.count = costs.size();
  if (costs.empty()) return est;
  double sum = 0.0;
  for (double c : costs) sum += c;
  est.mean = sum / static_cast<double>(costs.size());
  if (costs.size() < 2) return est;
  double ss = 0.0;
  for (double c : costs) ss += (c - est.mean) * (c - est.mean);
  const double var = ss / static_cast<double>(costs.size() - 1);
  est.standard_error = std::sqrt(var / static_cast<double>(costs.size()));
  est.has_standard_error = true;
  return est;
}

CostEstimate evaluate_cost(const std::vector<Trace>& traces) {
  std::vector<double> costs;
  costs.reserve(traces.size());
  for (const auto& tr : traces) costs.push_back(tr.total_cost);
  return evaluate_cost(costs);
}

TeamModel with_population(const TeamModel& family, int n) {
  TeamModel m = family;
  m.dims.n = n;
  m.influence = InfluenceVector::homogeneous(n);
  return m;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t k = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConvergenceTable convergence_experiment(const TeamModel& family, std::span<const int> n_list,
                                        const RolloutConfig& config) {
  ConvergenceTable table;
  std::vector<double> ns;
  std::vector<double> sig;
  std::vector<double> corr;
  std::vector<double> gaps;
  for (int n : n_list) {
    const TeamModel model = with_population(family, n);
    const TeamSolution solution = solve_team(model);
    const RolloutEngine engine(model, solution);

    RolloutConfig cfg = config;
    cfg.record = RecordLevel::CostsOnly;
    cfg.strategy = OptimalIDSS{};
    const std::vector<Trace> optimal = engine.run(cfg);
    cfg.strategy = MeanFieldDecentralized{};
    const std::vector<Trace> meanfield = engine.run(cfg);

    std::vector<double> corrections;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < optimal.size(); ++i) {
      corrections.push_back(optimal[i].ms_correction);
      diffs.push_back(meanfield[i].total_cost - optimal[i].total_cost);
      table.max_cost_split_residual =
          std::max({table.max_cost_split_residual, optimal[i].max_cost_split_residual,
                    meanfield[i].max_cost_split_residual});
    }

    ConvergenceRow row;
    row.n = n;
    for (const Matrix& m : solution.filters.global.Sigma_post)
      row.max_sigma_bar = std::max(row.max_sigma_bar, m.cwiseAbs().maxCoeff());
    const CostEstimate ce = evaluate_cost(corrections);
    row.ms_correction = ce.mean;
    row.ms_correction_se = ce.standard_error;
    const CostEstimate ge = evaluate_cost(diffs);
    row.cost_gap = ge.mean;
    row.cost_gap_se = ge.standard_error;
    table.rows.push_back(row);

    ns.push_back(n);
    sig.push_back(row.max_sigma_bar);
    corr.push_back(row.ms_correction);
    gaps.push_back(row.cost_gap);
  }
  table.slope_max_sigma_bar = loglog_slope(ns, sig);
  table.slope_ms_correction = loglog_slope(ns, corr);
  table.slope_cost_gap = loglog_slope(ns, gaps);
  return table;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_block(std::ofstream& out, const std::string& key, int t, const char* name,
                 const Matrix& m) {
  for (Eigen::Index i = 0; i < m.cols(); ++i)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      out << key << ',' << t << ',' << i << ',' << name << '[' << r << "]," << format_double(m(r, i))
          << '\n';
}

void write_shared(std::ofstream& out, const std::string& key, int t, const char* name,
                  const Vector& v) {
  for (Eigen::Index r = 0; r < v.size(); ++r)
    out << key << ',' << t << ",-1," << name << '[' << r << "]," << format_double(v(r)) << '\n';
}

}  // namespace

void write_costs_csv(const std::filesystem::path& path, const std::vector<Trace>& traces) {
  std::ofstream out = open_csv(path);
  out << "rollout_index,strategy,cost\n";
  for (const auto& tr : traces)
    out << tr.index << ',' << tr.strategy << ',' << format_double(tr.total_cost) << '\n';
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<Trace>& traces) {
  std::ofstream out = open_csv(path);
  out << "rollout,strategy,t,agent,variable,value\n";
  for (const auto& tr : traces) {
    const std::string key = std::to_string(tr.index) + ',' + tr.strategy;
    for (const auto& st : tr.steps) {
      write_block(out, key, st.t, "x", st.x);
      write_block(out, key, st.t, "u", st.u);
      write_block(out, key, st.t, "y", st.y);
      write_block(out, key, st.t, "dxhat", st.dxhat);
      write_block(out, key, st.t, "xhat", st.xhat);
      write_block(out, key, st.t, "e", st.e);
      write_block(out, key, st.t, "cost", st.cost.transpose());
      write_shared(out, key, st.t, "xbar", st.xbar);
      write_shared(out, key, st.t, "ubar", st.ubar);
      write_shared(out, key, st.t, "ybar", st.ybar);
      write_shared(out, key, st.t, "z", st.z);
      write_shared(out, key, st.t, "xi", st.xi);
    }
  }
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table) {
  std::ofstream out = open_csv(path);
  out << "n,max_sigma_bar,ms_correction,cost_gap\n";
  for (const auto& r : table.rows)
    out << r.n << ',' << format_double(r.max_sigma_bar) << ',' << format_double(r.ms_correction)
        << ',' << format_double(r.cost_gap) << '\n';
}

}  // namespace deepteam
