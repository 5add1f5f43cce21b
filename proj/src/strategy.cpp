#include "deepteam/strategy.hpp"

#include <fstream>
#include <stdexcept>

#include "deepteam/errors.hpp"
#include "deepteam/model_io.hpp"

namespace deepteam {

TeamSolution solve_team(const TeamModel& model) {
  TeamSolution sol;
  sol.riccati = solve_riccati(model);
  sol.filters = precompute_filters(model);
  sol.meanfield = meanfield_trajectory(model, sol.riccati);
  return sol;
}

CustomLinear CustomLinear::zeros(const Dimensions& d) {
  CustomLinear c;
  c.stages.assign(static_cast<std::size_t>(std::max(d.T - 1, 0)),
                  CustomStage{Matrix::Zero(d.du, d.dx), Matrix::Zero(d.du, d.dx),
                              Matrix::Zero(d.du, d.dy), Matrix::Zero(d.du, d.dy)});
  return c;
}

CustomLinear CustomLinear::from_optimal(const Dimensions& d, const RiccatiPass& riccati) {
  CustomLinear c = zeros(d);
  for (int t = 1; t < d.T; ++t) {
    c.stages[t - 1].a = riccati.gain(t);
    c.stages[t - 1].b = riccati.gain_deep(t) - riccati.gain(t);
  }
  return c;
}

std::string strategy_name(const StrategyKind& kind) {
  struct Visitor {
    std::string operator()(const OptimalIDSS&) const { return "optimal"; }
    std::string operator()(const MeanFieldDecentralized&) const { return "meanfield"; }
    std::string operator()(const ZeroAction&) const { return "zero"; }
    std::string operator()(const CustomLinear&) const { return "custom"; }
  };
  return std::visit(Visitor{}, kind);
}

void check_custom_shapes(const CustomLinear& custom, const Dimensions& d) {
  if (custom.stages.size() != static_cast<std::size_t>(d.T - 1))
    throw ModelError("custom strategy needs T-1 = " + std::to_string(d.T - 1) + " stages, got " +
                     std::to_string(custom.stages.size()));
  for (std::size_t k = 0; k < custom.stages.size(); ++k) {
    const CustomStage& s = custom.stages[k];
    const bool ok = s.a.rows() == d.du && s.a.cols() == d.dx && s.b.rows() == d.du &&
                    s.b.cols() == d.dx && s.c.rows() == d.du && s.c.cols() == d.dy &&
                    s.d.rows() == d.du && s.d.cols() == d.dy;
    if (!ok) throw ModelError("custom strategy stage " + std::to_string(k + 1) + " has wrong shapes");
  }
}

CustomLinear load_custom_linear(const std::filesystem::path& path, const Dimensions& d) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open custom strategy file " + path.string());
  CustomLinear custom;
  try {
    const json doc = json::parse(in);
    const json& stages = doc.at("stages");
    auto read_stage = [&](const json& s) {
      auto entry = [&](const char* key, Eigen::Index cols) {
        return s.contains(key) ? matrix_from_json(s[key], key) : Matrix(Matrix::Zero(d.du, cols));
      };
      return CustomStage{entry("a", d.dx), entry("b", d.dx), entry("c", d.dy), entry("d", d.dy)};
    };
    if (stages.is_array()) {
      for (const auto& s : stages) custom.stages.push_back(read_stage(s));
    } else {
      custom.stages.assign(static_cast<std::size_t>(d.T - 1), read_stage(stages));
    }
  } catch (const json::exception& e) {
    throw ModelError("custom strategy file " + path.string() + ": " + e.what());
  }
  check_custom_shapes(custom, d);
  return custom;
}

StrategyKind parse_strategy(const std::string& spec, const Dimensions& dims) {
  if (spec == "optimal") return OptimalIDSS{};
  if (spec == "meanfield") return MeanFieldDecentralized{};
  if (spec == "zero") return ZeroAction{};
  if (spec.rfind("custom:", 0) == 0) return load_custom_linear(spec.substr(7), dims);
  throw std::invalid_argument("unknown strategy '" + spec + "'");
}

namespace {

void require_action_time(const RiccatiPass& riccati, int t) {
  const int last = static_cast<int>(riccati.theta.size());
  if (t < 1 || t > last)
    throw std::out_of_range("no action at t=" + std::to_string(t) +
                            ": actions exist for t = 1..T-1 and u_T is zero");
}

}  // namespace

Vector act_optimal(const Vector& xhat_i, const Vector& z, double alpha_i,
                   const RiccatiPass& riccati, int t) {
  require_action_time(riccati, t);
  const Matrix& th = riccati.gain(t);
  return th * xhat_i + alpha_i * (riccati.gain_deep(t) - th) * z;
}

Vector act_meanfield(const Vector& xhat_i, const Vector& m_t, double alpha_i,
                     const RiccatiPass& riccati, int t) {
  return act_optimal(xhat_i, m_t, alpha_i, riccati, t);
}

std::vector<Vector> meanfield_trajectory(const TeamModel& model, const RiccatiPass& riccati) {
  const int T = model.T();
  std::vector<Vector> m(static_cast<std::size_t>(T));
  m[0] = model.influence.mean() * model.noise.mu_x;
  for (int t = 1; t < T; ++t) {
    const StageMatrices& s = model.stage(t);
    const Vector& cur = m[t - 1];
    m[t] = s.A_deep() * cur + s.B_deep() * (riccati.gain_deep(t) * cur);
  }
  return m;
}

namespace {

Matrix zero_actions(const TeamModel& model) { return Matrix::Zero(model.dims.du, model.n()); }

// Runs the exact (Delta, z) filters on its own observations and actions.
class FilteringPolicy : public TeamPolicy {
 public:
  FilteringPolicy(const TeamModel& model, const TeamSolution& solution)
      : model_(model), solution_(solution), state_(initial_estimate(model)) {}

  Matrix act(int t, const Matrix& y, const Vector& ybar) override {
    if (state_.t != t) throw std::logic_error("policy stepped out of order");
    const Vector& alpha = model_.influence.alpha;
    const EstimatorState post =
        correct(model_, solution_.filters, state_, y - ybar * alpha.transpose(), ybar);
    if (t == model_.T()) {
      state_ = post;
      return zero_actions(model_);
    }
    Matrix u = decide(t, post, y, ybar);
    const GaugeSplit split = gauge_decompose(u, model_.influence);
    state_ = predict(model_, post, split.deltas, split.bar);
    return u;
  }

 protected:
  virtual Matrix decide(int t, const EstimatorState& post, const Matrix& y,
                        const Vector& ybar) const = 0;

  const TeamModel& model_;
  const TeamSolution& solution_;

 private:
  EstimatorState state_;
};

class OptimalPolicy final : public FilteringPolicy {
 public:
  using FilteringPolicy::FilteringPolicy;

 protected:
  Matrix decide(int t, const EstimatorState& post, const Matrix&, const Vector&) const override {
    const RiccatiPass& r = solution_.riccati;
    const Matrix xhat = agent_estimates(post, model_.influence);
    const Vector shared = (r.gain_deep(t) - r.gain(t)) * post.z;
    return r.gain(t) * xhat + shared * model_.influence.alpha.transpose();
  }
};

class CustomPolicy final : public FilteringPolicy {
 public:
  CustomPolicy(const TeamModel& model, const TeamSolution& solution, CustomLinear custom)
      : FilteringPolicy(model, solution), custom_(std::move(custom)) {
    check_custom_shapes(custom_, model.dims);
  }

 protected:
  Matrix decide(int t, const EstimatorState& post, const Matrix& y,
                const Vector& ybar) const override {
    const CustomStage& s = custom_.stage(t);
    const Matrix xhat = agent_estimates(post, model_.influence);
    const Vector shared = s.b * post.z + s.d * ybar;
    return s.a * xhat + s.c * y + shared * model_.influence.alpha.transpose();
  }

 private:
  CustomLinear custom_;
};

class ZeroPolicy final : public TeamPolicy {
 public:
  explicit ZeroPolicy(const TeamModel& model) : model_(model) {}
  Matrix act(int, const Matrix&, const Vector&) override { return zero_actions(model_); }

 private:
  const TeamModel& model_;
};

// Fully decentralized: each agent filters its own observation and replaces
// every global quantity by its offline prediction; ybar is never read.
class MeanFieldPolicy final : public TeamPolicy {
 public:
  MeanFieldPolicy(const TeamModel& model, const TeamSolution& solution)
      : model_(model), solution_(solution), dxhat_(initial_estimate(model).dxhat) {}

  Matrix act(int t, const Matrix& y, const Vector&) override {
    if (t != next_t_) throw std::logic_error("policy stepped out of order");
    const StageMatrices& s = model_.stage(t);
    const Vector& alpha = model_.influence.alpha;
    const Vector& m = solution_.meanfield.at(t - 1);
    const Vector ybar_pred = s.C_deep() * m;
    dxhat_ += solution_.filters.local.L(t) * (y - ybar_pred * alpha.transpose() - s.C * dxhat_);
    ++next_t_;
    if (t == model_.T()) return zero_actions(model_);

    const RiccatiPass& r = solution_.riccati;
    const Vector ubar_pred = r.gain_deep(t) * m;
    // theta (dxhat + alpha m) + alpha (theta_deep - theta) m
    Matrix u = r.gain(t) * dxhat_ + ubar_pred * alpha.transpose();
    dxhat_ = s.A * dxhat_ + s.B * (u - ubar_pred * alpha.transpose());
    return u;
  }

 private:
  const TeamModel& model_;
  const TeamSolution& solution_;
  Matrix dxhat_;
  int next_t_ = 1;
};

}  // namespace

std::unique_ptr<TeamPolicy> make_policy(const StrategyKind& kind, const TeamModel& model,
                                        const TeamSolution& solution) {
  struct Visitor {
    const TeamModel& model;
    const TeamSolution& solution;
    std::unique_ptr<TeamPolicy> operator()(const OptimalIDSS&) const {
      return std::make_unique<OptimalPolicy>(model, solution);
    }
    std::unique_ptr<TeamPolicy> operator()(const MeanFieldDecentralized&) const {
      return std::make_unique<MeanFieldPolicy>(model, solution);
    }
    std::unique_ptr<TeamPolicy> operator()(const ZeroAction&) const {
      return std::make_unique<ZeroPolicy>(model);
    }
    std::unique_ptr<TeamPolicy> operator()(const CustomLinear& c) const {
      return std::make_unique<CustomPolicy>(model, solution, c);
    }
  };
  return std::visit(Visitor{model, solution}, kind);
}

}  // namespace deepteam
