#include "deepteam/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "deepteam/errors.hpp"
#include "deepteam/parallel.hpp"
#include "deepteam/rng.hpp"

namespace deepteam {

namespace {

Matrix coupled(const Matrix& local, const Matrix& shared, const Matrix& coupling, int n) {
  return kron(Matrix::Identity(n, n), local) + kron(coupling, shared);
}

Matrix identity_kron(int n, const Matrix& m) { return kron(Matrix::Identity(n, n), m); }

// Stacked map v -> VEC(v_i - alpha_i vbar).
Matrix gauge_projector(const Vector& alpha, Eigen::Index d) {
  const auto n = alpha.size();
  const Matrix pi = Matrix::Identity(n, n) - alpha * alpha.transpose() / static_cast<double>(n);
  return kron(pi, Matrix::Identity(d, d));
}

// Stacked map v -> vbar.
Matrix aggregator(const Vector& alpha, Eigen::Index d) {
  return kron(alpha.transpose() / static_cast<double>(alpha.size()), Matrix::Identity(d, d));
}

Matrix block_diagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// Filter state (dxhat stacked, z) with actions linear in the combined
// estimates and the current observations.
LinearController filtering_controller(const TeamModel& model, const TeamSolution& solution,
                                      const CustomLinear& law) {
  const Dimensions& d = model.dims;
  const int n = d.n;
  const Vector& alpha = model.influence.alpha;
  const Matrix proj_y = gauge_projector(alpha, d.dy);
  const Matrix agg_y = aggregator(alpha, d.dy);
  const Matrix proj_u = gauge_projector(alpha, d.du);
  const Matrix agg_u = aggregator(alpha, d.du);
  const Matrix coupling = alpha * alpha.transpose() / static_cast<double>(n);
  const Eigen::Index N = static_cast<Eigen::Index>(n) * d.dx;
  const Eigen::Index m = N + d.dx;

  LinearController ctl;
  const EstimatorState init = initial_estimate(model);
  ctl.initial = vstack(stack_columns(init.dxhat), init.z);

  for (int t = 1; t <= d.T; ++t) {
    const StageMatrices& s = model.stage(t);
    const Matrix& L = solution.filters.local.L(t);
    const Matrix& Lbar = solution.filters.global.L(t);
    const Matrix I = Matrix::Identity(d.dx, d.dx);

    ControllerStage cs;
    cs.F = block_diagonal(identity_kron(n, I - L * s.C), I - Lbar * s.C_deep());
    cs.G = vstack(identity_kron(n, L) * proj_y, Lbar * agg_y);
    cs.f = Vector::Zero(m);
    if (t < d.T) {
      const CustomStage& c = law.stage(t);
      cs.K = hstack(identity_kron(n, c.a), kron(alpha, c.a + c.b));
      cs.D = identity_kron(n, c.c) + kron(coupling, c.d);
    } else {
      cs.K = Matrix::Zero(n * d.du, m);
      cs.D = Matrix::Zero(n * d.du, n * d.dy);
    }
    cs.k = Vector::Zero(n * d.du);
    cs.W = block_diagonal(identity_kron(n, s.A), s.A_deep());
    cs.M = vstack(identity_kron(n, s.B) * proj_u, s.B_deep() * agg_u);
    cs.omega = Vector::Zero(m);
    ctl.stages.push_back(std::move(cs));
  }
  return ctl;
}

LinearController meanfield_controller(const TeamModel& model, const TeamSolution& solution) {
  const Dimensions& d = model.dims;
  const int n = d.n;
  const Vector& alpha = model.influence.alpha;
  const Eigen::Index N = static_cast<Eigen::Index>(n) * d.dx;

  LinearController ctl;
  ctl.initial = stack_columns(initial_estimate(model).dxhat);
  for (int t = 1; t <= d.T; ++t) {
    const StageMatrices& s = model.stage(t);
    const Matrix& L = solution.filters.local.L(t);
    const Vector& mt = solution.meanfield.at(t - 1);
    const Matrix I = Matrix::Identity(d.dx, d.dx);

    ControllerStage cs;
    cs.F = identity_kron(n, I - L * s.C);
    cs.G = identity_kron(n, L);
    cs.f = -kron(alpha, L * s.C_deep() * mt);
    cs.D = Matrix::Zero(n * d.du, n * d.dy);
    cs.W = identity_kron(n, s.A);
    cs.M = identity_kron(n, s.B);
    if (t < d.T) {
      const Vector shared = solution.riccati.gain_deep(t) * mt;
      cs.K = identity_kron(n, solution.riccati.gain(t));
      cs.k = kron(alpha, shared);
      cs.omega = -kron(alpha, s.B * shared);
    } else {
      cs.K = Matrix::Zero(n * d.du, N);
      cs.k = Vector::Zero(n * d.du);
      cs.omega = Vector::Zero(N);
    }
    ctl.stages.push_back(std::move(cs));
  }
  return ctl;
}

}  // namespace

Vector stack_columns(const Matrix& per_agent) {
  return Eigen::Map<const Vector>(per_agent.data(), per_agent.size());
}

Matrix unstack_columns(const Vector& stacked, Eigen::Index rows) {
  return Eigen::Map<const Matrix>(stacked.data(), rows, stacked.size() / rows);
}

JointModel build_joint_model(const TeamModel& model, int cap) {
  require_valid(model);
  const Dimensions& d = model.dims;
  const int n = d.n;
  if (static_cast<long long>(n) * d.dx > cap)
    throw std::length_error("oracle: n*dx = " + std::to_string(n * d.dx) + " exceeds cap " +
                            std::to_string(cap));
  const Vector& alpha = model.influence.alpha;
  const Matrix coupling = alpha * alpha.transpose() / static_cast<double>(n);
  const double nn = static_cast<double>(n);

  JointModel joint;
  joint.dims = d;
  for (int t = 1; t <= d.T; ++t) {
    const StageMatrices& s = model.stage(t);
    JointStage js;
    js.A = coupled(s.A, s.Abar, coupling, n);
    js.B = coupled(s.B, s.Bbar, coupling, n);
    js.E = coupled(s.E, s.Ebar, coupling, n);
    js.C = coupled(s.C, s.Cbar, coupling, n);
    js.S = coupled(s.S, s.Sbar, coupling, n);
    js.Sigma_w = identity_kron(n, model.Sigma_w(t));
    js.Sigma_v = identity_kron(n, model.Sigma_v(t));
    js.Q = identity_kron(n, s.Q) / nn + kron(coupling, s.Qbar) / nn;
    js.R = identity_kron(n, s.R) / nn + kron(coupling, s.Rbar) / nn;
    joint.stages.push_back(std::move(js));
  }
  joint.mean0 = kron(Vector::Ones(n), model.noise.mu_x);
  joint.cov0 = identity_kron(n, model.noise.Sigma_x);
  return joint;
}

CentralizedEstimates centralized_filter(const JointModel& joint,
                                        const std::vector<Vector>& observations,
                                        const std::vector<Vector>& actions) {
  const int T = joint.dims.T;
  if (static_cast<int>(observations.size()) < T)
    throw std::invalid_argument("centralized_filter: need one observation per step");
  if (static_cast<int>(actions.size()) < T - 1)
    throw std::invalid_argument("centralized_filter: need actions for t = 1..T-1");

  CentralizedEstimates out;
  Vector mean = joint.mean0;
  Matrix cov = joint.cov0;
  for (int t = 1; t <= T; ++t) {
    const JointStage& s = joint.stage(t);
    out.mean_pred.push_back(mean);
    out.cov_pred.push_back(cov);

    const Matrix noise_y = s.S * s.Sigma_v * s.S.transpose();
    const Matrix innov = symmetrized(s.C * cov * s.C.transpose() + noise_y);
    Eigen::LLT<Matrix> llt(innov);
    if (llt.info() != Eigen::Success ||
        min_symmetric_eigenvalue(innov) <= kInnovationSingularity * std::max(innov.trace(), 1e-300))
      throw SingularInnovation("oracle", t);
    const Matrix gain = llt.solve(s.C * cov).transpose();
    mean = mean + gain * (observations[t - 1] - s.C * mean);
    const Matrix IKC = Matrix::Identity(cov.rows(), cov.cols()) - gain * s.C;
    cov = symmetrized(IKC * cov * IKC.transpose() + gain * noise_y * gain.transpose());
    out.mean_post.push_back(mean);
    out.cov_post.push_back(cov);

    if (t < T) {
      mean = s.A * mean + s.B * actions[t - 1];
      cov = symmetrized(s.A * cov * s.A.transpose() + s.E * s.Sigma_w * s.E.transpose());
    }
  }
  return out;
}

LinearController build_controller(const TeamModel& model, const TeamSolution& solution,
                                  const StrategyKind& strategy) {
  const Dimensions& d = model.dims;
  return std::visit(
      [&](const auto& k) -> LinearController {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, OptimalIDSS>)
          return filtering_controller(model, solution,
                                      CustomLinear::from_optimal(d, solution.riccati));
        else if constexpr (std::is_same_v<K, ZeroAction>)
          return filtering_controller(model, solution, CustomLinear::zeros(d));
        else if constexpr (std::is_same_v<K, CustomLinear>) {
          check_custom_shapes(k, d);
          return filtering_controller(model, solution, k);
        } else
          return meanfield_controller(model, solution);
      },
      strategy);
}

double exact_cost(const JointModel& joint, const LinearController& controller) {
  const JointStage& first = joint.stage(1);
  const Eigen::Index N = first.A.rows();
  const Eigen::Index Nu = first.B.cols();
  const Eigen::Index m = controller.initial.size();

  // Joint moments of (x, zeta) at the predicted phase.
  Vector mean(N + m);
  mean << joint.mean0, controller.initial;
  Matrix cov = Matrix::Zero(N + m, N + m);
  cov.topLeftCorner(N, N) = joint.cov0;

  double total = 0.0;
  const int T = joint.dims.T;
  for (int t = 1; t <= T; ++t) {
    const JointStage& s = joint.stage(t);
    const ControllerStage& c = controller.stages.at(t - 1);
    const Matrix KG = (t < T) ? Matrix(c.K * c.G + c.D) : Matrix::Zero(Nu, s.C.rows());
    const Matrix KF = (t < T) ? Matrix(c.K * c.F) : Matrix::Zero(Nu, m);
    const Vector uconst = (t < T) ? Vector(c.K * c.f + c.k) : Vector::Zero(Nu);

    // b = (x, zeta_post, u) = Tm (x, zeta) + Nm v + b0
    Matrix Tm = Matrix::Zero(N + m + Nu, N + m);
    Tm.topLeftCorner(N, N).setIdentity();
    Tm.block(N, 0, m, N) = c.G * s.C;
    Tm.block(N, N, m, m) = c.F;
    Tm.block(N + m, 0, Nu, N) = KG * s.C;
    Tm.block(N + m, N, Nu, m) = KF;
    Matrix Nm = Matrix::Zero(N + m + Nu, s.S.cols());
    Nm.middleRows(N, m) = c.G * s.S;
    Nm.bottomRows(Nu) = KG * s.S;
    Vector b0 = Vector::Zero(N + m + Nu);
    b0.segment(N, m) = c.f;
    b0.tail(Nu) = uconst;

    const Vector mb = Tm * mean + b0;
    const Matrix Pb = Tm * cov * Tm.transpose() + Nm * s.Sigma_v * Nm.transpose();

    const auto xs = Eigen::seqN(0, N);
    const auto us = Eigen::seqN(N + m, Nu);
    total += (s.Q * Pb(xs, xs)).trace() + mb(xs).dot(s.Q * mb(xs));
    total += (s.R * Pb(us, us)).trace() + mb(us).dot(s.R * mb(us));

    if (t < T) {
      Matrix Um = Matrix::Zero(N + m, N + m + Nu);
      Um.topLeftCorner(N, N) = s.A;
      Um.block(0, N + m, N, Nu) = s.B;
      Um.block(N, N, m, m) = c.W;
      Um.block(N, N + m, m, Nu) = c.M;
      Vector u0 = Vector::Zero(N + m);
      u0.tail(m) = c.omega;
      mean = Um * mb + u0;
      cov = Um * Pb * Um.transpose();
      cov.topLeftCorner(N, N) += s.E * s.Sigma_w * s.E.transpose();
      cov = symmetrized(cov);
    }
  }
  return total;
}

double exact_cost(const TeamModel& model, const TeamSolution& solution,
                  const StrategyKind& strategy, int cap) {
  return exact_cost(build_joint_model(model, cap), build_controller(model, solution, strategy));
}

Vector custom_linear_parameters(const CustomLinear& custom) {
  std::vector<double> p;
  for (const CustomStage& s : custom.stages)
    for (const Matrix* m : {&s.a, &s.b, &s.c, &s.d})
      p.insert(p.end(), m->data(), m->data() + m->size());
  return Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
}

CustomLinear custom_linear_from_parameters(const Dimensions& dims, const Vector& params) {
  CustomLinear out = CustomLinear::zeros(dims);
  Eigen::Index k = 0;
  for (CustomStage& s : out.stages)
    for (Matrix* m : {&s.a, &s.b, &s.c, &s.d}) {
      if (k + m->size() > params.size())
        throw std::invalid_argument("custom_linear_from_parameters: too few parameters");
      *m = Eigen::Map<const Matrix>(params.data() + k, m->rows(), m->cols());
      k += m->size();
    }
  if (k != params.size())
    throw std::invalid_argument("custom_linear_from_parameters: too many parameters");
  return out;
}

StrategyClass custom_linear_class(const Dimensions& dims) {
  StrategyClass cls;
  cls.name = "custom-linear";
  cls.dimension = static_cast<int>(custom_linear_parameters(CustomLinear::zeros(dims)).size());
  cls.make = [dims](const Vector& p) -> StrategyKind { return custom_linear_from_parameters(dims, p); };
  return cls;
}

StrategyClass singleton_class(const StrategyKind& strategy) {
  StrategyClass cls;
  cls.name = strategy_name(strategy);
  cls.dimension = 0;
  cls.make = [strategy](const Vector&) { return strategy; };
  return cls;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = f(probe);
    probe(i) = x(i) - step;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

namespace {

struct Descent {
  Vector x;
  double f = std::numeric_limits<double>::quiet_NaN();
};

Descent bfgs(const std::function<double(const Vector&)>& f, Vector x,
             const BruteForceOptions& opt) {
  Descent out;
  double fx = f(x);
  if (!std::isfinite(fx)) return out;
  Vector g = finite_difference_gradient(f, x, opt.fd_step);
  Matrix H = Matrix::Identity(x.size(), x.size());
  int stalled = 0;
  for (int it = 0; it < opt.max_iterations && x.size() > 0; ++it) {
    Vector p = -H * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    if (slope == 0.0) break;

    double step = 1.0;
    Vector xn;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * p;
      fn = f(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vector gn = finite_difference_gradient(f, xn, opt.fd_step);
    const Vector s = xn - x;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix V = Matrix::Identity(x.size(), x.size()) - rho * s * y.transpose();
      H = V * H * V.transpose() + rho * s * s.transpose();
    }
    const double improvement = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (improvement <= opt.rel_tol * (1.0 + std::abs(fx))) {
      if (++stalled >= 2) break;
    } else {
      stalled = 0;
    }
  }
  out.x = std::move(x);
  out.f = fx;
  return out;
}

}  // namespace

BruteForceResult brute_force_optimize(const TeamModel& model, const TeamSolution& solution,
                                      const StrategyClass& strategies,
                                      const BruteForceOptions& options) {
  const JointModel joint = build_joint_model(model, options.cap);
  const auto objective = [&](const Vector& p) {
    try {
      return exact_cost(joint, build_controller(model, solution, strategies.make(p)));
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  const int starts = std::max(1, options.starts);
  std::vector<Vector> initial(static_cast<std::size_t>(starts));
  SplitMixStream rng(options.seed);
  for (auto& x : initial) x = rng.normal_matrix(strategies.dimension, 1, options.start_scale);

  std::vector<Descent> runs(initial.size());
  parallel_for(runs.size(), options.workers,
               [&](std::size_t i) { runs[i] = bfgs(objective, initial[i], options); });

  BruteForceResult result;
  result.best_cost = std::numeric_limits<double>::infinity();
  for (const Descent& r : runs) {
    result.start_costs.push_back(r.f);
    if (!std::isfinite(r.f)) {
      ++result.excluded_starts;
      continue;
    }
    ++result.finite_starts;
    if (r.f < result.best_cost) {
      result.best_cost = r.f;
      result.best_parameters = r.x;
    }
  }
  if (result.finite_starts == 0)
    throw NumericalError("oracle", 0, "no start of the brute-force search had finite cost");
  result.best = strategies.make(result.best_parameters);
  return result;
}

}  // namespace deepteam
