#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "deepteam/filters.hpp"
#include "deepteam/model.hpp"
#include "deepteam/riccati.hpp"

namespace deepteam {

// Everything an agent computes offline before the system runs.
struct TeamSolution {
  RiccatiPass riccati;
  FilterSchedules filters;
  std::vector<Vector> meanfield;  // deterministic deep-state trajectory m_t, t = 1..T
};

TeamSolution solve_team(const TeamModel& model);

struct OptimalIDSS {};
struct MeanFieldDecentralized {};
struct ZeroAction {};

// u_i = a xhat_i + alpha_i b z + c y_i + alpha_i d ybar, with xhat_i, z the
// filtered estimates at t and y_i, ybar the current observations.
struct CustomStage {
  Matrix a;  // du x dx
  Matrix b;  // du x dx
  Matrix c;  // du x dy
  Matrix d;  // du x dy
};

struct CustomLinear {
  std::vector<CustomStage> stages;  // t = 1..T-1

  const CustomStage& stage(int t) const { return stages.at(t - 1); }
  static CustomLinear zeros(const Dimensions& dims);
  // Coefficients that reproduce the optimal strategy: a = theta, b = theta_deep - theta.
  static CustomLinear from_optimal(const Dimensions& dims, const RiccatiPass& riccati);
};

using StrategyKind = std::variant<OptimalIDSS, MeanFieldDecentralized, ZeroAction, CustomLinear>;

std::string strategy_name(const StrategyKind& kind);

// Parses "optimal", "meanfield", "zero" or "custom:<file>".
StrategyKind parse_strategy(const std::string& spec, const Dimensions& dims);
CustomLinear load_custom_linear(const std::filesystem::path& path, const Dimensions& dims);
void check_custom_shapes(const CustomLinear& custom, const Dimensions& dims);

// u_i = theta_t xhat_i + alpha_i (theta_deep_t - theta_t) z. Throws for t >= T.
Vector act_optimal(const Vector& xhat_i, const Vector& z, double alpha_i,
                   const RiccatiPass& riccati, int t);

// Same law with the deep-state estimate replaced by the mean-field trajectory.
Vector act_meanfield(const Vector& xhat_i, const Vector& m_t, double alpha_i,
                     const RiccatiPass& riccati, int t);

// m_1 = mean(alpha) mu_x, m_{t+1} = (A+Abar) m_t + (B+Bbar) theta_deep_t m_t.
std::vector<Vector> meanfield_trajectory(const TeamModel& model, const RiccatiPass& riccati);

// Team controller driven by observations only: act() is called once per step
// with every agent's current observation (column i for agent i, who reads
// only that column) and the shared deep observation, and returns the actions
// for step t (zero at t = T). Implementations keep whatever filter state they
// need; the deep action used in their own predictions equals the aggregate of
// the returned actions, which every agent can compute from shared quantities.
class TeamPolicy {
 public:
  virtual ~TeamPolicy() = default;
  virtual Matrix act(int t, const Matrix& y, const Vector& ybar) = 0;
};

std::unique_ptr<TeamPolicy> make_policy(const StrategyKind& kind, const TeamModel& model,
                                        const TeamSolution& solution);

}  // namespace deepteam
