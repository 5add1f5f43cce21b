#pragma once

#include <cstdint>
#include <vector>

#include "deepteam/model.hpp"
#include "deepteam/rng.hpp"
#include "deepteam/strategy.hpp"

namespace deepteam {

// Scalar two-agent model: alpha = (1, 1), A = B = E = C = S = 1, Q = R = 1,
// all bar matrices zero, mu_x = 0, unit noise.
TeamModel reference_model_s1(int T = 2);

// reference_model_s1 with Abar = 1 and Qbar = 1.
TeamModel reference_model_s2(int T = 2);

struct RandomModelOptions {
  std::vector<int> n_choices{2, 3, 5};
  int max_dx = 3;
  int max_dy = 3;
  int max_du = 2;
  int max_T = 10;
};

// Validated model with random stable-ish dynamics, PD noise, PD R and a
// normalized influence vector that may contain negative entries.
TeamModel random_team_model(SplitMixStream& rng, const RandomModelOptions& options = {});

// Normalized influence vector of length n with entries bounded away from zero.
InfluenceVector random_influence(SplitMixStream& rng, int n);

CustomLinear random_custom_linear(SplitMixStream& rng, const Dimensions& dims, double scale = 0.3);

}  // namespace deepteam
