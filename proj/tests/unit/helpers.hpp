#pragma once

#include <doctest.h>

#include "deepteam/model.hpp"
#include "deepteam/reference.hpp"

namespace dt_test {

using deepteam::Matrix;
using deepteam::Vector;

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline double entry(const Matrix& m) { return m(0, 0); }

// Scalar model with every matrix given explicitly.
struct ScalarSpec {
  int n = 2;
  int T = 2;
  double A = 1, Abar = 0, B = 1, Bbar = 0, E = 1, Ebar = 0;
  double C = 1, Cbar = 0, S = 1, Sbar = 0, Q = 1, Qbar = 0, R = 1, Rbar = 0;
  double mu = 0, Sx = 1, Sw = 1, Sv = 1;
};

inline deepteam::TeamModel scalar_model(const ScalarSpec& p) {
  deepteam::Dimensions d;
  d.n = p.n;
  d.T = p.T;
  deepteam::StageMatrices s;
  s.A = scalar(p.A);
  s.Abar = scalar(p.Abar);
  s.B = scalar(p.B);
  s.Bbar = scalar(p.Bbar);
  s.E = scalar(p.E);
  s.Ebar = scalar(p.Ebar);
  s.C = scalar(p.C);
  s.Cbar = scalar(p.Cbar);
  s.S = scalar(p.S);
  s.Sbar = scalar(p.Sbar);
  s.Q = scalar(p.Q);
  s.Qbar = scalar(p.Qbar);
  s.R = scalar(p.R);
  s.Rbar = scalar(p.Rbar);
  deepteam::NoiseModel noise{Vector::Constant(1, p.mu), scalar(p.Sx), {scalar(p.Sw)}, {scalar(p.Sv)}};
  return deepteam::assemble_model(d, {s}, std::move(noise), deepteam::InfluenceVector::homogeneous(p.n));
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace dt_test
