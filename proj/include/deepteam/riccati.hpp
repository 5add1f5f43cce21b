#pragma once

#include "deepteam/model.hpp"

namespace deepteam {

// Backward solution of the local recursion (A, B, Q, R) and the deep recursion
// (A+Abar, B+Bbar, Q+Qbar, R+Rbar). Index k of P / P_deep is t = k+1; gains
// exist for t = 1..T-1 only since the terminal action is fixed to zero.
struct RiccatiPass {
  MatrixSchedule P;            // dx x dx, t = 1..T
  MatrixSchedule P_deep;       // dx x dx, t = 1..T
  MatrixSchedule theta;        // du x dx, t = 1..T-1
  MatrixSchedule theta_deep;   // du x dx, t = 1..T-1

  const Matrix& gain(int t) const { return theta.at(t - 1); }
  const Matrix& gain_deep(int t) const { return theta_deep.at(t - 1); }
};

// One backward step: returns P_t and writes the gain -(B'PB+R)^{-1} B'P A.
// Throws RiccatiFailure(t) when B'PB+R is not positive definite.
Matrix riccati_step(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                    const Matrix& P_next, int t, Matrix& gain);

RiccatiPass solve_riccati(const TeamModel& model);

}  // namespace deepteam
