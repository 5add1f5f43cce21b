#include "deepteam/riccati.hpp"

#include "deepteam/errors.hpp"

namespace deepteam {

Matrix riccati_step(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                    const Matrix& P_next, int t, Matrix& gain) {
  const Matrix PB = P_next * B;
  const Matrix inner = symmetrized(B.transpose() * PB + R);
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success || !(min_symmetric_eigenvalue(inner) > 0.0))
    throw RiccatiFailure(t);
  const Matrix BtPA = PB.transpose() * A;
  gain = -llt.solve(BtPA);
  // Q + A'PA - A'PB (B'PB+R)^{-1} B'PA, with the last term written as BtPA' * (-gain).
  Matrix P = Q + A.transpose() * P_next * A + BtPA.transpose() * gain;
  if (!P.allFinite()) throw RiccatiFailure(t);
  return symmetrized(P);
}

RiccatiPass solve_riccati(const TeamModel& model) {
  require_valid(model);
  const int T = model.T();
  RiccatiPass pass;
  pass.P.resize(T);
  pass.P_deep.resize(T);
  pass.theta.resize(T - 1);
  pass.theta_deep.resize(T - 1);

  const StageMatrices& last = model.stage(T);
  pass.P[T - 1] = last.Q;
  pass.P_deep[T - 1] = last.Q_deep();
  for (int t = T - 1; t >= 1; --t) {
    const StageMatrices& s = model.stage(t);
    pass.P[t - 1] = riccati_step(s.A, s.B, s.Q, s.R, pass.P[t], t, pass.theta[t - 1]);
    pass.P_deep[t - 1] = riccati_step(s.A_deep(), s.B_deep(), s.Q_deep(), s.R_deep(),
                                      pass.P_deep[t], t, pass.theta_deep[t - 1]);
  }
  return pass;
}

}  // namespace deepteam
