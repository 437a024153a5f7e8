#pragma once

#include <stdexcept>

#include "rccs/model.hpp"

namespace rccs {

/// Stabilizing solution of the discrete algebraic Riccati equation
///   P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q
/// by the structure-preserving doubling iteration.
template <typename Scalar>
Matrix<Scalar> solve_dare(const Matrix<Scalar>& A, const Matrix<Scalar>& B, const Matrix<Scalar>& Q,
                          const Matrix<Scalar>& R, int max_iterations = 100) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols())
    throw std::invalid_argument("solve_dare: dimension mismatch");
  const Matrix<Scalar> identity = Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> Ak = A;
  Matrix<Scalar> Gk = B * R.ldlt().solve(B.transpose());
  Matrix<Scalar> Hk = Q;
  for (int it = 0; it < max_iterations; ++it) {
    const auto W = (identity + Gk * Hk).partialPivLu();
    const Matrix<Scalar> WA = W.solve(Ak);
    const Matrix<Scalar> WG = W.solve(Gk);
    const Matrix<Scalar> H_next = Hk + Ak.transpose() * Hk * WA;
    Gk = Gk + Ak * WG * Ak.transpose();
    Ak = Ak * WA;
    const Scalar change = (H_next - Hk).cwiseAbs().maxCoeff();
    Hk = Scalar(0.5) * (H_next + H_next.transpose());
    if (change <= Scalar(1e-14) * (Scalar(1) + Hk.cwiseAbs().maxCoeff())) return Hk;
  }
  return Hk;
}

/// State feedback u = -K x that is optimal for the infinite-horizon cost.
template <typename Scalar>
Matrix<Scalar> lqr_gain(const DiscreteModel<Scalar>& m, const Matrix<Scalar>& Q, const Matrix<Scalar>& R) {
  const Matrix<Scalar> P = solve_dare<Scalar>(m.A, m.B, Q, R);
  const Matrix<Scalar> S = R + m.B.transpose() * P * m.B;
  return S.ldlt().solve(m.B.transpose() * P * m.A);
}

extern template Matrix<double> solve_dare<double>(const Matrix<double>&, const Matrix<double>&,
                                                  const Matrix<double>&, const Matrix<double>&, int);
extern template Matrix<double> lqr_gain<double>(const DiscreteModel<double>&, const Matrix<double>&,
                                                const Matrix<double>&);

}  // namespace rccs
