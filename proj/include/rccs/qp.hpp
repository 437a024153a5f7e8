#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rccs/model.hpp"

namespace rccs {

/// Layout of an MPC decision vector z = [x_0..x_N, u_0..u_{N-1}, phi_0..phi_N].
/// All zero for a generic problem.
struct QpDims {
  Eigen::Index horizon = 0;
  Eigen::Index states = 0;
  Eigen::Index inputs = 0;
  Eigen::Index slacks = 0;

  Eigen::Index state_offset(Eigen::Index j) const { return j * states; }
  Eigen::Index input_offset(Eigen::Index j) const { return (horizon + 1) * states + j * inputs; }
  Eigen::Index slack_offset(Eigen::Index j) const { return (horizon + 1) * states + horizon * inputs + j; }
};

/// minimize z'Hz + h'z  subject to  Tz = t,  Gz <= g.
template <typename Scalar>
struct QpProblem {
  Matrix<Scalar> H;
  Vector<Scalar> h;
  Matrix<Scalar> T;
  Vector<Scalar> t;
  Matrix<Scalar> G;
  Vector<Scalar> g;
  QpDims dims;

  Eigen::Index variables() const { return H.rows(); }
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };

const char* to_string(QpStatus status);

/// Multipliers follow 2Hz + h + T'nu + G'lambda = 0 with lambda >= 0.
template <typename Scalar>
struct QpSolution {
  Vector<Scalar> z;
  Vector<Scalar> nu;
  Vector<Scalar> lambda;
  Scalar objective{0};
  int iterations = 0;
  QpStatus status = QpStatus::Infeasible;
};

struct QpSettings {
  int max_iterations = 2000;
  double feasibility_tolerance = 1e-10;
  // Proximal weight used only when H is singular.
  double proximal_weight = 1e-6;
  int max_proximal_rounds = 200;
};

template <typename Scalar>
struct KktResiduals {
  Scalar equality{0};
  Scalar inequality{0};
  Scalar stationarity{0};
  Scalar complementarity{0};
  Scalar dual_sign{0};
};

/// Goldfarb-Idnani dual active-set method for strictly convex QPs.
///
/// The Hessian is factorized once at construction; solve() may then be called
/// for many right-hand sides and constraint sets. The iterate starts at the
/// unconstrained minimizer and adds the most violated constraint each outer
/// step, dropping active constraints whose multipliers would turn negative.
/// The reported iteration count is the number of active-set changes.
template <typename Scalar>
class DualActiveSetSolver {
 public:
  explicit DualActiveSetSolver(const Matrix<Scalar>& H, QpSettings settings = {}) : settings_(settings) {
    if (H.rows() != H.cols()) throw std::invalid_argument("DualActiveSetSolver: Hessian must be square");
    const Matrix<Scalar> hessian = Scalar(2) * H;
    Eigen::LLT<Matrix<Scalar>> llt(hessian);
    const Eigen::Index n = H.rows();
    if (llt.info() != Eigen::Success) return;
    const Matrix<Scalar> L = llt.matrixL();
    const Scalar min_pivot = L.diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > Scalar(1e-13) * std::max(Scalar(1), L.diagonal().cwiseAbs().maxCoeff()))) return;
    J0_ = L.template triangularView<Eigen::Lower>().solve(Matrix<Scalar>::Identity(n, n)).transpose();
    factorized_ = true;
  }

  bool factorized() const { return factorized_; }
  Eigen::Index variables() const { return J0_.rows(); }

  QpSolution<Scalar> solve(const Vector<Scalar>& h, const Matrix<Scalar>& T, const Vector<Scalar>& t,
                           const Matrix<Scalar>& G, const Vector<Scalar>& g) const;

 private:
  QpSettings settings_;
  Matrix<Scalar> J0_;
  bool factorized_ = false;
};

namespace detail {

template <typename Scalar>
struct ActiveSet {
  Eigen::Index n = 0;
  Eigen::Index q = 0;
  Matrix<Scalar> J;
  Matrix<Scalar> R;
  std::vector<Eigen::Index> constraint;  // >= 0 inequality row, < 0 equality row -1-i
  Vector<Scalar> u;                      // u[q] is the multiplier of the candidate
  Scalar r_norm{1};

  ActiveSet(const Matrix<Scalar>& J0)
      : n(J0.rows()), J(J0), R(Matrix<Scalar>::Zero(n, n)), constraint(n + 1, 0), u(Vector<Scalar>::Zero(n + 1)) {}

  // Rotates d so that entries below q vanish, extends R by one column.
  bool add(Vector<Scalar>& d) {
    using std::abs;
    for (Eigen::Index j = n - 1; j >= q + 1; --j) {
      Scalar cc = d(j - 1);
      Scalar ss = d(j);
      const Scalar hyp = std::hypot(cc, ss);
      if (hyp == Scalar(0)) continue;
      d(j) = Scalar(0);
      ss /= hyp;
      cc /= hyp;
      if (cc < Scalar(0)) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -hyp;
      } else {
        d(j - 1) = hyp;
      }
      const Scalar xny = ss / (Scalar(1) + cc);
      for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar t1 = J(k, j - 1);
        const Scalar t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    R.col(q).head(q + 1) = d.head(q + 1);
    ++q;
    r_norm = std::max(r_norm, abs(d(q - 1)));
    return abs(d(q - 1)) > std::numeric_limits<Scalar>::epsilon() * r_norm;
  }

  // Removes the constraint with identifier id and restores triangularity.
  void remove(Eigen::Index id) {
    Eigen::Index qq = -1;
    for (Eigen::Index i = 0; i < q; ++i)
      if (constraint[i] == id) {
        qq = i;
        break;
      }
    if (qq < 0) return;
    for (Eigen::Index i = qq; i < q - 1; ++i) {
      constraint[i] = constraint[i + 1];
      u(i) = u(i + 1);
      R.col(i) = R.col(i + 1);
    }
    constraint[q - 1] = constraint[q];
    u(q - 1) = u(q);
    constraint[q] = 0;
    u(q) = Scalar(0);
    R.col(q - 1).setZero();
    --q;
    for (Eigen::Index j = qq; j < q; ++j) {
      Scalar cc = R(j, j);
      Scalar ss = R(j + 1, j);
      const Scalar hyp = std::hypot(cc, ss);
      if (hyp == Scalar(0)) continue;
      cc /= hyp;
      ss /= hyp;
      R(j + 1, j) = Scalar(0);
      if (cc < Scalar(0)) {
        R(j, j) = -hyp;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = hyp;
      }
      const Scalar xny = ss / (Scalar(1) + cc);
      for (Eigen::Index k = j + 1; k < q; ++k) {
        const Scalar t1 = R(j, k);
        const Scalar t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar t1 = J(k, j);
        const Scalar t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (J(k, j) + t1) - t2;
      }
    }
  }

  // Primal step direction z and dual step direction r for a constraint normal.
  void directions(const Vector<Scalar>& normal, Vector<Scalar>& d, Vector<Scalar>& z, Vector<Scalar>& r) const {
    d.noalias() = J.transpose() * normal;
    z.noalias() = J.rightCols(n - q) * d.tail(n - q);
    if (q > 0) {
      r.head(q) = R.topLeftCorner(q, q).template triangularView<Eigen::Upper>().solve(d.head(q));
    }
  }
};

}  // namespace detail

template <typename Scalar>
QpSolution<Scalar> DualActiveSetSolver<Scalar>::solve(const Vector<Scalar>& h, const Matrix<Scalar>& T,
                                                      const Vector<Scalar>& t, const Matrix<Scalar>& G,
                                                      const Vector<Scalar>& g) const {
  using std::abs;
  if (!factorized_) throw std::logic_error("DualActiveSetSolver: Hessian is not positive definite");
  const Eigen::Index n = J0_.rows();
  const Eigen::Index me = T.rows();
  const Eigen::Index mi = G.rows();
  if (h.size() != n || (me > 0 && T.cols() != n) || t.size() != me || (mi > 0 && G.cols() != n) ||
      g.size() != mi)
    throw std::invalid_argument("DualActiveSetSolver: dimension mismatch");

  QpSolution<Scalar> sol;
  detail::ActiveSet<Scalar> active(J0_);
  Vector<Scalar> x = -(J0_ * (J0_.transpose() * h));
  Vector<Scalar> d(n), z(n), r(n + 1);
  const Scalar tol = Scalar(settings_.feasibility_tolerance);

  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.z = x;
    sol.nu = Vector<Scalar>::Zero(me);
    sol.lambda = Vector<Scalar>::Zero(mi);
    for (Eigen::Index i = 0; i < active.q; ++i) {
      const Eigen::Index id = active.constraint[i];
      if (id < 0)
        sol.nu(-1 - id) = -active.u(i);
      else
        sol.lambda(id) = active.u(i);
    }
    // z'Hz + h'z with 2H = J^-T J^-1 is evaluated directly by the caller when needed.
    return sol;
  };

  for (Eigen::Index i = 0; i < me; ++i) {
    const Vector<Scalar> normal = T.row(i).transpose();
    active.directions(normal, d, z, r);
    const Scalar residual = t(i) - normal.dot(x);
    const Scalar zz = z.dot(z);
    if (zz <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + normal.squaredNorm())) {
      if (abs(residual) <= Scalar(1e-9) * (Scalar(1) + abs(t(i)))) continue;  // redundant row
      return finish(QpStatus::Infeasible);
    }
    const Scalar step = residual / z.dot(normal);
    x += step * z;
    active.u(active.q) = step;
    if (active.q > 0) active.u.head(active.q) -= step * r.head(active.q);
    active.constraint[active.q] = -1 - i;
    if (!active.add(d)) return finish(QpStatus::Infeasible);
  }
  const Eigen::Index equality_count = active.q;

  std::vector<char> excluded(static_cast<std::size_t>(mi), 0);
  std::vector<char> is_active(static_cast<std::size_t>(mi), 0);
  Vector<Scalar> slack(mi);
  for (;;) {
    if (sol.iterations >= settings_.max_iterations) return finish(QpStatus::MaxIterations);
    // Most violated inequality.
    slack.noalias() = g - G * x;
    Eigen::Index ip = -1;
    Scalar worst = Scalar(0);
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (is_active[i] || excluded[i]) continue;
      const Scalar threshold = -tol * (Scalar(1) + abs(g(i)));
      if (slack(i) < threshold && slack(i) < worst) {
        worst = slack(i);
        ip = i;
      }
    }
    if (ip < 0) return finish(QpStatus::Optimal);

    const Vector<Scalar> normal = -G.row(ip).transpose();
    Scalar violation = slack(ip);  // n'x - b, negative
    active.u(active.q) = Scalar(0);
    active.constraint[active.q] = ip;
    for (;;) {
      ++sol.iterations;
      if (sol.iterations > settings_.max_iterations) return finish(QpStatus::MaxIterations);
      active.directions(normal, d, z, r);
      Scalar step_dual = std::numeric_limits<Scalar>::infinity();
      Eigen::Index blocking = -1;
      for (Eigen::Index k = equality_count; k < active.q; ++k) {
        if (r(k) > Scalar(0)) {
          const Scalar ratio = active.u(k) / r(k);
          if (ratio < step_dual) {
            step_dual = ratio;
            blocking = active.constraint[k];
          }
        }
      }
      Scalar step_primal = std::numeric_limits<Scalar>::infinity();
      const Scalar zn = z.dot(normal);
      if (z.dot(z) > std::numeric_limits<Scalar>::epsilon() * Scalar(1e-6) * normal.squaredNorm() &&
          zn > Scalar(0))
        step_primal = -violation / zn;
      const Scalar step = std::min(step_dual, step_primal);
      if (!std::isfinite(step)) return finish(QpStatus::Infeasible);
      if (!std::isfinite(step_primal)) {
        if (active.q > 0) active.u.head(active.q) -= step * r.head(active.q);
        active.u(active.q) += step;
        is_active[blocking] = 0;
        active.remove(blocking);
        continue;
      }
      x += step * z;
      if (active.q > 0) active.u.head(active.q) -= step * r.head(active.q);
      active.u(active.q) += step;
      if (step == step_primal) {
        if (!active.add(d)) {
          active.remove(ip);
          excluded[ip] = 1;
        } else {
          is_active[ip] = 1;
          std::fill(excluded.begin(), excluded.end(), 0);
        }
        break;
      }
      is_active[blocking] = 0;
      active.remove(blocking);
      violation = normal.dot(x) + g(ip);
    }
  }
}

template <typename Scalar>
Scalar qp_objective(const QpProblem<Scalar>& p, const Vector<Scalar>& z) {
  return z.dot(p.H * z) + p.h.dot(z);
}

template <typename Scalar>
KktResiduals<Scalar> kkt_residuals(const QpProblem<Scalar>& p, const QpSolution<Scalar>& s) {
  KktResiduals<Scalar> k;
  const Vector<Scalar>& z = s.z;
  if (p.T.rows() > 0) k.equality = (p.T * z - p.t).cwiseAbs().maxCoeff();
  Vector<Scalar> grad = Scalar(2) * p.H * z + p.h;
  if (p.T.rows() > 0) grad += p.T.transpose() * s.nu;
  if (p.G.rows() > 0) {
    const Vector<Scalar> slack = p.g - p.G * z;
    k.inequality = std::max(Scalar(0), (-slack).maxCoeff());
    k.complementarity = (s.lambda.cwiseProduct(slack)).cwiseAbs().maxCoeff();
    k.dual_sign = std::max(Scalar(0), (-s.lambda).maxCoeff());
    grad += p.G.transpose() * s.lambda;
  }
  k.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : Scalar(0);
  return k;
}

/// Solves a dense QP. A singular (positive semidefinite) Hessian is handled
/// by proximal-point rounds on top of the strictly convex solver.
template <typename Scalar>
QpSolution<Scalar> solve_qp(const QpProblem<Scalar>& p, const QpSettings& settings = {}) {
  const Eigen::Index n = p.variables();
  if (p.H.cols() != n || p.h.size() != n || (p.T.rows() > 0 && p.T.cols() != n) || p.t.size() != p.T.rows() ||
      (p.G.rows() > 0 && p.G.cols() != n) || p.g.size() != p.G.rows())
    throw std::invalid_argument("solve_qp: dimension mismatch");
  const Matrix<Scalar> T = p.T.rows() > 0 ? p.T : Matrix<Scalar>(0, n);
  const Matrix<Scalar> G = p.G.rows() > 0 ? p.G : Matrix<Scalar>(0, n);

  DualActiveSetSolver<Scalar> direct(p.H, settings);
  QpSolution<Scalar> sol;
  if (direct.factorized()) {
    sol = direct.solve(p.h, T, p.t, G, p.g);
  } else {
    const Scalar eps = Scalar(settings.proximal_weight) * (Scalar(1) + p.H.diagonal().cwiseAbs().maxCoeff());
    DualActiveSetSolver<Scalar> proximal(p.H + eps * Matrix<Scalar>::Identity(n, n), settings);
    Vector<Scalar> center = Vector<Scalar>::Zero(n);
    int iterations = 0;
    for (int round = 0; round < settings.max_proximal_rounds; ++round) {
      sol = proximal.solve(p.h - Scalar(2) * eps * center, T, p.t, G, p.g);
      iterations += sol.iterations;
      if (sol.status != QpStatus::Optimal) break;
      const Scalar change = (sol.z - center).cwiseAbs().maxCoeff();
      center = sol.z;
      if (change <= Scalar(1e-13) * (Scalar(1) + center.cwiseAbs().maxCoeff())) break;
    }
    sol.iterations = iterations;
    // The multipliers above belong to the shifted objective; recover them for
    // the original one by least squares on the active constraints.
    if (sol.status == QpStatus::Optimal) {
      std::vector<Eigen::Index> rows;
      const Vector<Scalar> slack = p.g - G * sol.z;
      for (Eigen::Index i = 0; i < G.rows(); ++i)
        if (sol.lambda(i) > Scalar(0) || std::abs(slack(i)) <= Scalar(1e-9) * (Scalar(1) + std::abs(p.g(i))))
          rows.push_back(i);
      Matrix<Scalar> A(n, T.rows() + static_cast<Eigen::Index>(rows.size()));
      A.leftCols(T.rows()) = T.transpose();
      for (std::size_t k = 0; k < rows.size(); ++k) A.col(T.rows() + static_cast<Eigen::Index>(k)) = G.row(rows[k]).transpose();
      const Vector<Scalar> rhs = -(Scalar(2) * p.H * sol.z + p.h);
      const Vector<Scalar> mult = A.completeOrthogonalDecomposition().solve(rhs);
      sol.nu = mult.head(T.rows());
      sol.lambda.setZero();
      for (std::size_t k = 0; k < rows.size(); ++k)
        sol.lambda(rows[k]) = std::max(Scalar(0), mult(T.rows() + static_cast<Eigen::Index>(k)));
    }
  }
  sol.objective = qp_objective(p, sol.z);
  return sol;
}

extern template class DualActiveSetSolver<double>;
extern template QpSolution<double> solve_qp<double>(const QpProblem<double>&, const QpSettings&);
extern template KktResiduals<double> kkt_residuals<double>(const QpProblem<double>&, const QpSolution<double>&);

}  // namespace rccs
