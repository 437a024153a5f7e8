#pragma once

#include <cmath>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "rccs/model.hpp"
#include "rccs/qp.hpp"
#include "rccs/riccati.hpp"

namespace rccs {

enum class TerminalCost { Riccati, StageCost };

/// Cost weights are continuous-time rates; the stage cost used at period h_d
/// is h_d times the rate so objectives stay comparable across frequencies.
template <typename Scalar>
struct MpcSpec {
  Matrix<Scalar> state_cost_rate;
  Matrix<Scalar> input_cost_rate;
  Scalar slack_weight{1e5};
  Scalar slack_linear_weight{0};
  Scalar horizon_time{0.9};
  Vector<Scalar> u_min;
  Vector<Scalar> u_max;
  // Soft bounds; infinite entries leave a state unconstrained.
  Vector<Scalar> x_min;
  Vector<Scalar> x_max;
  TerminalCost terminal = TerminalCost::Riccati;

  static MpcSpec ball_and_beam_default(const PlantParams& params = {}) {
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    const Scalar quarter_pi = Scalar(0.78539816339744830962);
    MpcSpec spec;
    spec.state_cost_rate = Vector<Scalar>::Map(std::array<Scalar, 3>{100, 1, 1}.data(), 3).asDiagonal();
    spec.input_cost_rate = Matrix<Scalar>::Constant(1, 1, Scalar(0.1));
    spec.u_min = Vector<Scalar>::Constant(1, Scalar(-params.input_limit));
    spec.u_max = Vector<Scalar>::Constant(1, Scalar(params.input_limit));
    spec.x_min = Vector<Scalar>(3);
    spec.x_max = Vector<Scalar>(3);
    spec.x_min << Scalar(-params.beam_half_length), -inf, -quarter_pi;
    spec.x_max << Scalar(params.beam_half_length), inf, quarter_pi;
    return spec;
  }
};

/// Number of prediction steps covering the continuous horizon.
template <typename Scalar>
Eigen::Index horizon(Scalar horizon_time, Scalar h_d) {
  if (!(horizon_time > Scalar(0)) || !(h_d > Scalar(0)))
    throw std::invalid_argument("horizon: N_c and h_d must be positive");
  return static_cast<Eigen::Index>(std::ceil(horizon_time / h_d - Scalar(1e-9)));
}

template <typename Scalar>
Matrix<Scalar> terminal_cost(const MpcSpec<Scalar>& spec, const DiscreteModel<Scalar>& model) {
  const Matrix<Scalar> Q = model.h * spec.state_cost_rate;
  const Matrix<Scalar> R = model.h * spec.input_cost_rate;
  if (spec.terminal == TerminalCost::StageCost) return Q;
  return solve_dare<Scalar>(model.A, model.B, Q, R);
}

namespace detail {

template <typename Scalar>
void check_spec(const MpcSpec<Scalar>& spec, Eigen::Index n, Eigen::Index m) {
  if (spec.state_cost_rate.rows() != n || spec.state_cost_rate.cols() != n || spec.input_cost_rate.rows() != m ||
      spec.input_cost_rate.cols() != m || spec.u_min.size() != m || spec.u_max.size() != m ||
      spec.x_min.size() != n || spec.x_max.size() != n)
    throw std::invalid_argument("MpcSpec: dimension mismatch with model");
}

}  // namespace detail

/// Assembles the soft-constrained MPC quadratic program over
/// z = [x_0..x_N, u_0..u_{N-1}, phi_0..phi_N] for the period of `model`.
template <typename Scalar>
QpProblem<Scalar> build_qp(const MpcSpec<Scalar>& spec, const DiscreteModel<Scalar>& model,
                           const Vector<Scalar>& x0, const Vector<Scalar>& x_s,
                           const Matrix<Scalar>* terminal = nullptr) {
  using std::isfinite;
  const Eigen::Index n = model.states();
  const Eigen::Index m = model.inputs();
  detail::check_spec(spec, n, m);
  if (x0.size() != n || x_s.size() != n) throw std::invalid_argument("build_qp: state dimension mismatch");
  const Eigen::Index N = horizon(spec.horizon_time, model.h);

  QpProblem<Scalar> p;
  p.dims = {N, n, m, N + 1};
  const Eigen::Index nz = (N + 1) * n + N * m + (N + 1);
  const Matrix<Scalar> Q = model.h * spec.state_cost_rate;
  const Matrix<Scalar> R = model.h * spec.input_cost_rate;
  const Matrix<Scalar> P = terminal ? *terminal : terminal_cost(spec, model);

  p.H = Matrix<Scalar>::Zero(nz, nz);
  p.h = Vector<Scalar>::Zero(nz);
  for (Eigen::Index j = 0; j <= N; ++j) {
    const Matrix<Scalar>& W = (j < N) ? Q : P;
    const Eigen::Index o = p.dims.state_offset(j);
    p.H.block(o, o, n, n) = W;
    p.h.segment(o, n) = Scalar(-2) * W * x_s;
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    const Eigen::Index o = p.dims.input_offset(j);
    p.H.block(o, o, m, m) = R;
  }
  for (Eigen::Index j = 0; j <= N; ++j) {
    const Eigen::Index o = p.dims.slack_offset(j);
    p.H(o, o) = spec.slack_weight;
    p.h(o) = spec.slack_linear_weight;
  }

  p.T = Matrix<Scalar>::Zero((N + 1) * n, nz);
  p.t = Vector<Scalar>::Zero((N + 1) * n);
  p.T.block(0, 0, n, n).setIdentity();
  p.t.head(n) = x0;
  for (Eigen::Index j = 0; j < N; ++j) {
    const Eigen::Index row = (j + 1) * n;
    p.T.block(row, p.dims.state_offset(j + 1), n, n).setIdentity();
    p.T.block(row, p.dims.state_offset(j), n, n) = -model.A;
    p.T.block(row, p.dims.input_offset(j), n, m) = -model.B;
  }

  Eigen::Index rows = 0;
  for (Eigen::Index i = 0; i < m; ++i) rows += N * (isfinite(spec.u_min(i)) + isfinite(spec.u_max(i)));
  for (Eigen::Index i = 0; i < n; ++i) rows += (N + 1) * (isfinite(spec.x_min(i)) + isfinite(spec.x_max(i)));
  rows += N + 1;
  p.G = Matrix<Scalar>::Zero(rows, nz);
  p.g = Vector<Scalar>::Zero(rows);
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < N; ++j) {
    const Eigen::Index o = p.dims.input_offset(j);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (isfinite(spec.u_max(i))) {
        p.G(r, o + i) = Scalar(1);
        p.g(r++) = spec.u_max(i);
      }
      if (isfinite(spec.u_min(i))) {
        p.G(r, o + i) = Scalar(-1);
        p.g(r++) = -spec.u_min(i);
      }
    }
  }
  for (Eigen::Index j = 0; j <= N; ++j) {
    const Eigen::Index o = p.dims.state_offset(j);
    const Eigen::Index s = p.dims.slack_offset(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (isfinite(spec.x_max(i))) {
        p.G(r, o + i) = Scalar(1);
        p.G(r, s) = Scalar(-1);
        p.g(r++) = spec.x_max(i);
      }
      if (isfinite(spec.x_min(i))) {
        p.G(r, o + i) = Scalar(-1);
        p.G(r, s) = Scalar(-1);
        p.g(r++) = -spec.x_min(i);
      }
    }
  }
  for (Eigen::Index j = 0; j <= N; ++j) p.G(r++, p.dims.slack_offset(j)) = Scalar(-1);
  return p;
}

/// Forward-simulates the base-rate model over the dead time, applying the
/// inputs already committed for those ticks (one column per tick).
template <typename Scalar>
Vector<Scalar> estimate_state(const Vector<Scalar>& x_meas, const Matrix<Scalar>& pending_inputs,
                              const DiscreteModel<Scalar>& base_model) {
  Vector<Scalar> x = x_meas;
  for (Eigen::Index k = 0; k < pending_inputs.cols(); ++k) x = base_model.A * x + base_model.B * pending_inputs.col(k);
  return x;
}

template <typename Scalar>
struct ControlRequest {
  std::int64_t k = 0;
  Vector<Scalar> x;
  Matrix<Scalar> pending_inputs;  // m x (h_d / h_q)
  Scalar h_d{0};
  Vector<Scalar> x_target;
};

template <typename Scalar>
struct ControlResponse {
  std::int64_t k = 0;
  Scalar h_d{0};
  Matrix<Scalar> u_seq;             // m x N, column i is u(i)
  Matrix<Scalar> predicted_states;  // n x (N+1)
  int iterations = 0;
  Scalar processing_time{0};
  QpStatus status = QpStatus::Optimal;
  bool degraded = false;

  Eigen::Index horizon() const { return u_seq.cols(); }
};

/// Variable-rate MPC. Problem data that only depends on the period
/// (discretization, terminal cost, condensed Hessian and its factorization)
/// is memoized per period, so step() is a pure function of its request and
/// safe to call concurrently.
template <typename Scalar>
class MpcController {
 public:
  struct Prepared {
    Eigen::Index N = 0;
    DiscreteModel<Scalar> model;
    Matrix<Scalar> terminal;
    QpProblem<Scalar> base;     // assembled at x0 = 0, x_s = 0
    Matrix<Scalar> lift;        // z = [Phi x0; 0; 0] + lift * y
    Matrix<Scalar> free_state;  // Phi: stacked states for zero input
    Matrix<Scalar> reduced_G;
    Matrix<Scalar> G_free;      // G * [Phi; 0; 0]
    Matrix<Scalar> cross;       // lift' H [Phi; 0; 0]
    Matrix<Scalar> target_gain; // lift' * d(h)/d(x_s)
    Vector<Scalar> lift_h0;     // lift' * h at x_s = 0
    std::unique_ptr<DualActiveSetSolver<Scalar>> solver;
  };

  MpcController(ContinuousModel<Scalar> plant, MpcSpec<Scalar> spec, Scalar base_period, QpSettings settings = {})
      : plant_(std::move(plant)),
        spec_(std::move(spec)),
        base_period_(base_period),
        settings_(settings),
        base_model_(discretize(plant_, base_period)) {
    detail::check_spec(spec_, plant_.states(), plant_.inputs());
  }

  const MpcSpec<Scalar>& spec() const { return spec_; }
  const ContinuousModel<Scalar>& plant() const { return plant_; }
  const DiscreteModel<Scalar>& base_model() const { return base_model_; }
  Scalar base_period() const { return base_period_; }

  std::shared_ptr<const Prepared> prepare(Scalar h_d) const {
    const auto key = static_cast<std::int64_t>(std::llround(h_d * Scalar(1e9)));
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    auto prepared = build_prepared(h_d);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, std::move(prepared)).first->second;
  }

  /// Condensed solve of build_qp(spec, model(h_d), x0, x_s). Returns the full
  /// decision vector and the inequality multipliers of the full problem.
  QpSolution<Scalar> solve(const Prepared& prep, const Vector<Scalar>& x0, const Vector<Scalar>& x_s) const {
    const Eigen::Index n = plant_.states();
    if (x0.size() != n || x_s.size() != n) throw std::invalid_argument("MpcController: state dimension mismatch");
    const Vector<Scalar> hy = Scalar(2) * prep.cross * x0 + prep.target_gain * x_s + prep.lift_h0;
    const Vector<Scalar> gy = prep.base.g - prep.G_free * x0;
    const Matrix<Scalar> no_eq(0, prep.lift.cols());
    QpSolution<Scalar> reduced = prep.solver->solve(hy, no_eq, Vector<Scalar>(0), prep.reduced_G, gy);
    QpSolution<Scalar> full;
    full.z = prep.lift * reduced.z;
    full.z.head(prep.free_state.rows()) += prep.free_state * x0;
    full.lambda = reduced.lambda;
    full.iterations = reduced.iterations;
    full.status = reduced.status;
    return full;
  }

  ControlResponse<Scalar> step(const ControlRequest<Scalar>& request) const {
    const Eigen::Index n = plant_.states();
    const Eigen::Index m = plant_.inputs();
    if (request.x.size() != n || request.x_target.size() != n)
      throw std::invalid_argument("MpcController::step: state dimension mismatch");
    if (request.pending_inputs.cols() > 0 && request.pending_inputs.rows() != m)
      throw std::invalid_argument("MpcController::step: pending input dimension mismatch");
    const auto prep = prepare(request.h_d);
    const Vector<Scalar> x0 = estimate_state<Scalar>(request.x, request.pending_inputs, base_model_);
    const QpSolution<Scalar> sol = solve(*prep, x0, request.x_target);

    ControlResponse<Scalar> r;
    r.k = request.k;
    r.h_d = request.h_d;
    r.iterations = sol.iterations;
    r.status = sol.status;
    r.degraded = sol.status != QpStatus::Optimal;
    const QpDims& dims = prep->base.dims;
    r.u_seq.resize(m, prep->N);
    for (Eigen::Index j = 0; j < prep->N; ++j) {
      Vector<Scalar> u = sol.z.segment(dims.input_offset(j), m);
      if (r.degraded) u = u.cwiseMax(spec_.u_min).cwiseMin(spec_.u_max);
      r.u_seq.col(j) = u;
    }
    r.predicted_states.resize(n, prep->N + 1);
    for (Eigen::Index j = 0; j <= prep->N; ++j) r.predicted_states.col(j) = sol.z.segment(dims.state_offset(j), n);
    return r;
  }

 private:
  std::shared_ptr<const Prepared> build_prepared(Scalar h_d) const {
    if (!(h_d > Scalar(0))) throw std::invalid_argument("MpcController: period must be positive");
    auto prep = std::make_shared<Prepared>();
    const Eigen::Index n = plant_.states();
    const Eigen::Index m = plant_.inputs();
    prep->model = discretize(plant_, h_d);
    prep->N = horizon(spec_.horizon_time, h_d);
    prep->terminal = terminal_cost(spec_, prep->model);
    const Vector<Scalar> zero = Vector<Scalar>::Zero(n);
    prep->base = build_qp(spec_, prep->model, zero, zero, &prep->terminal);
    const Eigen::Index N = prep->N;
    const QpDims& dims = prep->base.dims;
    const Eigen::Index nz = prep->base.variables();
    const Eigen::Index nx = (N + 1) * n;
    const Eigen::Index ny = N * m + (N + 1);

    prep->free_state = Matrix<Scalar>::Zero(nx, n);
    Matrix<Scalar> power = Matrix<Scalar>::Identity(n, n);
    for (Eigen::Index j = 0; j <= N; ++j) {
      prep->free_state.block(j * n, 0, n, n) = power;
      power = prep->model.A * power;
    }
    prep->lift = Matrix<Scalar>::Zero(nz, ny);
    for (Eigen::Index j = 1; j <= N; ++j) {
      // x_j = A x_{j-1} + B u_{j-1}
      prep->lift.block(j * n, 0, n, ny) = prep->model.A * prep->lift.block((j - 1) * n, 0, n, ny);
      prep->lift.block(j * n, (j - 1) * m, n, m) += prep->model.B;
    }
    for (Eigen::Index j = 0; j < N; ++j) prep->lift.block(dims.input_offset(j), j * m, m, m).setIdentity();
    for (Eigen::Index j = 0; j <= N; ++j) prep->lift(dims.slack_offset(j), N * m + j) = Scalar(1);

    Matrix<Scalar> free_full = Matrix<Scalar>::Zero(nz, n);
    free_full.topRows(nx) = prep->free_state;
    const Matrix<Scalar> reduced_H = prep->lift.transpose() * prep->base.H * prep->lift;
    prep->cross = prep->lift.transpose() * prep->base.H * free_full;
    prep->reduced_G = prep->base.G * prep->lift;
    prep->G_free = prep->base.G * free_full;
    // h(x_s) = h0 + D x_s with D stacking -2 W_j for every state block.
    Matrix<Scalar> D = Matrix<Scalar>::Zero(nz, n);
    for (Eigen::Index j = 0; j <= N; ++j)
      D.block(dims.state_offset(j), 0, n, n) = Scalar(-2) * prep->base.H.block(dims.state_offset(j), dims.state_offset(j), n, n);
    prep->target_gain = prep->lift.transpose() * D;
    prep->lift_h0 = prep->lift.transpose() * prep->base.h;
    prep->solver = std::make_unique<DualActiveSetSolver<Scalar>>(Scalar(0.5) * (reduced_H + reduced_H.transpose()), settings_);
    if (!prep->solver->factorized()) throw std::invalid_argument("MpcController: condensed Hessian is not positive definite");
    return prep;
  }

  ContinuousModel<Scalar> plant_;
  MpcSpec<Scalar> spec_;
  Scalar base_period_;
  QpSettings settings_;
  DiscreteModel<Scalar> base_model_;
  mutable std::mutex mutex_;
  mutable std::map<std::int64_t, std::shared_ptr<const Prepared>> cache_;
};

/// One-shot MPC evaluation: horizon, discretization at h_d, dead-time state
/// estimate, QP assembly and solve.
template <typename Scalar>
ControlResponse<Scalar> mpc_step(const Vector<Scalar>& x_meas, const Matrix<Scalar>& pending_inputs, Scalar h_d,
                                 const Vector<Scalar>& x_s, const MpcSpec<Scalar>& spec,
                                 const ContinuousModel<Scalar>& plant, Scalar base_period) {
  MpcController<Scalar> controller(plant, spec, base_period);
  ControlRequest<Scalar> request;
  request.x = x_meas;
  request.pending_inputs = pending_inputs;
  request.h_d = h_d;
  request.x_target = x_s;
  return controller.step(request);
}

extern template class MpcController<double>;
extern template QpProblem<double> build_qp<double>(const MpcSpec<double>&, const DiscreteModel<double>&,
                                                   const Vector<double>&, const Vector<double>&,
                                                   const Matrix<double>*);

}  // namespace rccs
