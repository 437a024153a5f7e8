#include "rccs/mpc.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace rccs {
namespace {

using Md = Matrix<double>;
using Vd = Vector<double>;

constexpr double kBase = 0.005;

Vd state(double a, double b, double c) { return (Vd(3) << a, b, c).finished(); }

MpcSpec<double> unbounded_spec() {
  auto spec = MpcSpec<double>::ball_and_beam_default();
  const double inf = std::numeric_limits<double>::infinity();
  spec.u_min.setConstant(-inf);
  spec.u_max.setConstant(inf);
  spec.x_min.setConstant(-inf);
  spec.x_max.setConstant(inf);
  return spec;
}

TEST(Horizon, CeilingOfContinuousHorizon) {
  EXPECT_EQ(horizon(0.9, 0.03), 30);
  EXPECT_EQ(horizon(0.9, 0.05), 18);
  EXPECT_EQ(horizon(0.9, 0.1), 9);
  EXPECT_EQ(horizon(0.9, 0.035), 26);
  EXPECT_EQ(horizon(1.0, 0.3), 4);
  EXPECT_THROW(horizon(0.9, 0.0), std::invalid_argument);
}

TEST(BuildQp, DimensionsForSingleStepWithoutBounds) {
  auto spec = unbounded_spec();
  spec.horizon_time = 0.1;
  const auto model = discretize(ball_and_beam<double>(), 0.1);
  const auto p = build_qp<double>(spec, model, Vd::Zero(3), Vd::Zero(3));
  EXPECT_EQ(p.dims.horizon, 1);
  EXPECT_EQ(p.variables(), 3 * 2 + 1 + 2);
  EXPECT_EQ(p.T.rows(), 6);  // x0 pin plus one dynamics block
  EXPECT_EQ(p.G.rows(), 2);  // only phi >= 0
}

TEST(BuildQp, OriginIsOptimalAtRest) {
  const auto spec = MpcSpec<double>::ball_and_beam_default();
  const auto model = discretize(ball_and_beam<double>(), 0.03);
  const auto p = build_qp<double>(spec, model, Vd::Zero(3), Vd::Zero(3));
  EXPECT_EQ(p.h.cwiseAbs().maxCoeff(), 0.0);
  const auto s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_LT(s.z.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildQp, StateCostScalesLinearly) {
  auto spec = MpcSpec<double>::ball_and_beam_default();
  spec.terminal = TerminalCost::StageCost;
  const auto model = discretize(ball_and_beam<double>(), 0.05);
  const auto a = build_qp<double>(spec, model, Vd::Zero(3), Vd::Zero(3));
  spec.state_cost_rate *= 2;
  const auto b = build_qp<double>(spec, model, Vd::Zero(3), Vd::Zero(3));
  for (Eigen::Index j = 0; j <= a.dims.horizon; ++j) {
    const auto o = a.dims.state_offset(j);
    EXPECT_LT((b.H.block(o, o, 3, 3) - 2 * a.H.block(o, o, 3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  }
  const auto o = a.dims.input_offset(0);
  EXPECT_EQ(a.H(o, o), b.H(o, o));
}

TEST(BuildQp, RejectsMismatchedDimensions) {
  const auto spec = MpcSpec<double>::ball_and_beam_default();
  const auto model = discretize(ball_and_beam<double>(), 0.05);
  EXPECT_THROW(build_qp<double>(spec, model, Vd::Zero(2), Vd::Zero(3)), std::invalid_argument);
}

TEST(MpcController, CondensedSolveMatchesFullQp) {
  const auto spec = MpcSpec<double>::ball_and_beam_default();
  MpcController<double> controller(ball_and_beam<double>(), spec, kBase);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-0.6, 0.6), vel(-1.0, 1.0), ang(-0.9, 0.9);
  for (double h_d : {0.03, 0.05, 0.1}) {
    const auto prep = controller.prepare(h_d);
    for (int trial = 0; trial < 20; ++trial) {
      const Vd x0 = state(pos(rng), vel(rng), ang(rng));
      const Vd xs = state(trial % 2 ? 0.5 : -0.5, 0, 0);
      const auto p = build_qp(spec, prep->model, x0, xs);
      const auto full = solve_qp(p);
      const auto condensed = controller.solve(*prep, x0, xs);
      ASSERT_EQ(full.status, QpStatus::Optimal);
      ASSERT_EQ(condensed.status, QpStatus::Optimal);
      const double scale = 1 + full.z.cwiseAbs().maxCoeff();
      EXPECT_LT((full.z - condensed.z).cwiseAbs().maxCoeff(), 1e-6 * scale) << h_d << " " << trial;
      QpSolution<double> check = condensed;
      check.nu = full.nu;
      const auto k = kkt_residuals(p, check);
      EXPECT_LT(k.equality, 1e-8 * (1 + p.t.cwiseAbs().maxCoeff()));
      EXPECT_LT(k.inequality, 1e-8);
      EXPECT_LT(k.complementarity, 1e-6);
    }
  }
}

TEST(MpcController, UnconstrainedFirstActionMatchesRiccatiRecursion) {
  const auto spec = unbounded_spec();
  MpcController<double> controller(ball_and_beam<double>(), spec, kBase);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (double h_d : {0.03, 0.06, 0.1}) {
    const auto prep = controller.prepare(h_d);
    const Md Q = h_d * spec.state_cost_rate;
    const Md R = h_d * spec.input_cost_rate;
    const Md K = oracle::riccati_first_gain(prep->model, Q, R, prep->terminal, static_cast<int>(prep->N));
    for (int trial = 0; trial < 10; ++trial) {
      const Vd x0 = state(u(rng), u(rng), u(rng));
      const Vd xs = state(u(rng), 0, 0);
      ControlRequest<double> req;
      req.x = x0;
      req.h_d = h_d;
      req.x_target = xs;
      const auto r = controller.step(req);
      // x_s is an equilibrium of the integrator chain, so the law acts on the error.
      const double expected = -(K * (x0 - xs))(0);
      EXPECT_NEAR(r.u_seq(0, 0), expected, 1e-6);
    }
  }
}

TEST(MpcController, SoftConstraintActivation) {
  const auto spec = MpcSpec<double>::ball_and_beam_default();
  MpcController<double> controller(ball_and_beam<double>(), spec, kBase);
  const auto prep = controller.prepare(0.05);
  const auto& dims = prep->base.dims;

  const auto outside = controller.solve(*prep, state(0.6, 0, 0), state(0.5, 0, 0));
  ASSERT_EQ(outside.status, QpStatus::Optimal);
  EXPECT_GT(outside.z(dims.slack_offset(0)), 0.04);

  const auto inside = controller.solve(*prep, state(0.1, 0, 0), state(0.0, 0, 0));
  ASSERT_EQ(inside.status, QpStatus::Optimal);
  for (Eigen::Index j = 0; j <= dims.horizon; ++j) EXPECT_LT(inside.z(dims.slack_offset(j)), 1e-9);
}

TEST(MpcController, ObjectiveNonIncreasingAsInputBoundsRelax) {
  const auto model = discretize(ball_and_beam<double>(), 0.05);
  const Vd x0 = state(-0.5, 0.8, 0.3);
  const Vd xs = state(0.5, 0, 0);
  double previous = std::numeric_limits<double>::infinity();
  for (double limit : {0.5, 1.0, 2.0, 5.0, 20.0, 1e3}) {
    auto spec = MpcSpec<double>::ball_and_beam_default();
    spec.u_min.setConstant(-limit);
    spec.u_max.setConstant(limit);
    const auto s = solve_qp(build_qp(spec, model, x0, xs));
    ASSERT_EQ(s.status, QpStatus::Optimal);
    EXPECT_LE(s.objective, previous + 1e-9 * std::abs(previous));
    previous = s.objective;
  }
}

TEST(MpcController, FirstActionIsSmoothAcrossFrequencySwitch) {
  MpcController<double> controller(ball_and_beam<double>(), MpcSpec<double>::ball_and_beam_default(), kBase);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (double h_d : {0.03, 0.05}) {
    for (int trial = 0; trial < 10; ++trial) {
      ControlRequest<double> req;
      req.x = state(u(rng), u(rng), 0.2 * u(rng));
      req.x_target = state(trial % 2 ? 0.5 : -0.5, 0, 0);
      req.h_d = h_d;
      const auto fast = controller.step(req);
      req.h_d = 2 * h_d;
      const auto slow = controller.step(req);
      // The slow first action spans two fast steps. Compare the action
      // integrated over that shared interval, which is what reaches the plant.
      const double a = h_d * (fast.u_seq(0, 0) + fast.u_seq(0, 1));
      const double b = 2 * h_d * slow.u_seq(0, 0);
      EXPECT_LE(std::abs(a - b), 0.10 * std::max(std::abs(a), std::abs(b))) << h_d << " " << trial;
    }
  }
}

TEST(MpcController, RestStateNeedsNoInput) {
  MpcController<double> controller(ball_and_beam<double>(), MpcSpec<double>::ball_and_beam_default(), kBase);
  for (double sp : {-0.5, 0.0, 0.5}) {
    ControlRequest<double> req;
    req.x = state(sp, 0, 0);
    req.x_target = req.x;
    req.h_d = 0.03;
    const auto r = controller.step(req);
    EXPECT_EQ(r.status, QpStatus::Optimal);
    EXPECT_LE(r.u_seq.cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(MpcStep, IsDeterministic) {
  const auto spec = MpcSpec<double>::ball_and_beam_default();
  const auto plant = ball_and_beam<double>();
  const Vd x = state(0.2, -0.3, 0.1);
  const Md pending = Md::Constant(1, 6, 0.7);
  const auto a = mpc_step<double>(x, pending, 0.03, state(0.5, 0, 0), spec, plant, kBase);
  const auto b = mpc_step<double>(x, pending, 0.03, state(0.5, 0, 0), spec, plant, kBase);
  EXPECT_EQ(a.u_seq, b.u_seq);
  EXPECT_EQ(a.predicted_states, b.predicted_states);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.horizon(), 30);
  EXPECT_EQ(a.predicted_states.cols(), 31);
}

TEST(MpcStep, PredictionStartsFromDeadTimeEstimate) {
  const auto spec = MpcSpec<double>::ball_and_beam_default();
  const auto plant = ball_and_beam<double>();
  const Vd x = state(0.2, -0.3, 0.1);
  const Md pending = Md::Constant(1, 6, 0.7);
  const auto r = mpc_step<double>(x, pending, 0.03, state(0.5, 0, 0), spec, plant, kBase);
  const Vd expected = estimate_state<double>(x, pending, discretize(plant, kBase));
  EXPECT_LT((r.predicted_states.col(0) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EstimateState, Examples) {
  const auto base = discretize(ball_and_beam<double>(), kBase);
  const Vd x = state(0.1, 0.2, 0.3);
  EXPECT_EQ(estimate_state<double>(x, Md(1, 0), base), x);
  EXPECT_EQ(estimate_state<double>(Vd::Zero(3), Md::Zero(1, 4), base), Vd::Zero(3));

  DiscreteModel<double> trivial{Md::Identity(3, 3), (Md(3, 1) << 0, 0, kBase).finished(), kBase};
  const Vd one = estimate_state<double>(Vd::Zero(3), Md::Ones(1, 1), trivial);
  EXPECT_EQ(one, state(0, 0, kBase));
}

TEST(MpcController, SolveWorkGrowsWithFrequency) {
  MpcController<double> controller(ball_and_beam<double>(), MpcSpec<double>::ball_and_beam_default(), kBase);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double work_fast = 0, work_slow = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ControlRequest<double> req;
    req.x = state(u(rng), 2 * u(rng), u(rng));
    req.x_target = state(trial % 2 ? 0.5 : -0.5, 0, 0);
    req.h_d = 0.03;
    const auto fast = controller.step(req);
    req.h_d = 0.06;
    const auto slow = controller.step(req);
    work_fast += static_cast<double>(fast.iterations * fast.horizon());
    work_slow += static_cast<double>(slow.iterations * slow.horizon());
  }
  EXPECT_EQ(horizon(0.9, 0.03), 2 * horizon(0.9, 0.06));
  EXPECT_GT(work_fast, work_slow);
}

TEST(Riccati, SolvesDiscreteAlgebraicEquation) {
  const auto model = discretize(ball_and_beam<double>(), 0.05);
  const Md Q = 0.05 * Vd((Vd(3) << 100, 1, 1).finished()).asDiagonal().toDenseMatrix();
  const Md R = Md::Constant(1, 1, 0.005);
  const Md P = solve_dare<double>(model.A, model.B, Q, R);
  const Md BtP = model.B.transpose() * P;
  const Md residual = model.A.transpose() * P * model.A - P -
                      model.A.transpose() * P * model.B * (R + BtP * model.B).ldlt().solve(BtP * model.A) + Q;
  EXPECT_LT(residual.cwiseAbs().maxCoeff(), 1e-9 * P.cwiseAbs().maxCoeff());
  EXPECT_LT((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-9 * P.cwiseAbs().maxCoeff());
  const Md K = lqr_gain<double>(model, Q, R);
  const Eigen::VectorXcd eig = (model.A - model.B * K).eigenvalues();
  EXPECT_LT(eig.cwiseAbs().maxCoeff(), 1.0);
}

}  // namespace
}  // namespace rccs
