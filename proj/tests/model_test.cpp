#include "rccs/model.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <numeric>

namespace rccs {
namespace {

using Md = Matrix<double>;
using Vd = Vector<double>;

TEST(BallAndBeam, IntegratorChainStructure) {
  const auto m = ball_and_beam<double>();
  ASSERT_EQ(m.states(), 3);
  ASSERT_EQ(m.inputs(), 1);
  EXPECT_TRUE(m.A.row(2).isZero());
  EXPECT_DOUBLE_EQ(m.A(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.A(1, 2), -10.0);
  int nonzero = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) nonzero += m.A(r, c) != 0.0;
  EXPECT_EQ(nonzero, 2);
  const Eigen::VectorXcd eig = m.A.eigenvalues();
  EXPECT_LT(eig.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BallAndBeam, AngleStepResponse) {
  const auto d = discretize(ball_and_beam<double>(), 0.1);
  const Vd x = d.A * Vd::Zero(3) + d.B * Vd::Ones(1);
  EXPECT_NEAR(x(2), 0.45, 1e-15);
}

TEST(Discretize, ZeroDynamics) {
  ContinuousModel<double> m{Md::Zero(2, 2), (Md(2, 1) << 0.5, -1.0).finished(), {}};
  const auto d = discretize(m, 0.2);
  EXPECT_TRUE(d.A.isIdentity(0.0));
  EXPECT_TRUE(d.B.isApprox(0.2 * m.B, 1e-15));
}

TEST(Discretize, DoubleIntegratorClosedForm) {
  ContinuousModel<double> m{(Md(2, 2) << 0, 1, 0, 0).finished(), (Md(2, 1) << 0, 1).finished(), {}};
  for (double h : {0.001, 0.03, 0.5, 2.0}) {
    const auto d = discretize(m, h);
    EXPECT_NEAR(d.A(0, 1), h, 1e-15);
    EXPECT_NEAR(d.A(0, 0), 1.0, 0.0);
    EXPECT_NEAR(d.B(0, 0), h * h / 2, 1e-15);
    EXPECT_NEAR(d.B(1, 0), h, 1e-15);
  }
}

TEST(Discretize, MatchesMatrixExponentialOracle) {
  const auto m = ball_and_beam<double>();
  for (double h : {0.005, 0.03, 0.045, 0.1}) {
    const auto d = discretize(m, h);
    const auto o = oracle::zoh(m, h);
    EXPECT_LT((d.A - o.A).cwiseAbs().maxCoeff(), 1e-12) << h;
    EXPECT_LT((d.B - o.B).cwiseAbs().maxCoeff(), 1e-12) << h;
  }
}

TEST(Discretize, NonNilpotentUsesScalingAndSquaring) {
  ContinuousModel<double> m{(Md(2, 2) << -1.5, 2.0, -3.0, -0.4).finished(), (Md(2, 1) << 1, 0.5).finished(), {}};
  for (double h : {0.01, 0.3, 2.5}) {
    const auto d = discretize(m, h);
    const auto o = oracle::zoh(m, h);
    EXPECT_LT((d.A - o.A).cwiseAbs().maxCoeff(), 1e-12) << h;
    EXPECT_LT((d.B - o.B).cwiseAbs().maxCoeff(), 1e-12) << h;
  }
}

TEST(Discretize, SemigroupProperty) {
  const auto m = ball_and_beam<double>();
  const double h_q = 0.005;
  const auto base = discretize(m, h_q);
  Md power = Md::Identity(3, 3);
  Md input_sum = Md::Zero(3, 1);
  for (int i = 1; i <= 20; ++i) {
    input_sum = input_sum + power * base.B;
    power = power * base.A;
    const auto d = discretize(m, i * h_q);
    EXPECT_LT((d.A - power).cwiseAbs().maxCoeff(), 1e-10) << i;
    EXPECT_LT((d.B - input_sum).cwiseAbs().maxCoeff(), 1e-10) << i;
  }
}

TEST(Discretize, SmallPeriodLimit) {
  const auto d = discretize(ball_and_beam<double>(), 1e-9);
  EXPECT_TRUE(d.A.isIdentity(1e-7));
  EXPECT_LT(d.B.cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Discretize, RejectsInvalidPeriod) {
  const auto m = ball_and_beam<double>();
  EXPECT_THROW(discretize(m, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(discretize(m, std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_THROW(discretize(m, 0.0), std::invalid_argument);
  EXPECT_THROW(discretize(m, -0.1), std::invalid_argument);
}

class StepPlant : public ::testing::Test {
 protected:
  DiscreteModel<double> base = discretize(ball_and_beam<double>(), 0.005);
  PlantState<double> at(double p, double v, double a) { return {(Vd(3) << p, v, a).finished(), 0.0, false}; }
};

TEST_F(StepPlant, EquilibriumStays) {
  const auto next = step_plant<double>(at(0, 0, 0), Vd::Zero(1), 0.0, base);
  EXPECT_TRUE(next.x.isZero());
  EXPECT_FALSE(next.failed);
  EXPECT_DOUBLE_EQ(next.t, 0.005);
}

TEST_F(StepPlant, DisturbanceEntersVelocityOnly) {
  const auto next = step_plant<double>(at(0, 0, 0), Vd::Zero(1), 0.3, base);
  EXPECT_DOUBLE_EQ(next.x(0), 0.0);
  EXPECT_DOUBLE_EQ(next.x(1), 0.3);
  EXPECT_DOUBLE_EQ(next.x(2), 0.0);
}

TEST_F(StepPlant, FailureIsLatching) {
  auto s = step_plant<double>(at(0.56, 0, 0), Vd::Constant(1, -3.0), 0.0, base);
  EXPECT_TRUE(s.failed);
  const Vd frozen = s.x;
  s = step_plant<double>(s, Vd::Constant(1, 5.0), 0.2, base);
  EXPECT_TRUE(s.failed);
  EXPECT_EQ(s.x, frozen);
  EXPECT_FALSE(step_plant<double>(at(0.54, 0, 0), Vd::Zero(1), 0.0, base).failed);
}

TEST_F(StepPlant, InputSaturates) {
  const auto a = step_plant<double>(at(0, 0, 0), Vd::Constant(1, 50.0), 0.0, base);
  const auto b = step_plant<double>(at(0, 0, 0), Vd::Constant(1, 5.0), 0.0, base);
  EXPECT_EQ(a.x, b.x);
}

TEST_F(StepPlant, LinearInUnsaturatedRegion) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> small(-0.1, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = at(small(rng), small(rng), small(rng));
    const Vd u = Vd::Constant(1, 10 * small(rng));
    const double w = small(rng);
    const double alpha = 1.0 + 3.0 * std::abs(small(rng));
    const auto lhs = step_plant<double>(PlantState<double>{alpha * s.x, 0.0, false}, Vd(alpha * u), alpha * w, base);
    const auto rhs = step_plant<double>(s, u, w, base);
    EXPECT_LT((lhs.x - alpha * rhs.x).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Disturbances, DeterministicUnderSeed) {
  std::mt19937_64 a(42), b(42);
  const auto s1 = gen_disturbances(a, 400.0, 0.005);
  const auto s2 = gen_disturbances(b, 400.0, 0.005);
  ASSERT_EQ(s1.events.size(), s2.events.size());
  for (std::size_t i = 0; i < s1.events.size(); ++i) {
    EXPECT_EQ(s1.events[i].tick, s2.events[i].tick);
    EXPECT_EQ(s1.events[i].amplitude, s2.events[i].amplitude);
  }
}

TEST(Disturbances, MeanGapAboutTwoSeconds) {
  std::mt19937_64 rng(3);
  const auto s = gen_disturbances(rng, 400.0, 0.005);
  ASSERT_GT(s.events.size(), 100u);
  const double span = (s.events.back().tick - s.events.front().tick) * 0.005;
  const double mean_gap = span / static_cast<double>(s.events.size() - 1);
  EXPECT_GE(mean_gap, 1.8);
  EXPECT_LE(mean_gap, 2.2);
  for (std::size_t i = 1; i < s.events.size(); ++i) EXPECT_LT(s.events[i - 1].tick, s.events[i].tick);
  for (const auto& e : s.events) EXPECT_TRUE(std::isfinite(e.amplitude));
}

TEST(Disturbances, AmplitudeVariance) {
  std::mt19937_64 rng(5);
  const auto s = gen_disturbances(rng, 2.0e5 + 100, 0.005);
  ASSERT_GE(s.events.size(), 99000u);
  double mean = 0.0;
  for (const auto& e : s.events) mean += e.amplitude;
  mean /= static_cast<double>(s.events.size());
  double var = 0.0;
  for (const auto& e : s.events) var += (e.amplitude - mean) * (e.amplitude - mean);
  var /= static_cast<double>(s.events.size() - 1);
  EXPECT_NEAR(var, 0.09, 0.05 * 0.09);
}

TEST(Disturbances, LookupByTick) {
  DisturbanceSchedule s{{{10, 0.2}, {400, -0.1}}};
  EXPECT_DOUBLE_EQ(s.at(10), 0.2);
  EXPECT_DOUBLE_EQ(s.at(400), -0.1);
  EXPECT_DOUBLE_EQ(s.at(11), 0.0);
}

TEST(Setpoint, SquareWave) {
  EXPECT_DOUBLE_EQ(setpoint(0.0), -0.5);
  EXPECT_DOUBLE_EQ(setpoint(9.999), -0.5);
  EXPECT_DOUBLE_EQ(setpoint(10.0), 0.5);
  EXPECT_DOUBLE_EQ(setpoint(19.99), 0.5);
  EXPECT_DOUBLE_EQ(setpoint(20.0), -0.5);
  // A 20 s period puts t = 25 s back in the negative half.
  EXPECT_DOUBLE_EQ(setpoint(25.0), -0.5);
  EXPECT_DOUBLE_EQ(setpoint(35.0), 0.5);
}

TEST(ActuatorNoise, Moments) {
  ActuatorNoise noise(2024);
  const int n = 100000;
  std::vector<double> samples(n);
  for (auto& s : samples) s = noise();
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / (n - 1));
  EXPECT_LT(std::abs(mean), 0.05);
  EXPECT_NEAR(sd, 3.0, 0.02 * 3.0);
}

TEST(ActuatorNoise, Reproducible) {
  ActuatorNoise a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
  }
  EXPECT_TRUE(differs);
}

TEST(StreamSeed, DistinctStreams) {
  EXPECT_EQ(stream_seed(1, 2, 3), stream_seed(1, 2, 3));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(1, 2, 4));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(1, 3, 3));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(2, 2, 3));
}

}  // namespace
}  // namespace rccs
