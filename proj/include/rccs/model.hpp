#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rccs {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Physical constants of the linearized Ball and Beam.
///
/// The ball acceleration is -k_v times the beam angle and the control input
/// drives the beam angular velocity through k_u. The ball is lost when
/// |position| exceeds beam_half_length.
struct PlantParams {
  double k_v = 10.0;
  double k_u = 4.5;
  double beam_half_length = 0.55;
  double input_limit = 5.0;
};

template <typename Scalar>
struct ContinuousModel {
  Matrix<Scalar> A;
  Matrix<Scalar> B;
  std::vector<std::string> state_labels;

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
};

template <typename Scalar>
struct DiscreteModel {
  Matrix<Scalar> A;
  Matrix<Scalar> B;
  Scalar h{0};

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
};

/// x = [position (m), velocity (m/s), beam angle (rad)], u = beam rate command.
template <typename Scalar>
ContinuousModel<Scalar> ball_and_beam(const PlantParams& params = {}) {
  ContinuousModel<Scalar> model;
  model.A = Matrix<Scalar>::Zero(3, 3);
  model.B = Matrix<Scalar>::Zero(3, 1);
  model.A(0, 1) = Scalar(1);
  model.A(1, 2) = Scalar(-params.k_v);
  model.B(2, 0) = Scalar(params.k_u);
  model.state_labels = {"position", "velocity", "angle"};
  return model;
}

namespace detail {

template <typename Scalar>
bool strictly_upper_triangular(const Matrix<Scalar>& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = c; r < m.rows(); ++r)
      if (m(r, c) != Scalar(0)) return false;
  return true;
}

// Taylor series with scaling and squaring. A strictly upper triangular
// argument is nilpotent, so the series terminates and is summed exactly.
template <typename Scalar>
Matrix<Scalar> expm(const Matrix<Scalar>& m) {
  using std::abs;
  const Eigen::Index n = m.rows();
  int squarings = 0;
  Matrix<Scalar> scaled = m;
  if (!strictly_upper_triangular(m)) {
    const Scalar norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm / Scalar(std::ldexp(1.0, squarings)) > Scalar(0.5)) ++squarings;
    scaled = m / Scalar(std::ldexp(1.0, squarings));
  }
  Matrix<Scalar> sum = Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> term = Matrix<Scalar>::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * scaled) / Scalar(k);
    const Scalar term_norm = term.cwiseAbs().maxCoeff();
    sum += term;
    if (term_norm == Scalar(0) ||
        term_norm <= std::numeric_limits<Scalar>::epsilon() * sum.cwiseAbs().maxCoeff() * Scalar(1e-3))
      break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace detail

/// Zero-order-hold discretization at period h.
template <typename Scalar>
DiscreteModel<Scalar> discretize(const ContinuousModel<Scalar>& model, Scalar h) {
  using std::isfinite;
  if (!isfinite(h) || !(h > Scalar(0)))
    throw std::invalid_argument("discretize: period must be finite and positive");
  const Eigen::Index n = model.states();
  const Eigen::Index m = model.inputs();
  Matrix<Scalar> augmented = Matrix<Scalar>::Zero(n + m, n + m);
  augmented.topLeftCorner(n, n) = model.A * h;
  augmented.topRightCorner(n, m) = model.B * h;
  const Matrix<Scalar> e = detail::expm<Scalar>(augmented);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m), h};
}

template <typename Scalar>
struct PlantState {
  Vector<Scalar> x;
  Scalar t{0};
  bool failed = false;
};

/// One base-rate step. The input is saturated at the configured limit and
/// the disturbance enters the velocity state. A fallen ball stays put.
template <typename Scalar>
PlantState<Scalar> step_plant(const PlantState<Scalar>& s, const Vector<Scalar>& u, Scalar w,
                              const DiscreteModel<Scalar>& m, const PlantParams& params = {}) {
  using std::abs;
  PlantState<Scalar> next = s;
  next.t = s.t + m.h;
  const Scalar bound = Scalar(params.beam_half_length);
  if (s.failed || abs(s.x(0)) > bound) {
    next.failed = true;
    return next;
  }
  const Scalar limit = Scalar(params.input_limit);
  const Vector<Scalar> u_sat = u.cwiseMax(-limit).cwiseMin(limit);
  next.x = m.A * s.x + m.B * u_sat;
  next.x(1) += w;
  next.failed = abs(next.x(0)) > bound;
  return next;
}

struct DisturbanceEvent {
  std::int64_t tick = 0;
  double amplitude = 0.0;
};

struct DisturbanceParams {
  double amplitude_mean = 0.0;
  double amplitude_variance = 0.09;
  double gap_mean = 2.0;
  double gap_variance = 0.25;
};

struct DisturbanceSchedule {
  std::vector<DisturbanceEvent> events;

  /// Amplitude at a given base tick, zero when no event falls on it.
  double at(std::int64_t tick) const;
};

/// Pulse disturbances with normally distributed gaps and amplitudes.
DisturbanceSchedule gen_disturbances(std::mt19937_64& rng, double duration, double h_q,
                                     const DisturbanceParams& params = {});

/// Square-wave position target: -0.5 on [0,10), +0.5 on [10,20), repeating.
double setpoint(double t, double amplitude = 0.5, double half_period = 10.0);

/// Additive Gaussian noise on each applied control action.
class ActuatorNoise {
 public:
  explicit ActuatorNoise(std::uint64_t seed, double sigma = 3.0) : rng_(seed), dist_(0.0, sigma) {}

  double operator()() { return dist_(rng_); }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_;
};

/// Derives an independent generator seed for a named stream.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

extern template ContinuousModel<double> ball_and_beam<double>(const PlantParams&);
extern template DiscreteModel<double> discretize<double>(const ContinuousModel<double>&, double);
extern template PlantState<double> step_plant<double>(const PlantState<double>&, const Vector<double>&,
                                                      double, const DiscreteModel<double>&,
                                                      const PlantParams&);

}  // namespace rccs
