#include "rccs/model.hpp"

#include <algorithm>

namespace rccs {

template ContinuousModel<double> ball_and_beam<double>(const PlantParams&);
template DiscreteModel<double> discretize<double>(const ContinuousModel<double>&, double);
template PlantState<double> step_plant<double>(const PlantState<double>&, const Vector<double>&, double,
                                               const DiscreteModel<double>&, const PlantParams&);

double DisturbanceSchedule::at(std::int64_t tick) const {
  auto it = std::lower_bound(events.begin(), events.end(), tick,
                             [](const DisturbanceEvent& e, std::int64_t k) { return e.tick < k; });
  return (it != events.end() && it->tick == tick) ? it->amplitude : 0.0;
}

DisturbanceSchedule gen_disturbances(std::mt19937_64& rng, double duration, double h_q,
                                     const DisturbanceParams& params) {
  if (!(duration > 0.0) || !(h_q > 0.0))
    throw std::invalid_argument("gen_disturbances: duration and h_q must be positive");
  std::normal_distribution<double> gap(params.gap_mean, std::sqrt(params.gap_variance));
  std::normal_distribution<double> amplitude(params.amplitude_mean, std::sqrt(params.amplitude_variance));
  DisturbanceSchedule schedule;
  double t = 0.0;
  for (;;) {
    double g = gap(rng);
    // Gaps shorter than one tick would collide on the same tick.
    while (g <= h_q) g = gap(rng);
    t += g;
    if (t > duration) break;
    const double a = amplitude(rng);
    schedule.events.push_back({static_cast<std::int64_t>(std::ceil(t / h_q - 1e-9)), a});
  }
  return schedule;
}

double setpoint(double t, double amplitude, double half_period) {
  const auto phase = static_cast<std::int64_t>(std::floor(t / half_period + 1e-12));
  return (phase % 2 == 0) ? -amplitude : amplitude;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace rccs
