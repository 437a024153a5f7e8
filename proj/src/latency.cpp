#include "rccs/latency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace rccs {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// Uniform on the open interval (0, 1).
double open_uniform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  return v;
}

}  // namespace

const char* to_string(DistFamily family) {
  switch (family) {
    case DistFamily::ShiftedLognormal: return "lognormal";
    case DistFamily::GeneralizedLogistic: return "gen_logistic";
    case DistFamily::DoubleGamma: return "double_gamma";
  }
  return "unknown";
}

DistFamily dist_family_from_string(const std::string& name) {
  if (name == "lognormal") return DistFamily::ShiftedLognormal;
  if (name == "gen_logistic") return DistFamily::GeneralizedLogistic;
  if (name == "double_gamma") return DistFamily::DoubleGamma;
  throw std::invalid_argument("unknown distribution family: " + name);
}

DistSpec DistSpec::shifted_lognormal(double sigma, double mu, double offset) {
  DistSpec d;
  d.family = DistFamily::ShiftedLognormal;
  d.shape = sigma;
  d.location = mu;
  d.offset = offset;
  return d;
}

DistSpec DistSpec::generalized_logistic(double c, double s, double offset) {
  DistSpec d;
  d.family = DistFamily::GeneralizedLogistic;
  d.shape = c;
  d.scale = s;
  d.offset = offset;
  return d;
}

DistSpec DistSpec::double_gamma(double a, double s, double offset) {
  DistSpec d;
  d.family = DistFamily::DoubleGamma;
  d.shape = a;
  d.scale = s;
  d.offset = offset;
  return d;
}

void validate(const DistSpec& d) {
  if (!positive_finite(d.shape)) throw std::invalid_argument("distribution shape must be positive and finite");
  if (!std::isfinite(d.offset)) throw std::invalid_argument("distribution offset must be finite");
  if (d.family == DistFamily::ShiftedLognormal) {
    if (!std::isfinite(d.location)) throw std::invalid_argument("lognormal mu must be finite");
  } else if (!positive_finite(d.scale)) {
    throw std::invalid_argument("distribution scale must be positive and finite");
  }
}

double sample(const DistSpec& d, std::mt19937_64& rng) {
  validate(d);
  switch (d.family) {
    case DistFamily::ShiftedLognormal: {
      std::normal_distribution<double> z(0.0, 1.0);
      return d.offset + std::exp(d.location + d.shape * z(rng));
    }
    case DistFamily::GeneralizedLogistic: {
      // Inverse CDF; expm1 keeps precision for large c where u^(-1/c) ~ 1.
      const double u = open_uniform(rng);
      return d.offset - d.scale * std::log(std::expm1(-std::log(u) / d.shape));
    }
    case DistFamily::DoubleGamma: {
      std::gamma_distribution<double> g(d.shape, 1.0);
      std::bernoulli_distribution sign(0.5);
      const double y = g(rng);
      return d.offset + d.scale * (sign(rng) ? y : -y);
    }
  }
  return d.offset;
}

double cdf(const DistSpec& d, double x) {
  validate(d);
  switch (d.family) {
    case DistFamily::ShiftedLognormal: {
      if (x <= d.offset) return 0.0;
      boost::math::lognormal_distribution<double> ln(d.location, d.shape);
      return boost::math::cdf(ln, x - d.offset);
    }
    case DistFamily::GeneralizedLogistic: {
      const double y = (x - d.offset) / d.scale;
      return std::exp(-d.shape * std::log1p(std::exp(-y)));
    }
    case DistFamily::DoubleGamma: {
      const double y = (x - d.offset) / d.scale;
      const double half = 0.5 * boost::math::gamma_p(d.shape, std::abs(y));
      return y < 0 ? 0.5 - half : 0.5 + half;
    }
  }
  return 0.0;
}

double quantile(const DistSpec& d, double p) {
  validate(d);
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile: probability must lie in (0, 1)");
  switch (d.family) {
    case DistFamily::ShiftedLognormal: {
      boost::math::lognormal_distribution<double> ln(d.location, d.shape);
      return d.offset + boost::math::quantile(ln, p);
    }
    case DistFamily::GeneralizedLogistic:
      return d.offset - d.scale * std::log(std::expm1(-std::log(p) / d.shape));
    case DistFamily::DoubleGamma: {
      if (p == 0.5) return d.offset;
      const double y = p < 0.5 ? -boost::math::gamma_p_inv(d.shape, 1.0 - 2.0 * p)
                               : boost::math::gamma_p_inv(d.shape, 2.0 * p - 1.0);
      return d.offset + d.scale * y;
    }
  }
  return d.offset;
}

DistSpec delay_state(int state) {
  switch (state) {
    case 1: return DistSpec::generalized_logistic(946.0079364124904, 8.909250664719042e-06, 1.2980603116739847e-05);
    case 2: return DistSpec::shifted_lognormal(0.1928129897332288, -8.864407134946601, 5.5267691650919316e-05);
    case 3: return DistSpec::shifted_lognormal(0.63186, -7.143477612503207, 0.00602);
    case 4: return DistSpec::shifted_lognormal(0.43087, -4.2013063592469, 0.0055629);
    case 5: return DistSpec::double_gamma(2.52199, 0.00034, 0.02809);
    default: throw std::invalid_argument("delay state must be in 1..5");
  }
}

MarkovChain::MarkovChain(std::vector<int> states, const std::vector<Transition>& transitions, int initial)
    : states_(std::move(states)) {
  if (states_.empty()) throw std::invalid_argument("MarkovChain: no states");
  const auto n = static_cast<Eigen::Index>(states_.size());
  P_ = Matrix<double>::Zero(n, n);
  for (const auto& tr : transitions) {
    if (!(tr.probability >= 0.0 && tr.probability <= 1.0))
      throw std::invalid_argument("MarkovChain: transition probability outside [0, 1]");
    if (tr.from == tr.to) throw std::invalid_argument("MarkovChain: self transitions are implied");
    P_(static_cast<Eigen::Index>(index_of(tr.from)), static_cast<Eigen::Index>(index_of(tr.to))) = tr.probability;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double out = P_.row(i).sum();
    if (out > 1.0 + 1e-12) throw std::invalid_argument("MarkovChain: outgoing probabilities exceed 1");
    P_(i, i) = std::max(0.0, 1.0 - out);
  }
  current_ = index_of(initial);
}

std::size_t MarkovChain::index_of(int label) const {
  const auto it = std::find(states_.begin(), states_.end(), label);
  if (it == states_.end()) throw std::invalid_argument("MarkovChain: unknown state " + std::to_string(label));
  return static_cast<std::size_t>(it - states_.begin());
}

double MarkovChain::probability(int from, int to) const {
  return P_(static_cast<Eigen::Index>(index_of(from)), static_cast<Eigen::Index>(index_of(to)));
}

Vector<double> MarkovChain::stationary() const {
  // pi (P - I) = 0 with sum(pi) = 1, solved as a least-squares system.
  const Eigen::Index n = P_.rows();
  Matrix<double> A(n + 1, n);
  A.topRows(n) = (P_ - Matrix<double>::Identity(n, n)).transpose();
  A.row(n).setOnes();
  Vector<double> b = Vector<double>::Zero(n + 1);
  b(n) = 1.0;
  return A.colPivHouseholderQr().solve(b);
}

int MarkovChain::step(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  const auto row = static_cast<Eigen::Index>(current_);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < P_.cols(); ++j) {
    if (j == row) continue;
    acc += P_(row, j);
    if (r < acc) {
      current_ = static_cast<std::size_t>(j);
      return state();
    }
  }
  return state();
}

MarkovChain processing_chain(int scenario, int initial) {
  double p12 = 0.0;
  double p21 = 0.0;
  if (scenario == 1) {
    p12 = 0.001;
    p21 = 0.001;
  } else if (scenario == 2) {
    p12 = 0.75;
    p21 = 0.25;
  } else {
    throw std::invalid_argument("delay scenario must be 1 or 2");
  }
  return MarkovChain({1, 2}, {{1, 2, p12}, {2, 1, p21}}, initial);
}

MarkovChain flight_chain(int initial) {
  return MarkovChain({3, 4, 5},
                     {{3, 4, 0.00009}, {3, 5, 0.00001}, {4, 3, 0.00025}, {4, 5, 0.00025}, {5, 3, 0.00035},
                      {5, 4, 0.00015}},
                     initial);
}

double processing_time(const DistSpec& per_step, Eigen::Index horizon, int iterations, std::mt19937_64& rng) {
  if (horizon < 1 || iterations < 1) throw std::invalid_argument("processing_time: N and i must be >= 1");
  return static_cast<double>(iterations) * static_cast<double>(horizon) * sample(per_step, rng);
}

const char* to_string(Cloud cloud) {
  switch (cloud) {
    case Cloud::K8S: return "K8S";
    case Cloud::RDC: return "RDC";
    case Cloud::Central: return "Central";
    case Cloud::North: return "North";
  }
  return "unknown";
}

Cloud cloud_from_string(const std::string& name) {
  for (Cloud c : {Cloud::K8S, Cloud::RDC, Cloud::Central, Cloud::North})
    if (name == to_string(c)) return c;
  throw std::invalid_argument("unknown cloud: " + name);
}

RttQuantiles rtt_quantiles(Cloud cloud) {
  switch (cloud) {
    case Cloud::K8S: return {0.01171, 0.01282};
    case Cloud::RDC: return {0.02424, 0.02646};
    case Cloud::Central: return {0.03755, 0.05262};
    case Cloud::North: return {0.18006, 0.21857};
  }
  throw std::invalid_argument("unknown cloud");
}

DistSpec rtt_fit(RttQuantiles q, double offset_fraction) {
  if (!(q.median > 0.0 && q.q95 > q.median)) throw std::invalid_argument("rtt_fit: need 0 < median < q95");
  if (!(offset_fraction >= 0.0 && offset_fraction < 1.0))
    throw std::invalid_argument("rtt_fit: offset fraction must lie in [0, 1)");
  const double offset = offset_fraction * q.median;
  const double mu = std::log(q.median - offset);
  const double z95 = 1.6448536269514722;
  const double sigma = (std::log(q.q95 - offset) - mu) / z95;
  return DistSpec::shifted_lognormal(sigma, mu, offset);
}

DistSpec rtt_profile(Cloud cloud) { return rtt_fit(rtt_quantiles(cloud)); }

ChaosOverlay::ChaosOverlay(ChaosParams params, std::uint64_t seed)
    : params_(params),
      rng_(seed),
      innovation_(0.0, params.jitter * std::sqrt(1.0 - params.correlation * params.correlation)) {
  if (!(params_.period > 0.0) || params_.active < 0.0 || params_.active > params_.period)
    throw std::invalid_argument("ChaosOverlay: need 0 <= active <= period");
  if (!(std::abs(params_.correlation) < 1.0)) throw std::invalid_argument("ChaosOverlay: |correlation| must be < 1");
}

bool ChaosOverlay::active(double t) const {
  if (t < params_.start) return false;
  const double phase = std::fmod(t - params_.start, params_.period);
  return phase < params_.active;
}

double ChaosOverlay::advance(double t) {
  jitter_ = params_.correlation * jitter_ + innovation_(rng_);
  if (!active(t)) return 0.0;
  return std::max(0.0, params_.mean + jitter_);
}

WorkerQueue::WorkerQueue(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("WorkerQueue: capacity must be >= 1");
}

std::uint64_t WorkerQueue::submit(double arrival, double service_time) {
  if (!std::isfinite(arrival) || !(service_time >= 0.0) || !std::isfinite(service_time))
    throw std::invalid_argument("WorkerQueue: invalid arrival or service time");
  const std::uint64_t id = next_id_++;
  arrivals_.push({id, std::max(arrival, now_), service_time});
  return id;
}

void WorkerQueue::set_capacity(double t, int capacity) {
  if (capacity < 1) throw std::invalid_argument("WorkerQueue: capacity must be >= 1");
  advance(t, &finished_);
  capacity_ = capacity;
  start_jobs(std::max(t, now_));
}

std::vector<WorkerQueue::Completion> WorkerQueue::poll(double until) {
  advance(until, &finished_);
  std::vector<Completion> out;
  out.swap(finished_);
  return out;
}

std::vector<WorkerQueue::Completion> WorkerQueue::take_started() {
  std::vector<Completion> out;
  out.swap(started_);
  return out;
}

void WorkerQueue::start_jobs(double now) {
  while (static_cast<int>(running_.size()) < capacity_ && !waiting_.empty()) {
    const Job job = waiting_.front();
    waiting_.pop_front();
    const Completion c{job.id, job.arrival, now, now + job.service};
    running_.push({c});
    started_.push_back(c);
  }
}

void WorkerQueue::advance(double until, std::vector<Completion>* done) {
  for (;;) {
    const double next_finish = running_.empty() ? INFINITY : running_.top().completion.finish;
    const double next_arrival = arrivals_.empty() ? INFINITY : arrivals_.top().arrival;
    const double next = std::min(next_finish, next_arrival);
    if (!(next <= until)) break;
    // Completions first on ties so the freed server is visible to the arrival.
    if (next_finish <= next_arrival) {
      done->push_back(running_.top().completion);
      running_.pop();
    } else {
      waiting_.push_back(arrivals_.top());
      arrivals_.pop();
    }
    now_ = std::max(now_, next);
    start_jobs(now_);
  }
  now_ = std::max(now_, until);
}

}  // namespace rccs
