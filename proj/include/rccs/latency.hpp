#pragma once

#include <cstdint>
#include <deque>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "rccs/model.hpp"

namespace rccs {

enum class DistFamily { ShiftedLognormal, GeneralizedLogistic, DoubleGamma };

const char* to_string(DistFamily family);
DistFamily dist_family_from_string(const std::string& name);

/// A delay distribution shifted by `offset`.
///
/// shifted lognormal:   offset + exp(location + shape * Z)
/// generalized logistic: CDF (1 + e^-y)^-shape with y = (x - offset) / scale
/// double gamma:        offset + scale * (+-Gamma(shape, 1))
struct DistSpec {
  DistFamily family = DistFamily::ShiftedLognormal;
  double shape = 1.0;
  double scale = 1.0;
  double location = 0.0;
  double offset = 0.0;

  static DistSpec shifted_lognormal(double sigma, double mu, double offset);
  static DistSpec generalized_logistic(double c, double s, double offset);
  static DistSpec double_gamma(double a, double s, double offset);
};

/// Throws std::invalid_argument for non-finite or non-positive parameters.
void validate(const DistSpec& d);

double sample(const DistSpec& d, std::mt19937_64& rng);
double cdf(const DistSpec& d, double x);
double quantile(const DistSpec& d, double p);
inline double median(const DistSpec& d) { return quantile(d, 0.5); }

/// Fitted per-state distributions s1..s5 (s1, s2 processing cost per
/// iteration and horizon step; s3..s5 flight time).
DistSpec delay_state(int state);

/// Discrete-time Markov chain over labelled states, stepped once per tick.
class MarkovChain {
 public:
  struct Transition {
    int from;
    int to;
    double probability;
  };

  MarkovChain(std::vector<int> states, const std::vector<Transition>& transitions, int initial);

  int state() const { return states_[current_]; }
  const std::vector<int>& states() const { return states_; }
  double probability(int from, int to) const;
  /// Closed-form stationary distribution, in the order of states().
  Vector<double> stationary() const;

  int step(std::mt19937_64& rng);

 private:
  std::size_t index_of(int label) const;

  std::vector<int> states_;
  Matrix<double> P_;
  std::size_t current_ = 0;
};

/// Processing chain over {s1, s2} for delay scenario 1 or 2.
MarkovChain processing_chain(int scenario, int initial = 1);
/// Flight chain over {s3, s4, s5}; identical in both scenarios.
MarkovChain flight_chain(int initial = 3);

/// tau_c = i * N * X with X drawn from the processing state distribution.
double processing_time(const DistSpec& per_step, Eigen::Index horizon, int iterations, std::mt19937_64& rng);

enum class Cloud { K8S, RDC, Central, North };

const char* to_string(Cloud cloud);
Cloud cloud_from_string(const std::string& name);

struct RttQuantiles {
  double median;
  double q95;
};

RttQuantiles rtt_quantiles(Cloud cloud);

/// Shifted lognormal matching a median/95th-quantile pair with the offset
/// fixed at `offset_fraction` of the median.
DistSpec rtt_fit(RttQuantiles q, double offset_fraction = 0.8);
DistSpec rtt_profile(Cloud cloud);

struct ChaosParams {
  double mean = 0.100;
  double correlation = 0.25;
  double jitter = 0.015;  // stationary standard deviation of the AR(1) jitter
  double active = 30.0;
  double period = 60.0;
  double start = 0.0;
};

/// Periodic delay injection with AR(1) jitter, advanced once per tick.
class ChaosOverlay {
 public:
  ChaosOverlay(ChaosParams params, std::uint64_t seed);

  bool active(double t) const;
  /// Advances the jitter process and returns the extra delay at time t.
  double advance(double t);
  const ChaosParams& params() const { return params_; }

 private:
  ChaosParams params_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> innovation_;
  double jitter_ = 0.0;
};

/// FIFO multi-server queue. Jobs may be submitted with future arrival
/// times; poll() runs the queue forward and reports finished jobs.
class WorkerQueue {
 public:
  struct Completion {
    std::uint64_t id;
    double arrival;
    double start;
    double finish;
  };

  explicit WorkerQueue(int capacity);

  std::uint64_t submit(double arrival, double service_time);
  /// Changes the number of servers at time t; jobs in service continue.
  void set_capacity(double t, int capacity);
  /// All jobs finished at or before `until`, ordered by finish time.
  std::vector<Completion> poll(double until);
  /// Jobs that entered service since the last call, with their finish times.
  std::vector<Completion> take_started();

  int capacity() const { return capacity_; }
  std::size_t backlog() const { return waiting_.size(); }
  std::size_t in_service() const { return running_.size(); }
  std::size_t pending_arrivals() const { return arrivals_.size(); }

 private:
  struct Job {
    std::uint64_t id;
    double arrival;
    double service;
  };
  struct Running {
    Completion completion;
    bool operator>(const Running& o) const {
      return completion.finish != o.completion.finish ? completion.finish > o.completion.finish
                                                      : completion.id > o.completion.id;
    }
  };
  struct LaterArrival {
    bool operator()(const Job& a, const Job& b) const {
      return a.arrival != b.arrival ? a.arrival > b.arrival : a.id > b.id;
    }
  };

  void advance(double until, std::vector<Completion>* done);
  void start_jobs(double now);

  int capacity_;
  std::uint64_t next_id_ = 0;
  double now_ = 0.0;
  std::priority_queue<Job, std::vector<Job>, LaterArrival> arrivals_;
  std::deque<Job> waiting_;
  std::priority_queue<Running, std::vector<Running>, std::greater<>> running_;
  std::vector<Completion> finished_;
  std::vector<Completion> started_;
};

}  // namespace rccs
