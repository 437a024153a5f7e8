#pragma once

#include <cstdint>
#include <vector>

namespace rccs {

struct AdapterParams {
  double K = 3.5;
  double T_i = 583.0;
  double T_d = 0.0;
  double alpha = 0.1;
  double rho_r = 0.05;
  double h_f = 0.5;
  double h_min = 0.03;
  double h_max = 0.1;
  double h_q = 0.005;
  // Start pessimistic: slowest rate, everything missed.
  double initial_period = 0.1;
  double initial_loss = 1.0;

  static AdapterParams pi() { return {}; }
  static AdapterParams pid(double h_f) {
    AdapterParams p;
    p.h_f = h_f;
    p.T_d = 214.0;
    return p;
  }

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
  int window_ticks() const;
};

/// Number of base ticks of the quantized period.
int quantize_ticks(double h_c, double h_q, double h_min, double h_max);
/// h_d = ceil(h_c / h_q + 0.5) h_q limited to [h_min, h_max].
double quantize(double h_c, double h_q, double h_min, double h_max);

/// Hit/miss flags of the last `window` base ticks.
class MissTracker {
 public:
  explicit MissTracker(int window);

  /// One flag per tick; ticks must strictly increase.
  void record(std::int64_t tick, bool hit);
  double ratio() const;
  int window() const { return window_; }
  int recorded() const { return count_; }

 private:
  int window_;
  std::vector<char> miss_;
  int next_ = 0;
  int count_ = 0;
  int misses_ = 0;
  std::int64_t last_tick_ = INT64_MIN;
};

/// Velocity-form PID on the smoothed miss ratio that moves the continuous
/// period h_c; the applied period is its quantization.
class FrequencyAdapter {
 public:
  explicit FrequencyAdapter(const AdapterParams& params = {});

  /// One adapter step with the miss ratio of the last h_f seconds.
  double update(double loss);

  double continuous_period() const { return h_c_; }
  double period() const;
  int period_ticks() const;
  double smoothed_loss() const { return rho_; }
  double error() const { return e_[0]; }
  const AdapterParams& params() const { return params_; }

 private:
  AdapterParams params_;
  double rho_;
  double e_[3];  // e(t), e(t - h_f), e(t - 2 h_f)
  double h_c_;
};

}  // namespace rccs
