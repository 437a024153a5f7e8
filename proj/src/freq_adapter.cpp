#include "rccs/freq_adapter.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <stdexcept>

namespace rccs {

namespace {

constexpr double kSlack = 1e-9;

int min_ticks(double h_min, double h_q) { return std::max(1, static_cast<int>(std::ceil(h_min / h_q - kSlack))); }
int max_ticks(double h_max, double h_q) { return static_cast<int>(std::floor(h_max / h_q + kSlack)); }

}  // namespace

void AdapterParams::validate() const {
  if (!(h_q > 0.0)) throw std::invalid_argument("freq_adapter: h_q must be positive");
  if (!(h_min > 0.0) || !(h_max >= h_min)) throw std::invalid_argument("freq_adapter: need 0 < h_min <= h_max");
  if (max_ticks(h_max, h_q) < min_ticks(h_min, h_q))
    throw std::invalid_argument("freq_adapter: no multiple of h_q within [h_min, h_max]");
  if (!(h_f >= h_q)) throw std::invalid_argument("freq_adapter: h_f must be at least h_q");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("freq_adapter: alpha must lie in (0, 1]");
  if (!(T_i > 0.0) || !(T_d >= 0.0) || !std::isfinite(K)) throw std::invalid_argument("freq_adapter: invalid gains");
  if (!(rho_r >= 0.0 && rho_r <= 1.0)) throw std::invalid_argument("freq_adapter: rho_r must lie in [0, 1]");
  if (!(initial_loss >= 0.0 && initial_loss <= 1.0))
    throw std::invalid_argument("freq_adapter: initial loss must lie in [0, 1]");
  if (!std::isfinite(initial_period)) throw std::invalid_argument("freq_adapter: initial period must be finite");
}

int AdapterParams::window_ticks() const { return std::max(1, static_cast<int>(std::lround(h_f / h_q))); }

int quantize_ticks(double h_c, double h_q, double h_min, double h_max) {
  if (!(h_q > 0.0)) throw std::invalid_argument("quantize: h_q must be positive");
  const double raw = std::ceil(h_c / h_q + 0.5 - kSlack);
  const double lo = min_ticks(h_min, h_q);
  const double hi = max_ticks(h_max, h_q);
  return static_cast<int>(std::clamp(raw, lo, std::max(lo, hi)));
}

double quantize(double h_c, double h_q, double h_min, double h_max) {
  return quantize_ticks(h_c, h_q, h_min, h_max) * h_q;
}

MissTracker::MissTracker(int window) : window_(window), miss_(static_cast<std::size_t>(std::max(window, 1)), 0) {
  if (window < 1) throw std::invalid_argument("MissTracker: window must be >= 1");
}

void MissTracker::record(std::int64_t tick, bool hit) {
  if (tick <= last_tick_) throw std::logic_error("MissTracker: at most one record per tick");
  last_tick_ = tick;
  char& slot = miss_[static_cast<std::size_t>(next_)];
  if (count_ == window_) misses_ -= slot;
  else ++count_;
  slot = hit ? 0 : 1;
  misses_ += slot;
  next_ = (next_ + 1) % window_;
}

double MissTracker::ratio() const { return count_ == 0 ? 0.0 : static_cast<double>(misses_) / count_; }

FrequencyAdapter::FrequencyAdapter(const AdapterParams& params) : params_(params) {
  params_.validate();
  rho_ = params_.initial_loss;
  const double e = params_.rho_r - rho_;
  e_[0] = e_[1] = e_[2] = e;
  // The lower limit sits one step below h_min: the rounding in quantize()
  // maps h_min itself one step up, so h_min would otherwise be unreachable.
  h_c_ = std::clamp(params_.initial_period, params_.h_min - params_.h_q, params_.h_max);
}

double FrequencyAdapter::update(double loss) {
  const AdapterParams& p = params_;
  const double l = std::clamp(loss, 0.0, 1.0);
  rho_ = p.alpha * l + (1.0 - p.alpha) * rho_;
  e_[2] = e_[1];
  e_[1] = e_[0];
  e_[0] = p.rho_r - rho_;
  const double de = (e_[0] - e_[1]) / p.h_f;
  const double dde = (e_[0] - 2.0 * e_[1] + e_[2]) / (p.h_f * p.h_f);
  const double rate = -p.K * (de + e_[0] / p.T_i + p.T_d * dde);
  h_c_ = std::clamp(h_c_ + p.h_f * rate, p.h_min - p.h_q, p.h_max);
  return h_c_;
}

double FrequencyAdapter::period() const { return period_ticks() * params_.h_q; }

int FrequencyAdapter::period_ticks() const {
  return quantize_ticks(h_c_, params_.h_q, params_.h_min, params_.h_max);
}

}  // namespace rccs
