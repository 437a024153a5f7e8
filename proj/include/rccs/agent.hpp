#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rccs/freq_adapter.hpp"
#include "rccs/model.hpp"
#include "rccs/mpc.hpp"

namespace rccs {

enum class Variant { MPC, AMPC, OAMPC, RCCS };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct VariantFlags {
  bool recovery = false;
  bool open_loop = false;
  bool adaptive = false;
};

VariantFlags flags(Variant v);

enum class ActionSource { Closed, OpenLoop, Recovery, Hold };

const char* to_string(ActionSource s);
ActionSource action_source_from_string(const std::string& name);

struct AgentParams {
  Variant variant = Variant::RCCS;
  double h_q = 0.005;
  double fixed_period = 0.03;  // used when the variant is not adaptive
  double sigma_max = 0.2;
  int max_outstanding = 4;
  AdapterParams adapter;
  // Recovery LQR weights at h_q, about 7x softer than the MPC on position
  // but still able to hold the ball against the actuator noise.
  Vector<double> recovery_state_weight = (Vector<double>(3) << 1.0, 0.1, 0.1).finished();
  double recovery_input_weight = 0.1;
  int targets = 1;

  void validate() const;
};

struct Action {
  Vector<double> u;
  ActionSource source = ActionSource::Hold;
  int open_loop_index = 0;
  bool hit = false;
  std::int64_t governing_k = -1;  // sample index of the response used
  double governing_rtt = std::numeric_limits<double>::quiet_NaN();
  int governing_iterations = 0;
  double governing_tau_c = std::numeric_limits<double>::quiet_NaN();
};

struct OutgoingRequest {
  ControlRequest<double> request;
  int target = 0;
};

struct TickOutcome {
  Action action;
  std::optional<OutgoingRequest> request;
  std::vector<std::int64_t> cancelled;
};

/// Plant-side client working in base ticks of h_q.
///
/// Requests are admitted every h_d / h_q ticks and carry the inputs the
/// agent will apply until their activation one period later. Responses are
/// arbitrated by sample index; the freshest active one is applied closed-loop
/// or open-loop by elapsed periods, with local recovery past sigma_max.
/// Without open-loop application a late response is not usable at all: the
/// agent recovers if it can and otherwise holds the stale u(0).
class Agent {
 public:
  Agent(AgentParams params, const ContinuousModel<double>& plant, const PlantParams& plant_params = {});

  /// Admission, action selection, miss accounting and (every h_f) period
  /// adaptation for tick k.
  TickOutcome on_tick(std::int64_t k, const Vector<double>& x_meas, double setpoint);

  /// Returns true when the response was installed.
  bool on_response(const ControlResponse<double>& r, double arrival);

  /// Action for tick k given the responses held now; no side effects.
  Action select_action(std::int64_t k, const Vector<double>& x_meas) const;

  Vector<double> recovery_u(const Vector<double>& x) const;
  void switch_target(int target);

  int target() const { return target_; }
  int period_ticks() const { return period_ticks_; }
  double period() const { return period_ticks_ * params_.h_q; }
  const FrequencyAdapter& adapter() const { return adapter_; }
  const MissTracker& tracker() const { return tracker_; }
  const AgentParams& params() const { return params_; }
  const Matrix<double>& recovery_gain() const { return recovery_gain_; }
  std::size_t outstanding() const { return outstanding_.size(); }
  std::size_t held() const { return held_.size(); }

 private:
  struct Outstanding {
    std::int64_t k;
    int period_ticks;
  };
  struct Held {
    ControlResponse<double> response;
    int period_ticks;
    double arrival;
  };

  const Held* governing(std::int64_t k) const;
  Matrix<double> pending_inputs(std::int64_t k, const Vector<double>& x_meas, int ticks) const;
  void prune(std::int64_t k);

  AgentParams params_;
  VariantFlags flags_;
  PlantParams plant_params_;
  DiscreteModel<double> base_model_;
  Matrix<double> recovery_gain_;
  FrequencyAdapter adapter_;
  MissTracker tracker_;
  int period_ticks_;
  int target_ = 0;
  std::optional<std::int64_t> first_activation_;
  std::vector<Outstanding> outstanding_;
  std::vector<Held> held_;  // ordered by sample index
};

}  // namespace rccs
