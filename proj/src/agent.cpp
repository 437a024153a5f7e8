#include "rccs/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rccs/riccati.hpp"

namespace rccs {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::MPC: return "MPC";
    case Variant::AMPC: return "a-MPC";
    case Variant::OAMPC: return "oa-MPC";
    case Variant::RCCS: return "R-CCS";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : {Variant::MPC, Variant::AMPC, Variant::OAMPC, Variant::RCCS})
    if (name == to_string(v)) return v;
  throw std::invalid_argument("unknown controller variant: " + name);
}

VariantFlags flags(Variant v) {
  switch (v) {
    case Variant::MPC: return {false, false, false};
    case Variant::AMPC: return {true, false, false};
    case Variant::OAMPC: return {true, true, false};
    case Variant::RCCS: return {true, true, true};
  }
  return {};
}

const char* to_string(ActionSource s) {
  switch (s) {
    case ActionSource::Closed: return "closed";
    case ActionSource::OpenLoop: return "open_loop";
    case ActionSource::Recovery: return "recovery";
    case ActionSource::Hold: return "hold";
  }
  return "unknown";
}

ActionSource action_source_from_string(const std::string& name) {
  for (ActionSource s : {ActionSource::Closed, ActionSource::OpenLoop, ActionSource::Recovery, ActionSource::Hold})
    if (name == to_string(s)) return s;
  throw std::invalid_argument("unknown action source: " + name);
}

void AgentParams::validate() const {
  if (!(h_q > 0.0)) throw std::invalid_argument("agent: h_q must be positive");
  if (!(sigma_max > 0.0)) throw std::invalid_argument("agent: sigma_max must be positive");
  if (max_outstanding < 1) throw std::invalid_argument("agent: max_outstanding must be >= 1");
  if (targets < 1) throw std::invalid_argument("agent: at least one target required");
  if (!flags(variant).adaptive) {
    const double ticks = fixed_period / h_q;
    if (!(fixed_period > 0.0) || std::abs(ticks - std::round(ticks)) > 1e-9)
      throw std::invalid_argument("agent: fixed period must be a positive multiple of h_q");
  }
  if (std::abs(adapter.h_q - h_q) > 1e-15) throw std::invalid_argument("agent: adapter h_q differs from agent h_q");
  if (!(recovery_input_weight > 0.0)) throw std::invalid_argument("agent: recovery input weight must be positive");
  adapter.validate();
}

Agent::Agent(AgentParams params, const ContinuousModel<double>& plant, const PlantParams& plant_params)
    : params_(std::move(params)),
      flags_(flags(params_.variant)),
      plant_params_(plant_params),
      base_model_(discretize(plant, params_.h_q)),
      adapter_((params_.validate(), params_.adapter)),
      tracker_(params_.adapter.window_ticks()) {
  if (params_.recovery_state_weight.size() != plant.states())
    throw std::invalid_argument("agent: recovery weight dimension mismatch");
  const Matrix<double> Q = params_.recovery_state_weight.asDiagonal();
  const Matrix<double> R = Matrix<double>::Identity(plant.inputs(), plant.inputs()) * params_.recovery_input_weight;
  recovery_gain_ = lqr_gain<double>(base_model_, Q, R);
  period_ticks_ = flags_.adaptive ? adapter_.period_ticks()
                                  : static_cast<int>(std::lround(params_.fixed_period / params_.h_q));
}

Vector<double> Agent::recovery_u(const Vector<double>& x) const {
  const double limit = plant_params_.input_limit;
  return (-recovery_gain_ * x).cwiseMax(-limit).cwiseMin(limit);
}

void Agent::switch_target(int target) {
  if (target < 0 || target >= params_.targets) throw std::invalid_argument("agent: unknown target");
  target_ = target;
}

const Agent::Held* Agent::governing(std::int64_t k) const {
  for (auto it = held_.rbegin(); it != held_.rend(); ++it)
    if (it->response.k + it->period_ticks <= k) return &*it;
  return nullptr;
}

void Agent::prune(std::int64_t k) {
  const Held* g = governing(k);
  if (!g) return;
  const std::int64_t keep_from = g->response.k;
  held_.erase(std::remove_if(held_.begin(), held_.end(), [&](const Held& h) { return h.response.k < keep_from; }),
              held_.end());
}

Action Agent::select_action(std::int64_t k, const Vector<double>& x_meas) const {
  const auto sigma_ticks = static_cast<std::int64_t>(std::floor(params_.sigma_max / params_.h_q + 1e-9));
  Action a;
  a.u = Vector<double>::Zero(base_model_.inputs());
  const Held* g = governing(k);
  if (!g) {
    // Before the first request could possibly be active nothing is late yet.
    if (!first_activation_ || k < *first_activation_) {
      a.hit = true;
      return a;
    }
    if (flags_.recovery && (!flags_.open_loop || k - *first_activation_ > sigma_ticks)) {
      a.source = ActionSource::Recovery;
      a.u = recovery_u(x_meas);
    }
    return a;
  }
  const ControlResponse<double>& r = g->response;
  const std::int64_t age = k - (r.k + g->period_ticks);
  const std::int64_t index = age / g->period_ticks;
  a.governing_k = r.k;
  a.governing_rtt = g->arrival - static_cast<double>(r.k) * params_.h_q;
  a.governing_iterations = r.iterations;
  a.governing_tau_c = r.processing_time;
  if (flags_.recovery && (age > sigma_ticks || (index > 0 && !flags_.open_loop))) {
    a.source = ActionSource::Recovery;
    a.u = recovery_u(x_meas);
  } else if (index == 0) {
    a.source = ActionSource::Closed;
    a.u = r.u_seq.col(0);
    a.hit = true;
  } else if (flags_.open_loop) {
    a.source = ActionSource::OpenLoop;
    a.open_loop_index = static_cast<int>(std::min<std::int64_t>(index, r.horizon() - 1));
    a.u = r.u_seq.col(a.open_loop_index);
  } else {
    a.source = ActionSource::Hold;
    a.u = r.u_seq.col(0);
  }
  return a;
}

Matrix<double> Agent::pending_inputs(std::int64_t k, const Vector<double>& x_meas, int ticks) const {
  const double limit = plant_params_.input_limit;
  Matrix<double> pending(base_model_.inputs(), ticks);
  Vector<double> x = x_meas;
  for (int j = 0; j < ticks; ++j) {
    const Vector<double> u = select_action(k + j, x).u.cwiseMax(-limit).cwiseMin(limit);
    pending.col(j) = u;
    x = base_model_.A * x + base_model_.B * u;
  }
  return pending;
}

TickOutcome Agent::on_tick(std::int64_t k, const Vector<double>& x_meas, double setpoint) {
  TickOutcome out;
  if (k % period_ticks_ == 0) {
    const int p = period_ticks_;
    OutgoingRequest req;
    req.target = target_;
    req.request.k = k;
    req.request.x = x_meas;
    req.request.h_d = p * params_.h_q;
    req.request.x_target = Vector<double>::Zero(x_meas.size());
    req.request.x_target(0) = setpoint;
    req.request.pending_inputs = pending_inputs(k, x_meas, p);
    out.request = std::move(req);
    outstanding_.push_back({k, p});
    while (static_cast<int>(outstanding_.size()) > params_.max_outstanding) {
      out.cancelled.push_back(outstanding_.front().k);
      outstanding_.erase(outstanding_.begin());
    }
    if (!first_activation_) first_activation_ = k + p;
  }
  out.action = select_action(k, x_meas);
  prune(k);
  tracker_.record(k, out.action.hit);
  if ((k + 1) % tracker_.window() == 0) {
    adapter_.update(tracker_.ratio());
    if (flags_.adaptive) period_ticks_ = adapter_.period_ticks();
  }
  return out;
}

bool Agent::on_response(const ControlResponse<double>& r, double arrival) {
  const auto it = std::find_if(outstanding_.begin(), outstanding_.end(), [&](const Outstanding& o) { return o.k == r.k; });
  if (it == outstanding_.end()) return false;
  const int sent_period = it->period_ticks;
  outstanding_.erase(it);
  if (r.degraded || r.u_seq.cols() == 0) return false;
  const int p = static_cast<int>(std::lround(r.h_d / params_.h_q));
  if (p != sent_period || p != period_ticks_) return false;
  if (!held_.empty() && held_.back().response.k > r.k) return false;
  held_.push_back({r, p, arrival});
  return true;
}

}  // namespace rccs
