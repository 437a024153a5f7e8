#include "rccs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <stdexcept>

namespace rccs {

namespace {

enum Stream : std::uint64_t {
  kDisturbance = 1,
  kActuatorNoise = 2,
  kProcessingChain = 3,
  kFlightChain = 4,
  kDelaySamples = 5,
  kIterations = 6,
  kChaos = 7,
};

struct Delivery {
  double time;
  std::uint64_t seq;
  int tenant;
  ControlResponse<double> response;

  bool operator>(const Delivery& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

// Work waiting in the worker queue and what to do once it starts.
struct QueuedJob {
  int tenant;
  std::size_t record;
  ControlResponse<double> response;
  double downlink;
  bool after_finish;  // deliver at finish + downlink, else start + downlink
};

struct Tenant {
  int index;
  std::int64_t admit_tick;
  std::unique_ptr<Agent> agent;
  PlantState<double> plant;
  DisturbanceSchedule disturbances;
  ActuatorNoise noise;
  MarkovChain processing;
  MarkovChain flight;
  std::mt19937_64 delay_rng;
  std::mt19937_64 iteration_rng;
  Trace trace;
  std::vector<RequestRecord> records;
  double load = 0.0;
  std::int64_t requests = 0;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument("scenario config: " + field + " " + what);
}

}  // namespace

const char* to_string(DelayMode mode) {
  switch (mode) {
    case DelayMode::None: return "none";
    case DelayMode::Markov: return "markov";
    case DelayMode::Profile: return "profile";
  }
  return "unknown";
}

DelayMode delay_mode_from_string(const std::string& name) {
  for (DelayMode m : {DelayMode::None, DelayMode::Markov, DelayMode::Profile})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown delay mode: " + name);
}

MpcSpec<double> ControllerConfig::spec(const PlantParams& plant) const {
  MpcSpec<double> s = MpcSpec<double>::ball_and_beam_default(plant);
  if (state_cost.size() != 3) throw std::invalid_argument("controller: state_cost needs 3 entries");
  s.state_cost_rate = Vector<double>::Map(state_cost.data(), 3).asDiagonal();
  s.input_cost_rate(0, 0) = input_cost;
  s.slack_weight = slack_weight;
  s.horizon_time = horizon_time;
  return s;
}

void ScenarioConfig::validate() const {
  require(std::isfinite(duration) && duration > 0.0, "duration", "must be positive");
  require(h_q > 0.0, "h_q", "must be positive");
  require(std::abs(adapter.h_q - h_q) < 1e-15, "adapter.h_q", "must equal h_q");
  require(delay_scenario == 1 || delay_scenario == 2, "delay_scenario", "must be 1 or 2");
  require(!clouds.empty(), "clouds", "must not be empty");
  require(rtt_offset_fraction >= 0.0 && rtt_offset_fraction < 1.0, "rtt_offset_fraction", "must lie in [0, 1)");
  require(iterations_min >= 1 && iterations_max >= iterations_min, "iterations_min/max", "must satisfy 1 <= min <= max");
  require(capacity >= 1, "capacity", "must be >= 1");
  for (const auto& c : capacity_schedule) {
    require(c.capacity >= 1, "capacity_schedule", "capacities must be >= 1");
    require(c.t >= 0.0 && c.t <= duration, "capacity_schedule", "times must lie within the duration");
  }
  require(!tenants.empty(), "tenants", "must not be empty");
  for (double a : tenants) require(a >= 0.0 && a < duration, "tenants", "admission times must lie within the duration");
  for (const auto& s : switches) {
    require(s.t >= 0.0 && s.t <= duration, "switches", "times must lie within the duration");
    require(s.target >= 0 && s.target < static_cast<int>(clouds.size()), "switches", "target out of range");
  }
  require(actuator_noise >= 0.0, "actuator_noise", "must be non-negative");
  require(controller.state_cost.size() == 3, "controller.state_cost", "needs 3 entries");
  require(controller.horizon_time > 0.0, "controller.horizon_time", "must be positive");
  if (chaos) require(chaos->active > 0.0 && chaos->period >= chaos->active, "chaos", "needs 0 < active <= period");
  AgentParams p;
  p.variant = variant;
  p.h_q = h_q;
  p.fixed_period = fixed_period;
  p.sigma_max = sigma_max;
  p.adapter = adapter;
  p.targets = static_cast<int>(clouds.size());
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("scenario config: ") + e.what());
  }
}

std::int64_t ScenarioConfig::ticks() const { return static_cast<std::int64_t>(std::llround(duration / h_q)); }

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::vector<Trace>* reference) {
  cfg.validate();
  if (reference && reference->size() != cfg.tenants.size())
    throw std::invalid_argument("run_scenario: one reference trace per tenant required");

  const ContinuousModel<double> plant_model = ball_and_beam<double>(cfg.plant);
  const DiscreteModel<double> base = discretize<double>(plant_model, cfg.h_q);
  const MpcController<double> controller(plant_model, cfg.controller.spec(cfg.plant), cfg.h_q);
  const DistSpec per_step_profile = delay_state(1);
  std::vector<DistSpec> rtt;
  for (Cloud c : cfg.clouds) rtt.push_back(rtt_fit(rtt_quantiles(c), cfg.rtt_offset_fraction));

  AgentParams agent_params;
  agent_params.variant = cfg.variant;
  agent_params.h_q = cfg.h_q;
  agent_params.fixed_period = cfg.fixed_period;
  agent_params.sigma_max = cfg.sigma_max;
  agent_params.adapter = cfg.adapter;
  agent_params.targets = static_cast<int>(cfg.clouds.size());

  std::vector<Tenant> tenants;
  for (std::size_t i = 0; i < cfg.tenants.size(); ++i) {
    std::mt19937_64 dist_rng(stream_seed(cfg.seed, kDisturbance, i));
    Tenant tn{static_cast<int>(i),
              static_cast<std::int64_t>(std::ceil(cfg.tenants[i] / cfg.h_q - 1e-9)),
              std::make_unique<Agent>(agent_params, plant_model, cfg.plant),
              PlantState<double>{Vector<double>::Zero(3), 0.0, false},
              cfg.disturbances ? gen_disturbances(dist_rng, cfg.duration, cfg.h_q, cfg.disturbance)
                               : DisturbanceSchedule{},
              ActuatorNoise(stream_seed(cfg.seed, kActuatorNoise, i), cfg.actuator_noise),
              processing_chain(cfg.delay_scenario),
              flight_chain(),
              std::mt19937_64(stream_seed(cfg.seed, kDelaySamples, i)),
              std::mt19937_64(stream_seed(cfg.seed, kIterations, i)),
              {},
              {},
              0.0,
              0};
    tn.plant.t = static_cast<double>(tn.admit_tick) * cfg.h_q;
    tenants.push_back(std::move(tn));
  }
  std::vector<std::mt19937_64> chain_rng;
  for (std::size_t i = 0; i < tenants.size(); ++i) {
    chain_rng.emplace_back(stream_seed(cfg.seed, kProcessingChain, i));
    chain_rng.emplace_back(stream_seed(cfg.seed, kFlightChain, i));
  }

  std::optional<ChaosOverlay> chaos;
  if (cfg.chaos) chaos.emplace(*cfg.chaos, stream_seed(cfg.seed, kChaos));
  std::optional<WorkerQueue> queue;
  if (cfg.queue) queue.emplace(cfg.capacity);
  std::vector<CapacityChange> capacity_changes = cfg.capacity_schedule;
  std::stable_sort(capacity_changes.begin(), capacity_changes.end(),
                   [](const CapacityChange& a, const CapacityChange& b) { return a.t < b.t; });
  std::vector<TargetSwitch> switches = cfg.switches;
  std::stable_sort(switches.begin(), switches.end(),
                   [](const TargetSwitch& a, const TargetSwitch& b) { return a.t < b.t; });
  std::size_t next_capacity = 0;
  std::size_t next_switch = 0;

  std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> deliveries;
  std::map<std::uint64_t, QueuedJob> jobs;
  std::uint64_t seq = 0;

  auto drain_queue = [&](double t) {
    if (!queue) return;
    queue->poll(t);
    for (const auto& c : queue->take_started()) {
      auto it = jobs.find(c.id);
      QueuedJob& job = it->second;
      const double at = (job.after_finish ? c.finish : c.start) + job.downlink;
      RequestRecord& rec = tenants[static_cast<std::size_t>(job.tenant)].records[job.record];
      rec.start = c.start;
      rec.delivered = at;
      deliveries.push({at, seq++, job.tenant, std::move(job.response)});
      jobs.erase(it);
    }
  };
  auto deliver = [&](double t) {
    while (!deliveries.empty() && deliveries.top().time <= t) {
      const Delivery& d = deliveries.top();
      tenants[static_cast<std::size_t>(d.tenant)].agent->on_response(d.response, d.time);
      deliveries.pop();
    }
  };

  const std::int64_t K = cfg.ticks();
  for (std::int64_t k = 0; k < K; ++k) {
    const double t = static_cast<double>(k) * cfg.h_q;
    for (; next_capacity < capacity_changes.size() && capacity_changes[next_capacity].t <= t; ++next_capacity)
      if (queue) queue->set_capacity(capacity_changes[next_capacity].t, capacity_changes[next_capacity].capacity);
    for (; next_switch < switches.size() && switches[next_switch].t <= t; ++next_switch)
      for (auto& tn : tenants) tn.agent->switch_target(switches[next_switch].target);
    const double extra = chaos ? chaos->advance(t) : 0.0;
    drain_queue(t);
    deliver(t);

    for (auto& tn : tenants) {
      if (k < tn.admit_tick) continue;
      const auto idx = static_cast<std::size_t>(tn.index);
      tn.processing.step(chain_rng[2 * idx]);
      tn.flight.step(chain_rng[2 * idx + 1]);

      const Vector<double> x = tn.plant.x;
      const double sp = setpoint(t);
      const double h_d = tn.agent->period();
      TickOutcome out = tn.agent->on_tick(k, x, sp);

      if (out.request) {
        const ControlRequest<double>& req = out.request->request;
        ControlResponse<double> r = controller.step(req);
        double tau_c = 0.0;
        double up = 0.0;
        double down = 0.0;
        bool after_finish = true;
        if (cfg.delay != DelayMode::None) {
          const int i = cfg.solver_iterations
                            ? std::max(1, r.iterations)
                            : std::uniform_int_distribution<int>(cfg.iterations_min, cfg.iterations_max)(tn.iteration_rng);
          const DistSpec& per_step =
              cfg.delay == DelayMode::Markov ? delay_state(tn.processing.state()) : per_step_profile;
          tau_c = processing_time(per_step, r.horizon(), i, tn.delay_rng);
          if (cfg.delay == DelayMode::Markov) {
            const double flight = sample(delay_state(tn.flight.state()), tn.delay_rng);
            up = down = 0.5 * flight;
          } else {
            const double round_trip = sample(rtt[static_cast<std::size_t>(out.request->target)], tn.delay_rng);
            up = down = 0.5 * round_trip;
            after_finish = false;
          }
        }
        up += extra;
        r.processing_time = tau_c;
        tn.load += tau_c;
        ++tn.requests;
        RequestRecord record;
        record.k = k;
        record.sent = t;
        record.uplink = up;
        record.tau_c = tau_c;
        record.downlink = down;
        if (queue) {
          const std::uint64_t id = queue->submit(t + up, tau_c);
          jobs.emplace(id, QueuedJob{tn.index, tn.records.size(), std::move(r), down, after_finish});
        } else {
          record.start = t + up;
          record.delivered = t + up + (after_finish ? tau_c : 0.0) + down;
          deliveries.push({record.delivered, seq++, tn.index, std::move(r)});
        }
        tn.records.push_back(record);
      }

      const Action& a = out.action;
      TraceRecord rec;
      rec.t = t;
      rec.position = x(0);
      rec.setpoint = sp;
      rec.u = a.u(0);
      rec.source = a.source;
      rec.open_loop_index = a.open_loop_index;
      rec.h_d = h_d;
      rec.miss = !a.hit;
      rec.rho = tn.agent->adapter().smoothed_loss();
      rec.rtt = a.governing_rtt;
      rec.iterations = a.governing_iterations;
      rec.tau_c = a.governing_tau_c;
      rec.failed = tn.plant.failed;
      tn.trace.push_back(rec);

      Vector<double> u = a.u;
      u(0) += cfg.actuator_noise > 0.0 ? tn.noise() : 0.0;
      tn.plant = step_plant<double>(tn.plant, u, tn.disturbances.at(k), base, cfg.plant);
    }
    drain_queue(t);
    deliver(t);
  }

  ScenarioResult result;
  result.config = cfg;
  for (std::size_t i = 0; i < tenants.size(); ++i) {
    Tenant& tn = tenants[i];
    TenantResult tr;
    tr.tenant = tn.index;
    tr.admitted = static_cast<double>(tn.admit_tick) * cfg.h_q;
    if (reference) {
      const std::vector<double> e = clre(tn.trace, (*reference)[i], cfg.h_q);
      for (std::size_t j = 0; j < e.size(); ++j) tn.trace[j].clre = e[j];
    }
    tr.metrics = summarize(tn.trace, tn.load, tn.requests);
    tr.trace = std::move(tn.trace);
    tr.requests = std::move(tn.records);
    result.tenants.push_back(std::move(tr));
  }
  return result;
}

ScenarioConfig ideal_config(const ScenarioConfig& cfg) {
  ScenarioConfig ideal = cfg;
  ideal.name = cfg.name + "-ideal";
  ideal.variant = Variant::MPC;
  ideal.fixed_period = std::ceil(cfg.adapter.h_min / cfg.h_q - 1e-9) * cfg.h_q;
  ideal.delay = DelayMode::None;
  ideal.queue = false;
  ideal.capacity_schedule.clear();
  ideal.chaos.reset();
  ideal.switches.clear();
  return ideal;
}

std::vector<Trace> run_ideal(const ScenarioConfig& cfg) {
  ScenarioResult r = run_scenario(ideal_config(cfg));
  std::vector<Trace> traces;
  for (auto& t : r.tenants) traces.push_back(std::move(t.trace));
  return traces;
}

ScenarioResult run_with_reference(const ScenarioConfig& cfg) {
  const std::vector<Trace> reference = run_ideal(cfg);
  return run_scenario(cfg, &reference);
}

std::vector<double> clre(const Trace& trace, const Trace& reference, double h_q) {
  if (trace.size() != reference.size()) throw std::invalid_argument("clre: trace lengths differ");
  std::vector<double> out(trace.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double e = trace[i].position - reference[i].position;
    sum += e * e * h_q;
    out[i] = sum;
  }
  return out;
}

MetricsSummary summarize(const Trace& trace, double load, std::int64_t requests) {
  MetricsSummary m;
  m.load = load;
  m.requests = requests;
  if (trace.empty()) return m;
  std::vector<double> freq;
  freq.reserve(trace.size());
  double misses = 0.0;
  double recovery = 0.0;
  double freq_sum = 0.0;
  for (const auto& r : trace) {
    misses += r.miss ? 1.0 : 0.0;
    recovery += r.source == ActionSource::Recovery ? 1.0 : 0.0;
    freq.push_back(1.0 / r.h_d);
    freq_sum += 1.0 / r.h_d;
    if (r.failed && !m.failed) {
      m.failed = true;
      m.failure_time = r.t;
    }
  }
  const auto n = static_cast<double>(trace.size());
  m.miss_ratio = misses / n;
  m.recovery_fraction = recovery / n;
  m.mean_frequency = freq_sum / n;
  m.median_frequency = median_frequency(trace, -INFINITY, INFINITY);
  m.clre = trace.back().clre;
  return m;
}

double median_frequency(const Trace& trace, double from, double to) {
  std::vector<double> f;
  for (const auto& r : trace)
    if (r.t >= from && r.t < to) f.push_back(1.0 / r.h_d);
  if (f.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = f.size() / 2;
  std::nth_element(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(mid), f.end());
  if (f.size() % 2 == 1) return f[mid];
  const double upper = f[mid];
  const double lower = *std::max_element(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace rccs
