#include "rccs/live.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "rccs/io.hpp"
#include "rccs/wire.hpp"

namespace rccs {

namespace {

using Clock = std::chrono::steady_clock;

// Same stream numbers as the simulator so the plant sees the same
// disturbance and noise realization for a given seed.
constexpr std::uint64_t kDisturbanceStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kChaosStream = 7;

struct Job {
  std::size_t record;
  int target;
  Clock::time_point due;
  std::string body;
  std::int64_t k;
  double sample_time;
};

struct Arrival {
  ControlResponse<double> response;
  double time;
};

// Request I/O shared between the tick loop and the sender threads. The tick
// loop is the only consumer of `inbox`.
class Exchange {
 public:
  Exchange(const LiveConfig& cfg, Clock::time_point start) : cfg_(cfg), start_(start) {}

  void run_sender() {
    std::map<int, std::unique_ptr<httplib::Client>> clients;
    for (;;) {
      Job job;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return done_ || !jobs_.empty(); });
        if (done_) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      std::this_thread::sleep_until(job.due);
      const double sent = seconds(Clock::now());
      if (sent - job.sample_time > cfg_.send_deadline) {
        std::lock_guard<std::mutex> lock(mutex_);
        ++dropped_;
        continue;
      }
      auto& client = clients[job.target];
      if (!client) client = make_client(job.target);
      auto res = client->Post("/solve", job.body, "application/json");
      const double now = seconds(Clock::now());
      std::optional<ControlResponse<double>> parsed;
      std::string problem;
      if (!res) {
        problem = httplib::to_string(res.error());
        client.reset();
      } else if (res->status != 200) {
        problem = "HTTP " + std::to_string(res->status) + " " + res->body;
      } else {
        try {
          parsed = response_from_json(Json::parse(res->body));
        } catch (const std::exception& e) {
          problem = std::string("bad response: ") + e.what();
        }
      }
      std::lock_guard<std::mutex> lock(mutex_);
      RequestRecord& rec = records_[job.record];
      rec.start = sent;
      if (parsed) {
        rec.delivered = now;
        rec.tau_c = parsed->processing_time;
        inbox_.push_back({std::move(*parsed), now});
        if (failing_) spdlog::info("endpoint {} answering again", cfg_.endpoints[job.target]);
        failing_ = false;
      } else {
        ++failed_;
        if (!failing_) spdlog::warn("request k={} to {} failed: {}", job.k, cfg_.endpoints[job.target], problem);
        failing_ = true;
      }
    }
  }

  std::size_t submit(RequestRecord record, int target, Clock::time_point due, std::string body) {
    std::lock_guard<std::mutex> lock(mutex_);
    records_.push_back(record);
    jobs_.push_back({records_.size() - 1, target, due, std::move(body), record.k, record.sent});
    cv_.notify_one();
    return records_.size() - 1;
  }

  void cancel(std::int64_t k) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = std::find_if(jobs_.begin(), jobs_.end(), [k](const Job& j) { return j.k == k; });
    if (it != jobs_.end()) {
      jobs_.erase(it);
      ++dropped_;
    }
  }

  std::vector<Arrival> take() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<Arrival> out;
    out.swap(inbox_);
    return out;
  }

  void finish() {
    std::lock_guard<std::mutex> lock(mutex_);
    done_ = true;
    cv_.notify_all();
  }

  double seconds(Clock::time_point t) const { return std::chrono::duration<double>(t - start_).count(); }

  std::vector<RequestRecord> records_;
  std::int64_t failed_ = 0;
  std::int64_t dropped_ = 0;

 private:
  std::unique_ptr<httplib::Client> make_client(int target) const {
    auto c = std::make_unique<httplib::Client>(cfg_.endpoints[static_cast<std::size_t>(target)]);
    const auto usec = [](double s) { return static_cast<time_t>(std::llround(s * 1e6)); };
    c->set_connection_timeout(0, usec(cfg_.connect_timeout));
    c->set_read_timeout(0, usec(cfg_.read_timeout));
    c->set_write_timeout(0, usec(cfg_.read_timeout));
    c->set_keep_alive(true);
    c->set_tcp_nodelay(true);
    return c;
  }

  const LiveConfig& cfg_;
  Clock::time_point start_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Job> jobs_;
  std::vector<Arrival> inbox_;
  bool done_ = false;
  bool failing_ = false;
};

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  return v[mid];
}

}  // namespace

LiveResult run_live(const LiveConfig& cfg, const std::atomic<bool>* cancel) {
  const ScenarioConfig& sc = cfg.scenario;
  if (cfg.endpoints.empty()) throw std::invalid_argument("live client: at least one endpoint required");
  if (sc.tenants.size() != 1) throw std::invalid_argument("live client: runs a single tenant");
  if (cfg.senders < 1) throw std::invalid_argument("live client: senders must be >= 1");
  ScenarioConfig checked = sc;
  checked.clouds.assign(cfg.endpoints.size(), Cloud::K8S);
  checked.validate();

  const ContinuousModel<double> plant_model = ball_and_beam<double>(sc.plant);
  const DiscreteModel<double> base = discretize<double>(plant_model, sc.h_q);
  AgentParams agent_params;
  agent_params.variant = sc.variant;
  agent_params.h_q = sc.h_q;
  agent_params.fixed_period = sc.fixed_period;
  agent_params.sigma_max = sc.sigma_max;
  agent_params.adapter = sc.adapter;
  agent_params.targets = static_cast<int>(cfg.endpoints.size());
  Agent agent(agent_params, plant_model, sc.plant);

  std::mt19937_64 dist_rng(stream_seed(sc.seed, kDisturbanceStream, 0));
  const DisturbanceSchedule disturbances =
      sc.disturbances ? gen_disturbances(dist_rng, sc.duration, sc.h_q, sc.disturbance) : DisturbanceSchedule{};
  ActuatorNoise noise(stream_seed(sc.seed, kNoiseStream, 0), sc.actuator_noise);
  std::optional<ChaosOverlay> chaos;
  if (sc.chaos) chaos.emplace(*sc.chaos, stream_seed(sc.seed, kChaosStream));
  std::vector<TargetSwitch> switches = sc.switches;
  std::stable_sort(switches.begin(), switches.end(),
                   [](const TargetSwitch& a, const TargetSwitch& b) { return a.t < b.t; });
  std::size_t next_switch = 0;

  // Ideal reference first so its cost does not disturb the real-time loop.
  const Trace reference = run_ideal(checked)[0];

  const Clock::time_point start = Clock::now();
  Exchange exchange(cfg, start);
  std::vector<std::thread> senders;
  for (int i = 0; i < cfg.senders; ++i) senders.emplace_back([&exchange] { exchange.run_sender(); });

  LiveResult result;
  PlantState<double> plant{Vector<double>::Zero(3), 0.0, false};
  const auto tick = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(sc.h_q));
  const std::int64_t K = sc.ticks();
  double load = 0.0;
  std::int64_t requests = 0;
  double lateness_logged = 0.0;
  for (std::int64_t k = 0; k < K; ++k) {
    if (cancel && cancel->load()) break;
    const Clock::time_point deadline = start + k * tick;
    std::this_thread::sleep_until(deadline);
    const double late = exchange.seconds(Clock::now()) - static_cast<double>(k) * sc.h_q;
    result.max_lateness = std::max(result.max_lateness, late);
    if (late > sc.h_q) {
      ++result.overruns;
      if (late - lateness_logged > 0.05 || result.overruns == 1) {
        spdlog::warn("tick {} started {:.1f} ms late", k, late * 1e3);
        lateness_logged = late;
      }
    }
    const double t = static_cast<double>(k) * sc.h_q;
    for (; next_switch < switches.size() && switches[next_switch].t <= t; ++next_switch) {
      agent.switch_target(switches[next_switch].target);
      spdlog::info("t={:.2f} switching to {}", t, cfg.endpoints[static_cast<std::size_t>(switches[next_switch].target)]);
    }
    const double extra = chaos ? chaos->advance(t) : 0.0;
    for (Arrival& a : exchange.take()) {
      load += a.response.processing_time;
      agent.on_response(a.response, a.time);
    }

    const Vector<double> x = plant.x;
    const double sp = setpoint(t);
    const double h_d = agent.period();
    TickOutcome out = agent.on_tick(k, x, sp);
    for (std::int64_t c : out.cancelled) exchange.cancel(c);
    if (out.request) {
      RequestRecord rec;
      rec.k = k;
      rec.sent = t;
      rec.uplink = extra;
      const auto due = deadline + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(extra));
      exchange.submit(rec, out.request->target, due, request_to_json(out.request->request).dump());
      ++requests;
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
    rec.rho = agent.adapter().smoothed_loss();
    rec.rtt = a.governing_rtt;
    rec.iterations = a.governing_iterations;
    rec.tau_c = a.governing_tau_c;
    rec.failed = plant.failed;
    result.trace.push_back(rec);

    Vector<double> u = a.u;
    u(0) += sc.actuator_noise > 0.0 ? noise() : 0.0;
    plant = step_plant<double>(plant, u, disturbances.at(k), base, sc.plant);
  }
  exchange.finish();
  for (auto& s : senders) s.join();

  if (result.trace.size() == reference.size()) {
    const std::vector<double> e = clre(result.trace, reference, sc.h_q);
    for (std::size_t j = 0; j < e.size(); ++j) result.trace[j].clre = e[j];
  }
  result.metrics = summarize(result.trace, load, requests);
  result.requests = std::move(exchange.records_);
  result.failed_requests = exchange.failed_;
  result.dropped_requests = exchange.dropped_;
  result.overrun_ratio = result.trace.empty() ? 0.0 : static_cast<double>(result.overruns) / result.trace.size();
  std::vector<double> rtts;
  for (const auto& r : result.requests)
    if (!std::isnan(r.delivered)) rtts.push_back(r.delivered - r.start);
  result.median_rtt = median(rtts);
  return result;
}

Json live_summary_json(const LiveResult& r) {
  Json doc = metrics_to_json(r.metrics);
  doc["overruns"] = r.overruns;
  doc["overrun_ratio"] = r.overrun_ratio;
  doc["max_lateness"] = r.max_lateness;
  doc["failed_requests"] = r.failed_requests;
  doc["dropped_requests"] = r.dropped_requests;
  if (std::isnan(r.median_rtt))
    doc["median_rtt"] = nullptr;
  else
    doc["median_rtt"] = r.median_rtt;
  return doc;
}

}  // namespace rccs
