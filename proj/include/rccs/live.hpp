#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "rccs/io.hpp"
#include "rccs/sim.hpp"

namespace rccs {

struct LiveConfig {
  /// Plant, agent, seed, duration and target switches. The chaos section, if
  /// present, is applied by a client-side shim that holds each request back
  /// before sending. Delay models and queue settings are ignored: the network
  /// and the service provide the real ones.
  ScenarioConfig scenario;
  /// "host:port" per target; switches index into this list.
  std::vector<std::string> endpoints;
  int senders = 4;
  double connect_timeout = 0.05;
  double read_timeout = 0.5;
  /// Requests still queued this long after their sample time are dropped.
  double send_deadline = 0.2;
};

struct LiveResult {
  Trace trace;
  std::vector<RequestRecord> requests;  // delivered is NaN for failures
  MetricsSummary metrics;
  std::int64_t overruns = 0;  // ticks started more than one base period late
  double overrun_ratio = 0.0;
  double max_lateness = 0.0;
  std::int64_t failed_requests = 0;
  std::int64_t dropped_requests = 0;
  double median_rtt = 0.0;
};

/// Runs plant and agent on a wall-clock tick of h_q against the endpoints.
/// Unreachable endpoints are not an error: the agent falls back to recovery.
/// CLRE is filled in against the ideal run of the same scenario. Setting
/// `cancel` ends the run early.
LiveResult run_live(const LiveConfig& cfg, const std::atomic<bool>* cancel = nullptr);

Json live_summary_json(const LiveResult& r);

}  // namespace rccs
