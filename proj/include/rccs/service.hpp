#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "rccs/io.hpp"
#include "rccs/mpc.hpp"
#include "rccs/sim.hpp"

namespace httplib {
class Server;
}

namespace rccs {

/// Everything the controller service needs; taken from a scenario so the
/// service and its clients agree on plant and weights.
struct ServiceConfig {
  PlantParams plant = ScenarioConfig{}.plant;
  ControllerConfig controller;
  double h_q = 0.005;
  double h_min = 0.03;
  double h_max = 0.1;
  int workers = 8;  // HTTP worker threads

  static ServiceConfig from_scenario(const ScenarioConfig& cfg);
  Json to_json() const;
  /// FNV-1a over the canonical JSON dump, as 16 hex digits.
  std::string hash() const;
};

struct HttpReply {
  int status = 200;
  Json body;
};

/// Stateless MPC endpoint logic, usable without a socket.
class ControlService {
 public:
  explicit ControlService(ServiceConfig cfg);

  /// POST /solve. 400 on a malformed body (the error names the field), 422
  /// when h_d is outside [h_min, h_max] or not a multiple of h_q, 500 only on
  /// an internal error. Solver trouble is a 200 with degraded set.
  HttpReply solve(const std::string& body) const;
  /// GET /healthz; 503 until warm_up() has finished.
  HttpReply health() const;

  /// Builds the per-period problem data for every admissible period.
  void warm_up();
  bool ready() const { return ready_.load(); }
  const ServiceConfig& config() const { return cfg_; }
  /// Number of /solve calls answered with 200.
  std::uint64_t solved() const { return solved_.load(); }

 private:
  ServiceConfig cfg_;
  std::string hash_;
  MpcController<double> controller_;
  std::atomic<bool> ready_{false};
  mutable std::atomic<std::uint64_t> solved_{0};
};

/// HTTP/1.1 front end (keep-alive) for ControlService.
class HttpService {
 public:
  explicit HttpService(ServiceConfig cfg);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds, then warms up while already answering /healthz with 503.
  /// Returns the bound port (pass 0 for an ephemeral one). Throws when the
  /// port cannot be bound.
  int start(const std::string& host, int port);
  void stop();
  bool running() const;

  ControlService& service() { return *service_; }

 private:
  std::unique_ptr<ControlService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  std::thread warmer_;
};

}  // namespace rccs
