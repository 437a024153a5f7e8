#include "rccs/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "rccs/wire.hpp"

#ifndef RCCS_VERSION
#define RCCS_VERSION "dev"
#endif

namespace rccs {

namespace {

Json error_body(const std::string& field, const std::string& message) {
  return Json{{"error", message}, {"field", field}};
}

}  // namespace

ServiceConfig ServiceConfig::from_scenario(const ScenarioConfig& cfg) {
  ServiceConfig s;
  s.plant = cfg.plant;
  s.controller = cfg.controller;
  s.h_q = cfg.h_q;
  s.h_min = cfg.adapter.h_min;
  s.h_max = cfg.adapter.h_max;
  return s;
}

Json ServiceConfig::to_json() const {
  // Reuse the scenario serializer for the shared sections.
  ScenarioConfig sc;
  sc.plant = plant;
  sc.controller = controller;
  const Json doc = scenario_to_json(sc);
  return Json{{"plant", doc["plant"]}, {"controller", doc["controller"]}, {"h_q", h_q}, {"h_min", h_min}, {"h_max", h_max}};
}

std::string ServiceConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ControlService::ControlService(ServiceConfig cfg)
    : cfg_(std::move(cfg)),
      hash_(cfg_.hash()),
      controller_(ball_and_beam<double>(cfg_.plant), cfg_.controller.spec(cfg_.plant), cfg_.h_q) {
  if (!(cfg_.h_q > 0.0) || !(cfg_.h_min > 0.0) || cfg_.h_max < cfg_.h_min)
    throw std::invalid_argument("service config: need 0 < h_min <= h_max and h_q > 0");
}

void ControlService::warm_up() {
  const auto lo = static_cast<int>(std::ceil(cfg_.h_min / cfg_.h_q - 1e-9));
  const auto hi = static_cast<int>(std::floor(cfg_.h_max / cfg_.h_q + 1e-9));
  for (int t = lo; t <= hi; ++t) controller_.prepare(t * cfg_.h_q);
  ready_ = true;
}

HttpReply ControlService::health() const {
  Json body{{"status", ready() ? "ok" : "starting"},
            {"version", RCCS_VERSION},
            {"protocol", kWireVersion},
            {"config_hash", hash_}};
  return {ready() ? 200 : 503, std::move(body)};
}

HttpReply ControlService::solve(const std::string& body) const {
  if (!ready()) return {503, error_body("", "service is starting")};
  ControlRequest<double> req;
  try {
    req = request_from_json(Json::parse(body));
  } catch (const Json::parse_error& e) {
    return {400, error_body("body", std::string("invalid JSON: ") + e.what())};
  } catch (const WireError& e) {
    return {400, error_body(e.field(), e.what())};
  }
  const Eigen::Index n = controller_.plant().states();
  const Eigen::Index m = controller_.plant().inputs();
  if (req.x.size() != n) return {400, error_body("x", "x: expected " + std::to_string(n) + " entries")};
  if (req.pending_inputs.cols() > 0 && req.pending_inputs.rows() != m)
    return {400, error_body("pending_u", "pending_u: expected " + std::to_string(m) + " inputs per tick")};

  const double ticks = req.h_d / cfg_.h_q;
  if (req.h_d < cfg_.h_min - 1e-9 || req.h_d > cfg_.h_max + 1e-9 || std::abs(ticks - std::round(ticks)) > 1e-6) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "h_d: %g is not a multiple of %g in [%g, %g]", req.h_d, cfg_.h_q, cfg_.h_min,
                  cfg_.h_max);
    return {422, error_body("h_d", msg)};
  }
  // Snap to the cached grid so 0.1 and 0.1000000001 share problem data.
  req.h_d = std::round(ticks) * cfg_.h_q;

  try {
    const auto t0 = std::chrono::steady_clock::now();
    ControlResponse<double> r = controller_.step(req);
    r.processing_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.degraded) spdlog::warn("solve k={} degraded ({})", r.k, to_string(r.status));
    ++solved_;
    return {200, response_to_json(r)};
  } catch (const std::exception& e) {
    spdlog::error("solve k={} failed: {}", req.k, e.what());
    return {500, error_body("", e.what())};
  }
}

HttpService::HttpService(ServiceConfig cfg)
    : service_(std::make_unique<ControlService>(std::move(cfg))), server_(std::make_unique<httplib::Server>()) {
  const int workers = std::max(1, service_->config().workers);
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };
  server_->set_keep_alive_timeout(1);
  server_->set_tcp_nodelay(true);
  server_->set_read_timeout(1, 0);
  server_->Post("/solve", [this](const httplib::Request& req, httplib::Response& res) {
    HttpReply reply = service_->solve(req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    HttpReply reply = service_->health();
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
  } else if (!server_->bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  warmer_ = std::thread([this] {
    const auto t0 = std::chrono::steady_clock::now();
    service_->warm_up();
    spdlog::info("service ready in {:.3f} s, config {}",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                 service_->config().hash());
  });
  spdlog::info("listening on {}:{}", host, bound);
  return bound;
}

void HttpService::stop() {
  if (warmer_.joinable()) warmer_.join();
  if (server_->is_running()) server_->stop();
  if (listener_.joinable()) listener_.join();
}

bool HttpService::running() const { return server_->is_running(); }

}  // namespace rccs
