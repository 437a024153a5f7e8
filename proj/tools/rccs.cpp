#include <csignal>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/spdlog.h>

#include "rccs/io.hpp"
#include "rccs/live.hpp"
#include "rccs/report.hpp"
#include "rccs/scenarios.hpp"
#include "rccs/service.hpp"

using namespace rccs;

namespace {

void configure_logging() {
  if (const char* level = std::getenv("RCCS_LOG_LEVEL")) spdlog::cfg::helpers::load_levels(level);
}

// Blocks SIGINT/SIGTERM in every thread started afterwards so they can be
// collected with sigwait.
sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

int simulate(const std::string& config, const std::string& suite_name, std::optional<std::uint64_t> seed,
             const std::string& out, int jobs) {
  std::vector<ScenarioConfig> configs;
  if (!suite_name.empty()) {
    configs = suite(suite_name, seed.value_or(7));
  } else {
    ScenarioConfig c = load_scenario(config);
    if (seed) c.seed = *seed;
    configs.push_back(c);
  }
  std::mutex mutex;
  std::size_t next = 0;
  int failures = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next == configs.size()) return;
        i = next++;
      }
      try {
        const ScenarioResult r = run_with_reference(configs[i]);
        const std::string dir = write_run(r, out);
        std::lock_guard<std::mutex> lock(mutex);
        for (const auto& t : r.tenants)
          spdlog::info("{} tenant {}: CLRE {:.3f}{} -> {}", configs[i].name, t.tenant, t.metrics.clre,
                       t.metrics.failed ? " (ball fell)" : "", dir);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mutex);
        spdlog::error("{}: {}", configs[i].name, e.what());
        ++failures;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return failures == 0 ? 0 : 1;
}

int serve(int port, const std::string& host, const std::string& config, int workers) {
  ServiceConfig cfg = config.empty() ? ServiceConfig::from_scenario(ScenarioConfig{})
                                     : ServiceConfig::from_scenario(load_scenario(config));
  cfg.workers = workers;
  const sigset_t stop = block_stop_signals();
  HttpService http(cfg);
  http.start(host, port);
  int sig = 0;
  sigwait(&stop, &sig);
  spdlog::info("signal {}, shutting down", sig);
  http.stop();
  return 0;
}

int client(const std::string& config, const std::vector<std::string>& endpoints, std::optional<std::uint64_t> seed,
           std::optional<double> duration, const std::string& out, int senders) {
  LiveConfig cfg;
  cfg.scenario = load_scenario(config);
  if (seed) cfg.scenario.seed = *seed;
  if (duration) cfg.scenario.duration = *duration;
  cfg.endpoints = endpoints;
  cfg.senders = senders;

  static std::atomic<bool> cancel{false};
  std::signal(SIGINT, [](int) { cancel = true; });
  std::signal(SIGTERM, [](int) { cancel = true; });
  LiveResult live = run_live(cfg, &cancel);

  ScenarioResult result;
  result.config = cfg.scenario;
  TenantResult t;
  t.metrics = live.metrics;
  t.trace = std::move(live.trace);
  result.tenants.push_back(std::move(t));
  Json extra = live_summary_json(live);
  extra["endpoints"] = endpoints;
  extra["completed"] = !cancel.load();
  const std::string dir = write_run(result, out, extra);
  spdlog::info("{}: CLRE {:.3f}, median RTT {:.2f} ms, overruns {} ({:.2f}%), failed requests {} -> {}",
               cfg.scenario.name, live.metrics.clre, live.median_rtt * 1e3, live.overruns, 100.0 * live.overrun_ratio,
               live.failed_requests, dir);
  return cancel.load() ? 130 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Resilient cloud control: simulator, controller service and live client"};
  app.require_subcommand(1);

  std::string config, suite_name, out = "runs", host = "0.0.0.0";
  std::uint64_t seed_value = 7;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sim = app.add_subcommand("simulate", "Run a scenario file or a named suite");
  sim->add_option("config", config, "Scenario JSON file")->check(CLI::ExistingFile);
  auto* suite_opt = sim->add_option("--suite", suite_name, "Named suite")->check(CLI::IsMember(suite_names()));
  auto* seed_opt = sim->add_option("--seed", seed_value, "Seed (overrides the file)");
  sim->add_option("--out", out, "Output root")->capture_default_str();
  sim->add_option("--jobs,-j", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  int port = 8080;
  int workers = 8;
  std::string service_config;
  auto* srv = app.add_subcommand("serve", "Run the controller service");
  srv->add_option("port", port, "TCP port")->required()->check(CLI::Range(0, 65535));
  srv->add_option("--host", host, "Bind address")->capture_default_str();
  srv->add_option("--config", service_config, "Scenario JSON providing plant and weights")->check(CLI::ExistingFile);
  srv->add_option("--workers", workers, "HTTP worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  std::string client_config;
  std::vector<std::string> endpoints;
  double duration_value = 0.0;
  int senders = 4;
  std::string client_out = "runs";
  auto* cli = app.add_subcommand("client", "Run plant and agent in real time against the service");
  cli->add_option("config", client_config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cli->add_option("--endpoint", endpoints, "host:port, repeat for several targets")->required();
  auto* cseed = cli->add_option("--seed", seed_value, "Seed (overrides the file)");
  auto* cdur = cli->add_option("--duration", duration_value, "Run length in s (overrides the file)");
  cli->add_option("--out", client_out, "Output root")->capture_default_str();
  cli->add_option("--senders", senders, "Concurrent requests in flight")->capture_default_str()->check(CLI::PositiveNumber);

  std::vector<std::string> report_dirs;
  std::string report_out;
  int stride = 10;
  auto* rep = app.add_subcommand("report", "Summarize run directories");
  rep->add_option("dirs", report_dirs, "Run roots or run directories")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", report_out, "Where to write the CSVs (default: first dir)");
  rep->add_option("--stride", stride, "Trace decimation for figure CSVs")->capture_default_str()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      if (suite_opt->count() == (sim->get_option("config")->count() > 0 ? 1u : 0u))
        throw CLI::ValidationError("simulate", "give either a config file or --suite");
      return simulate(config, suite_name, seed_opt->count() ? std::optional(seed_value) : std::nullopt, out, jobs);
    }
    if (*srv) return serve(port, host, service_config, workers);
    if (*cli)
      return client(client_config, endpoints, cseed->count() ? std::optional(seed_value) : std::nullopt,
                    cdur->count() ? std::optional(duration_value) : std::nullopt, client_out, senders);
    if (*rep) {
      std::cout << write_report(report_dirs, report_out.empty() ? report_dirs.front() : report_out, stride);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
