#pragma once

#include <string>
#include <vector>

#include "rccs/io.hpp"
#include "rccs/scenarios.hpp"
#include "rccs/sim.hpp"

namespace rccs {

/// Run directory layout, shared by simulated and live runs:
///   <root>/<name>/tenant<i>.csv   trace per tenant
///   <root>/<name>/summary.json    {"name", "scenario", "tenants": [{"tenant",
///                                  "admitted", "metrics"}], "live"?}
struct TenantSummary {
  int tenant = 0;
  double admitted = 0.0;
  MetricsSummary metrics;
};

struct RunSummary {
  std::string name;
  std::string dir;
  Json scenario;
  std::vector<TenantSummary> tenants;
  Json extra;  // live-run statistics, null for simulations
};

/// Writes one run and returns its directory.
std::string write_run(const ScenarioResult& result, const std::string& root, const Json& extra = nullptr);

/// Loads every <dir>/*/summary.json below the given roots (a root may itself
/// be a run directory).
std::vector<RunSummary> collect_runs(const std::vector<std::string>& roots);

/// Validation grid from validation_sc<N>_<column> runs; missing cells stay NaN.
ValidationTable validation_table(const std::vector<RunSummary>& runs);

/// Writes runs.csv, validation_table.csv (when validation runs are present) and one
/// fig_<family>.csv per experiment family into out_dir, where the family is
/// the run name up to its first underscore. Figure files are long format
/// (run, tenant, t, position, setpoint, u, source, h_d, rho, clre) sampled
/// every `stride` ticks. Returns the printable summary; throws
/// std::runtime_error when no runs are found.
std::string write_report(const std::vector<std::string>& roots, const std::string& out_dir, int stride = 10);

}  // namespace rccs
