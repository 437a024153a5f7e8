#include "rccs/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

namespace rccs {

namespace {

std::string slug(Variant v) {
  switch (v) {
    case Variant::MPC: return "mpc";
    case Variant::AMPC: return "ampc";
    case Variant::OAMPC: return "oampc";
    case Variant::RCCS: return "rccs";
  }
  return "unknown";
}

ScenarioConfig with_variant(ScenarioConfig cfg, Variant v) {
  cfg.variant = v;
  cfg.fixed_period = kPeriod33Hz;
  return cfg;
}

}  // namespace

ScenarioConfig effectiveness(Variant variant, std::uint64_t seed) {
  ScenarioConfig cfg = with_variant({}, variant);
  cfg.name = "effectiveness_" + slug(variant);
  cfg.seed = seed;
  cfg.duration = 120.0;
  cfg.delay = DelayMode::Markov;
  cfg.delay_scenario = 2;
  return cfg;
}

ScenarioConfig chaos_experiment(Variant variant, std::uint64_t seed) {
  ScenarioConfig cfg = with_variant({}, variant);
  cfg.name = "chaos_" + slug(variant);
  cfg.seed = seed;
  cfg.duration = 120.0;
  cfg.delay = DelayMode::Profile;
  cfg.clouds = {Cloud::K8S};
  cfg.chaos = ChaosParams{};
  return cfg;
}

ScenarioConfig starvation(Variant variant, std::uint64_t seed) {
  ScenarioConfig cfg = with_variant({}, variant);
  cfg.name = "starvation_" + slug(variant);
  cfg.seed = seed;
  cfg.duration = 120.0;
  cfg.delay = DelayMode::Profile;
  cfg.clouds = {Cloud::K8S};
  cfg.queue = true;
  cfg.capacity = 1;
  cfg.capacity_schedule = {{60.0, 3}};
  cfg.tenants = {0.0, 20.0, 40.0};
  return cfg;
}

ScenarioConfig cloud_switch(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.name = "switch_rccs";
  cfg.seed = seed;
  cfg.duration = 120.0;
  cfg.variant = Variant::RCCS;
  cfg.delay = DelayMode::Profile;
  cfg.clouds = {Cloud::K8S, Cloud::RDC, Cloud::Central, Cloud::North};
  std::mt19937_64 rng(stream_seed(seed, 8));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(cfg.clouds.size()) - 1);
  for (double t = 0.0; t < cfg.duration; t += 20.0) cfg.switches.push_back({t, pick(rng)});
  return cfg;
}

ScenarioConfig profile_run(Cloud cloud, std::uint64_t seed, double duration) {
  ScenarioConfig cfg;
  cfg.name = std::string("profile_") + to_string(cloud);
  cfg.seed = seed;
  cfg.duration = duration;
  cfg.variant = Variant::RCCS;
  cfg.delay = DelayMode::Profile;
  cfg.clouds = {cloud};
  return cfg;
}

const std::vector<ValidationColumn>& validation_columns() {
  static const std::vector<ValidationColumn> columns{
      {"R-CCS", "rccs", Variant::RCCS, 0.0, false},
      {"R-CCS†", "rccs_q", Variant::RCCS, 0.0, true},
      {"22 Hz", "22hz", Variant::OAMPC, kPeriod22Hz, false},
      {"22 Hz†", "22hz_q", Variant::OAMPC, kPeriod22Hz, true},
      {"17 Hz", "17hz", Variant::OAMPC, kPeriod17Hz, false},
      {"17 Hz†", "17hz_q", Variant::OAMPC, kPeriod17Hz, true},
  };
  return columns;
}

const ValidationColumn& validation_column(const std::string& key) {
  for (const auto& c : validation_columns())
    if (c.label == key || c.slug == key) return c;
  throw std::invalid_argument("unknown validation column: " + key);
}

ScenarioConfig validation(int delay_scenario, const ValidationColumn& column, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.name = "validation_sc" + std::to_string(delay_scenario) + "_" + column.slug;
  cfg.seed = seed;
  cfg.duration = 400.0;
  cfg.delay = DelayMode::Markov;
  cfg.delay_scenario = delay_scenario;
  cfg.variant = column.variant;
  if (column.period > 0.0) cfg.fixed_period = column.period;
  cfg.queue = column.queue;
  cfg.capacity = 1;
  return cfg;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"validation", "effectiveness", "chaos", "starvation", "switch"};
  return names;
}

std::vector<ScenarioConfig> suite(const std::string& name, std::uint64_t seed) {
  std::vector<ScenarioConfig> out;
  if (name == "validation") {
    for (int sc : {1, 2})
      for (const auto& c : validation_columns()) out.push_back(validation(sc, c, seed));
  } else if (name == "effectiveness") {
    for (Variant v : {Variant::MPC, Variant::AMPC, Variant::OAMPC, Variant::RCCS}) out.push_back(effectiveness(v, seed));
  } else if (name == "chaos") {
    for (Variant v : {Variant::OAMPC, Variant::RCCS}) out.push_back(chaos_experiment(v, seed));
  } else if (name == "starvation") {
    for (Variant v : {Variant::OAMPC, Variant::RCCS}) out.push_back(starvation(v, seed));
  } else if (name == "switch") {
    out.push_back(cloud_switch(seed));
  } else {
    throw std::invalid_argument("unknown suite '" + name + "' (validation, effectiveness, chaos, starvation, switch)");
  }
  return out;
}

ValidationTable empty_validation_table() {
  ValidationTable t;
  for (auto& row : t.clre)
    for (double& v : row) v = std::numeric_limits<double>::quiet_NaN();
  for (auto& row : t.failed)
    for (bool& f : row) f = false;
  return t;
}

std::string format_validation_table(const ValidationTable& table) {
  const auto& cols = validation_columns();
  std::string out = "Closed loop error response after 400 s (* = ball fell)\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "scenario");
  out += buf;
  for (const auto& c : cols) {
    // Pad by display width; the dagger is one column but three bytes.
    const std::size_t width = c.label.find("†") != std::string::npos ? c.label.size() - 2 : c.label.size();
    out += std::string(12 - std::min<std::size_t>(width, 11), ' ') + c.label;
  }
  out += '\n';
  for (int s = 0; s < 2; ++s) {
    std::snprintf(buf, sizeof buf, "%-10d", s + 1);
    out += buf;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = table.clre[s][j];
      if (std::isnan(v))
        std::snprintf(buf, sizeof buf, "%12s", "-");
      else
        std::snprintf(buf, sizeof buf, "%11.2f%c", v, table.failed[s][j] ? '*' : ' ');
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string validation_table_csv(const ValidationTable& table) {
  std::string out = "scenario";
  for (const auto& c : validation_columns()) out += "," + c.slug;
  out += '\n';
  char buf[40];
  for (int s = 0; s < 2; ++s) {
    out += std::to_string(s + 1);
    for (std::size_t j = 0; j < validation_columns().size(); ++j) {
      const double v = table.clre[s][j];
      if (std::isnan(v)) {
        out += ",";
      } else {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        out += buf;
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace rccs
