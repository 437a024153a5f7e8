#include "rccs/io.hpp"

#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rccs {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw std::invalid_argument("scenario: '" + key + "' " + what);
}

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(where, "must be an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key())) bad(where.empty() ? item.key() : where + "." + item.key(), "is not a known key");
}

template <typename T>
void read(const Json& obj, const std::string& key, T& out, const std::string& where = "") {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(where.empty() ? key : where + "." + key, "has the wrong type");
  }
}

Json chaos_json(const ChaosParams& c) {
  return {{"mean", c.mean}, {"correlation", c.correlation}, {"jitter", c.jitter},
          {"active", c.active}, {"period", c.period}, {"start", c.start}};
}

Json adapter_json(const AdapterParams& a) {
  return {{"K", a.K},
          {"T_i", a.T_i},
          {"T_d", a.T_d},
          {"alpha", a.alpha},
          {"rho_r", a.rho_r},
          {"h_f", a.h_f},
          {"h_min", a.h_min},
          {"h_max", a.h_max},
          {"initial_period", a.initial_period},
          {"initial_loss", a.initial_loss}};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw std::runtime_error("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

Json scenario_to_json(const ScenarioConfig& cfg) {
  Json clouds = Json::array();
  for (Cloud c : cfg.clouds) clouds.push_back(to_string(c));
  Json capacity = Json::array();
  for (const auto& c : cfg.capacity_schedule) capacity.push_back({{"t", c.t}, {"capacity", c.capacity}});
  Json switches = Json::array();
  for (const auto& s : cfg.switches) switches.push_back({{"t", s.t}, {"target", s.target}});
  Json doc = {
      {"name", cfg.name},
      {"duration", cfg.duration},
      {"seed", cfg.seed},
      {"h_q", cfg.h_q},
      {"plant",
       {{"k_v", cfg.plant.k_v},
        {"k_u", cfg.plant.k_u},
        {"beam_half_length", cfg.plant.beam_half_length},
        {"input_limit", cfg.plant.input_limit}}},
      {"controller",
       {{"state_cost", cfg.controller.state_cost},
        {"input_cost", cfg.controller.input_cost},
        {"slack_weight", cfg.controller.slack_weight},
        {"horizon_time", cfg.controller.horizon_time}}},
      {"adapter", adapter_json(cfg.adapter)},
      {"variant", to_string(cfg.variant)},
      {"fixed_period", cfg.fixed_period},
      {"sigma_max", cfg.sigma_max},
      {"delay", to_string(cfg.delay)},
      {"delay_scenario", cfg.delay_scenario},
      {"clouds", clouds},
      {"rtt_offset_fraction", cfg.rtt_offset_fraction},
      {"solver_iterations", cfg.solver_iterations},
      {"iterations_min", cfg.iterations_min},
      {"iterations_max", cfg.iterations_max},
      {"queue", cfg.queue},
      {"capacity", cfg.capacity},
      {"capacity_schedule", capacity},
      {"tenants", cfg.tenants},
      {"chaos", cfg.chaos ? chaos_json(*cfg.chaos) : Json(nullptr)},
      {"switches", switches},
      {"disturbances", cfg.disturbances},
      {"disturbance",
       {{"amplitude_mean", cfg.disturbance.amplitude_mean},
        {"amplitude_variance", cfg.disturbance.amplitude_variance},
        {"gap_mean", cfg.disturbance.gap_mean},
        {"gap_variance", cfg.disturbance.gap_variance}}},
      {"actuator_noise", cfg.actuator_noise},
  };
  return doc;
}

ScenarioConfig scenario_from_json(const Json& doc) {
  check_keys(doc, "",
             {"name", "duration", "seed", "h_q", "plant", "controller", "adapter", "variant", "fixed_period",
              "sigma_max", "delay", "delay_scenario", "clouds", "rtt_offset_fraction", "solver_iterations",
              "iterations_min", "iterations_max", "queue", "capacity", "capacity_schedule", "tenants", "chaos",
              "switches", "disturbances", "disturbance", "actuator_noise"});
  ScenarioConfig cfg;
  read(doc, "name", cfg.name);
  read(doc, "duration", cfg.duration);
  read(doc, "seed", cfg.seed);
  read(doc, "h_q", cfg.h_q);
  cfg.adapter.h_q = cfg.h_q;
  if (doc.contains("plant")) {
    const Json& p = doc["plant"];
    check_keys(p, "plant", {"k_v", "k_u", "beam_half_length", "input_limit"});
    read(p, "k_v", cfg.plant.k_v, "plant");
    read(p, "k_u", cfg.plant.k_u, "plant");
    read(p, "beam_half_length", cfg.plant.beam_half_length, "plant");
    read(p, "input_limit", cfg.plant.input_limit, "plant");
  }
  if (doc.contains("controller")) {
    const Json& c = doc["controller"];
    check_keys(c, "controller", {"state_cost", "input_cost", "slack_weight", "horizon_time"});
    read(c, "state_cost", cfg.controller.state_cost, "controller");
    read(c, "input_cost", cfg.controller.input_cost, "controller");
    read(c, "slack_weight", cfg.controller.slack_weight, "controller");
    read(c, "horizon_time", cfg.controller.horizon_time, "controller");
  }
  if (doc.contains("adapter")) {
    const Json& a = doc["adapter"];
    check_keys(a, "adapter",
               {"K", "T_i", "T_d", "alpha", "rho_r", "h_f", "h_min", "h_max", "initial_period", "initial_loss"});
    read(a, "K", cfg.adapter.K, "adapter");
    read(a, "T_i", cfg.adapter.T_i, "adapter");
    read(a, "T_d", cfg.adapter.T_d, "adapter");
    read(a, "alpha", cfg.adapter.alpha, "adapter");
    read(a, "rho_r", cfg.adapter.rho_r, "adapter");
    read(a, "h_f", cfg.adapter.h_f, "adapter");
    read(a, "h_min", cfg.adapter.h_min, "adapter");
    read(a, "h_max", cfg.adapter.h_max, "adapter");
    read(a, "initial_period", cfg.adapter.initial_period, "adapter");
    read(a, "initial_loss", cfg.adapter.initial_loss, "adapter");
  }
  if (doc.contains("variant")) {
    std::string v;
    read(doc, "variant", v);
    try {
      cfg.variant = variant_from_string(v);
    } catch (const std::invalid_argument&) {
      bad("variant", "must be one of MPC, a-MPC, oa-MPC, R-CCS");
    }
  }
  read(doc, "fixed_period", cfg.fixed_period);
  read(doc, "sigma_max", cfg.sigma_max);
  if (doc.contains("delay")) {
    std::string d;
    read(doc, "delay", d);
    try {
      cfg.delay = delay_mode_from_string(d);
    } catch (const std::invalid_argument&) {
      bad("delay", "must be one of none, markov, profile");
    }
  }
  read(doc, "delay_scenario", cfg.delay_scenario);
  if (doc.contains("clouds")) {
    std::vector<std::string> names;
    read(doc, "clouds", names);
    cfg.clouds.clear();
    for (const auto& n : names) {
      try {
        cfg.clouds.push_back(cloud_from_string(n));
      } catch (const std::invalid_argument&) {
        bad("clouds", "contains unknown cloud '" + n + "'");
      }
    }
  }
  read(doc, "rtt_offset_fraction", cfg.rtt_offset_fraction);
  read(doc, "solver_iterations", cfg.solver_iterations);
  read(doc, "iterations_min", cfg.iterations_min);
  read(doc, "iterations_max", cfg.iterations_max);
  read(doc, "queue", cfg.queue);
  read(doc, "capacity", cfg.capacity);
  if (doc.contains("capacity_schedule")) {
    if (!doc["capacity_schedule"].is_array()) bad("capacity_schedule", "must be an array");
    for (const Json& e : doc["capacity_schedule"]) {
      check_keys(e, "capacity_schedule[]", {"t", "capacity"});
      CapacityChange c;
      read(e, "t", c.t, "capacity_schedule[]");
      read(e, "capacity", c.capacity, "capacity_schedule[]");
      cfg.capacity_schedule.push_back(c);
    }
  }
  read(doc, "tenants", cfg.tenants);
  if (doc.contains("chaos") && !doc["chaos"].is_null()) {
    const Json& c = doc["chaos"];
    check_keys(c, "chaos", {"mean", "correlation", "jitter", "active", "period", "start"});
    ChaosParams p;
    read(c, "mean", p.mean, "chaos");
    read(c, "correlation", p.correlation, "chaos");
    read(c, "jitter", p.jitter, "chaos");
    read(c, "active", p.active, "chaos");
    read(c, "period", p.period, "chaos");
    read(c, "start", p.start, "chaos");
    cfg.chaos = p;
  }
  if (doc.contains("switches")) {
    if (!doc["switches"].is_array()) bad("switches", "must be an array");
    for (const Json& e : doc["switches"]) {
      check_keys(e, "switches[]", {"t", "target"});
      TargetSwitch s;
      read(e, "t", s.t, "switches[]");
      read(e, "target", s.target, "switches[]");
      cfg.switches.push_back(s);
    }
  }
  read(doc, "disturbances", cfg.disturbances);
  if (doc.contains("disturbance")) {
    const Json& d = doc["disturbance"];
    check_keys(d, "disturbance", {"amplitude_mean", "amplitude_variance", "gap_mean", "gap_variance"});
    read(d, "amplitude_mean", cfg.disturbance.amplitude_mean, "disturbance");
    read(d, "amplitude_variance", cfg.disturbance.amplitude_variance, "disturbance");
    read(d, "gap_mean", cfg.disturbance.gap_mean, "disturbance");
    read(d, "gap_variance", cfg.disturbance.gap_variance, "disturbance");
  }
  read(doc, "actuator_noise", cfg.actuator_noise);
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  try {
    return scenario_from_json(doc);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file " + path);
  out << scenario_to_json(cfg).dump(2) << '\n';
  if (!out) throw std::runtime_error("error writing " + path);
}

Json metrics_to_json(const MetricsSummary& m) {
  auto num = [](double v) { return std::isnan(v) ? Json(nullptr) : Json(v); };
  return {{"clre", num(m.clre)},
          {"miss_ratio", m.miss_ratio},
          {"mean_frequency", m.mean_frequency},
          {"median_frequency", m.median_frequency},
          {"recovery_fraction", m.recovery_fraction},
          {"failed", m.failed},
          {"failure_time", num(m.failure_time)},
          {"load", m.load},
          {"requests", m.requests}};
}

MetricsSummary metrics_from_json(const Json& doc) {
  auto num = [&](const char* key) {
    const Json& v = doc.at(key);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  MetricsSummary m;
  m.clre = num("clre");
  m.miss_ratio = num("miss_ratio");
  m.mean_frequency = num("mean_frequency");
  m.median_frequency = num("median_frequency");
  m.recovery_fraction = num("recovery_fraction");
  m.failed = doc.at("failed").get<bool>();
  m.failure_time = num("failure_time");
  m.load = num("load");
  m.requests = doc.at("requests").get<std::int64_t>();
  return m;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> columns{"t",   "position", "setpoint", "u",          "source",
                                                "open_loop_index", "h_d", "miss", "rho", "rtt",
                                                "iterations", "tau_c", "failed", "clre"};
  return columns;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const auto& cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : trace) {
    out << format_double(r.t) << ',' << format_double(r.position) << ',' << format_double(r.setpoint) << ','
        << format_double(r.u) << ',' << to_string(r.source) << ',' << r.open_loop_index << ','
        << format_double(r.h_d) << ',' << (r.miss ? 1 : 0) << ',' << format_double(r.rho) << ','
        << format_double(r.rtt) << ',' << r.iterations << ',' << format_double(r.tau_c) << ','
        << (r.failed ? 1 : 0) << ',' << format_double(r.clre) << '\n';
  }
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: missing header");
  std::string expected;
  for (const auto& c : trace_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw std::runtime_error("trace: unexpected header '" + line + "'");
  Trace trace;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != trace_columns().size())
      throw std::runtime_error("trace line " + std::to_string(n) + ": expected " +
                               std::to_string(trace_columns().size()) + " fields");
    TraceRecord r;
    r.t = parse_double(f[0], n);
    r.position = parse_double(f[1], n);
    r.setpoint = parse_double(f[2], n);
    r.u = parse_double(f[3], n);
    r.source = action_source_from_string(f[4]);
    r.open_loop_index = std::stoi(f[5]);
    r.h_d = parse_double(f[6], n);
    r.miss = f[7] == "1";
    r.rho = parse_double(f[8], n);
    r.rtt = parse_double(f[9], n);
    r.iterations = std::stoi(f[10]);
    r.tau_c = parse_double(f[11], n);
    r.failed = f[12] == "1";
    r.clre = parse_double(f[13], n);
    trace.push_back(r);
  }
  return trace;
}

void export_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace " + path + ": " + std::strerror(errno));
  write_trace_csv(out, trace);
  if (!out) throw std::runtime_error("error writing trace " + path);
}

Trace import_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path + ": " + std::strerror(errno));
  try {
    return read_trace_csv(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace rccs
