#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rccs/sim.hpp"

namespace rccs {

using Json = nlohmann::json;

/// Scenario documents. Missing keys keep their defaults; unknown keys and
/// malformed values throw std::invalid_argument naming the key.
Json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const Json& doc);
ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

Json metrics_to_json(const MetricsSummary& m);
MetricsSummary metrics_from_json(const Json& doc);

/// Trace CSV column order; stable for downstream scripts.
const std::vector<std::string>& trace_columns();

void write_trace_csv(std::ostream& out, const Trace& trace);
Trace read_trace_csv(std::istream& in);
/// File variants; I/O errors carry the path.
void export_trace(const Trace& trace, const std::string& path);
Trace import_trace(const std::string& path);

}  // namespace rccs
