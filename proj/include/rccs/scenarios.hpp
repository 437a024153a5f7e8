#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rccs/sim.hpp"

namespace rccs {

/// Fixed-rate periods used across the experiments (33, 22 and 17 Hz).
inline constexpr double kPeriod33Hz = 0.030;
inline constexpr double kPeriod22Hz = 0.045;
inline constexpr double kPeriod17Hz = 0.060;

/// Remedy comparison: 120 s, Markov delays of scenario 2. Fixed-rate
/// variants run at 33 Hz.
ScenarioConfig effectiveness(Variant variant, std::uint64_t seed);

/// K8S profile with 100 ms chaos delay, 30 s on in every 60 s.
ScenarioConfig chaos_experiment(Variant variant, std::uint64_t seed);

/// Three tenants admitted 20 s apart sharing one worker, scaled to three
/// workers at t = 60 s.
ScenarioConfig starvation(Variant variant, std::uint64_t seed);

/// R-CCS across all four cloud profiles, new random target every 20 s.
ScenarioConfig cloud_switch(std::uint64_t seed);

/// R-CCS against a single cloud profile.
ScenarioConfig profile_run(Cloud cloud, std::uint64_t seed, double duration = 120.0);

struct ValidationColumn {
  std::string label;  // column heading, dagger marks the worker queue
  std::string slug;   // file-name friendly
  Variant variant;
  double period;
  bool queue;
};

const std::vector<ValidationColumn>& validation_columns();
const ValidationColumn& validation_column(const std::string& label_or_slug);
ScenarioConfig validation(int delay_scenario, const ValidationColumn& column, std::uint64_t seed);

const std::vector<std::string>& suite_names();
/// Configurations of a named suite; throws std::invalid_argument for an
/// unknown name.
std::vector<ScenarioConfig> suite(const std::string& name, std::uint64_t seed);

/// Validation grid: rows are delay scenarios 1 and 2, columns follow
/// validation_columns(). Missing cells are NaN.
struct ValidationTable {
  double clre[2][6];
  bool failed[2][6];
};

ValidationTable empty_validation_table();
std::string format_validation_table(const ValidationTable& table);
std::string validation_table_csv(const ValidationTable& table);

}  // namespace rccs
