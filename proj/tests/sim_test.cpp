#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rccs/io.hpp"
#include "rccs/scenarios.hpp"
#include "rccs/sim.hpp"

namespace rccs {
namespace {

std::string csv(const Trace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

ScenarioConfig short_run(double duration = 20.0) {
  ScenarioConfig cfg = effectiveness(Variant::RCCS, 3);
  cfg.duration = duration;
  return cfg;
}

TEST(Scenario, SameSeedGivesIdenticalCsv) {
  const ScenarioConfig cfg = short_run();
  EXPECT_EQ(csv(run_with_reference(cfg).tenants[0].trace), csv(run_with_reference(cfg).tenants[0].trace));
}

TEST(Scenario, DifferentSeedsDiffer) {
  ScenarioConfig a = short_run(5.0);
  ScenarioConfig b = a;
  b.seed = a.seed + 1;
  EXPECT_NE(csv(run_scenario(a).tenants[0].trace), csv(run_scenario(b).tenants[0].trace));
}

TEST(Scenario, QueueAndChaosRunsAreDeterministic) {
  ScenarioConfig cfg = starvation(Variant::RCCS, 5);
  cfg.duration = 70.0;
  cfg.chaos = ChaosParams{};
  const ScenarioResult a = run_scenario(cfg);
  const ScenarioResult b = run_scenario(cfg);
  for (std::size_t i = 0; i < a.tenants.size(); ++i) EXPECT_EQ(csv(a.tenants[i].trace), csv(b.tenants[i].trace));
}

TEST(Scenario, ZeroDelayRccsEqualsIdeal) {
  ScenarioConfig cfg = short_run(30.0);
  cfg.delay = DelayMode::None;
  cfg.adapter.initial_period = cfg.adapter.h_min - cfg.h_q;
  cfg.adapter.initial_loss = 0.0;
  const Trace ideal = run_ideal(cfg)[0];
  const Trace trace = run_scenario(cfg).tenants[0].trace;
  ASSERT_EQ(trace.size(), ideal.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    ASSERT_EQ(trace[i].position, ideal[i].position) << "tick " << i;
    ASSERT_EQ(trace[i].u, ideal[i].u) << "tick " << i;
    ASSERT_FALSE(trace[i].miss) << "tick " << i;
    ASSERT_EQ(trace[i].open_loop_index, 0);
    ASSERT_NE(trace[i].source, ActionSource::Recovery);
  }
}

TEST(Scenario, IdealNeverRecoversOrMisses) {
  for (const Trace& t : run_ideal(short_run(60.0)))
    for (const auto& r : t) {
      ASSERT_NE(r.source, ActionSource::Recovery) << r.t;
      ASSERT_FALSE(r.miss) << r.t;
    }
}

TEST(Scenario, IdealTracksSetpointWithoutNoise) {
  ScenarioConfig cfg = short_run(40.0);
  cfg.disturbances = false;
  cfg.actuator_noise = 0.0;
  const Trace t = run_ideal(cfg)[0];
  for (const auto& r : t) {
    const double phase = std::fmod(r.t, 10.0);
    if (phase > 8.0) ASSERT_NEAR(r.position, r.setpoint, 0.01) << r.t;
  }
}

TEST(Scenario, CausalDeliveryMarkov) {
  ScenarioConfig cfg = short_run(30.0);
  cfg.queue = true;
  const auto result = run_scenario(cfg);
  const auto& reqs = result.tenants[0].requests;
  ASSERT_GT(reqs.size(), 100u);
  for (const auto& r : reqs) {
    if (std::isnan(r.delivered)) continue;
    EXPECT_GE(r.start, r.sent + r.uplink - 1e-12);
    EXPECT_GE(r.delivered, r.sent + r.uplink + r.tau_c + r.downlink - 1e-12);
    EXPECT_GT(r.tau_c, 0.0);
  }
  // A governing response is never used before it could have arrived.
  for (const auto& rec : result.tenants[0].trace)
    if (!std::isnan(rec.rtt)) EXPECT_GE(rec.rtt, rec.tau_c);
}

TEST(Scenario, CausalDeliveryProfileWithChaos) {
  ScenarioConfig cfg = chaos_experiment(Variant::OAMPC, 2);
  cfg.duration = 40.0;
  const auto result = run_scenario(cfg);
  int chaotic = 0;
  for (const auto& r : result.tenants[0].requests) {
    if (std::isnan(r.delivered)) continue;
    EXPECT_GE(r.delivered, r.sent + r.uplink + r.downlink - 1e-12);
    if (r.sent < 30.0) {
      EXPECT_GT(r.uplink, r.downlink);
      ++chaotic;
    } else {
      EXPECT_DOUBLE_EQ(r.uplink, r.downlink);
    }
  }
  EXPECT_GT(chaotic, 0);
}

TEST(Scenario, ExtraTenantNeverSpeedsUpSharedQueue) {
  ScenarioConfig one = starvation(Variant::OAMPC, 4);
  one.duration = 30.0;
  one.capacity_schedule.clear();
  one.tenants = {0.0};
  ScenarioConfig two = one;
  two.tenants = {0.0, 5.0};
  const auto a = run_scenario(one).tenants[0].requests;
  const auto b = run_scenario(two).tenants[0].requests;
  ASSERT_EQ(a.size(), b.size());
  int slower = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].k, b[i].k);
    ASSERT_EQ(a[i].tau_c, b[i].tau_c);
    if (std::isnan(a[i].delivered)) continue;
    const double ra = a[i].delivered - a[i].sent;
    const double rb = std::isnan(b[i].delivered) ? INFINITY : b[i].delivered - b[i].sent;
    ASSERT_GE(rb, ra - 1e-12) << "request " << i;
    slower += rb > ra + 1e-12;
  }
  EXPECT_GT(slower, 0);
}

TEST(Scenario, TenantsWithoutSharedQueueAreIsolated) {
  ScenarioConfig one = short_run(20.0);
  one.tenants = {0.0};
  ScenarioConfig two = one;
  two.tenants = {0.0, 7.5};
  EXPECT_EQ(csv(run_scenario(one).tenants[0].trace), csv(run_scenario(two).tenants[0].trace));
}

TEST(Scenario, LateTenantRecordsOnlyAfterAdmission) {
  ScenarioConfig cfg = short_run(10.0);
  cfg.tenants = {0.0, 4.0};
  const auto r = run_scenario(cfg);
  EXPECT_EQ(r.tenants[1].admitted, 4.0);
  ASSERT_FALSE(r.tenants[1].trace.empty());
  EXPECT_DOUBLE_EQ(r.tenants[1].trace.front().t, 4.0);
  EXPECT_EQ(r.tenants[0].trace.size(), 2000u);
  EXPECT_EQ(r.tenants[1].trace.size(), 1200u);
}

TEST(Scenario, TraceHasOneRecordPerTickWithMonotoneTime) {
  const Trace t = run_scenario(short_run(5.0)).tenants[0].trace;
  ASSERT_EQ(t.size(), 1000u);
  for (std::size_t i = 1; i < t.size(); ++i) ASSERT_GT(t[i].t, t[i - 1].t);
}

TEST(Scenario, ValidationErrorsNameTheField) {
  auto expect_field = [](ScenarioConfig cfg, const std::string& field) {
    try {
      cfg.validate();
      ADD_FAILURE() << "accepted invalid " << field;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  ScenarioConfig c;
  c.duration = -1.0;
  expect_field(c, "duration");
  c = {};
  c.delay_scenario = 3;
  expect_field(c, "delay_scenario");
  c = {};
  c.tenants = {0.0, 500.0};
  expect_field(c, "tenants");
  c = {};
  c.switches = {{10.0, 4}};
  expect_field(c, "switches");
  c = {};
  c.capacity_schedule = {{10.0, 0}};
  expect_field(c, "capacity_schedule");
  c = {};
  c.chaos = ChaosParams{};
  c.chaos->active = 0.0;
  expect_field(c, "chaos");
  c = {};
  c.variant = Variant::OAMPC;
  c.fixed_period = 0.0312;
  expect_field(c, "period");
}

TEST(Clre, IdenticalTracesGiveZero) {
  const Trace t = run_scenario(short_run(5.0)).tenants[0].trace;
  for (double v : clre(t, t, 0.005)) ASSERT_EQ(v, 0.0);
}

TEST(Clre, ConstantOffsetOver400Seconds) {
  Trace a(80000), b(80000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i].position = 0.3;
    b[i].position = 0.2;
  }
  const auto e = clre(a, b, 0.005);
  EXPECT_NEAR(e.back(), 4.0, 1e-9);
  for (std::size_t i = 1; i < e.size(); ++i) ASSERT_GE(e[i], e[i - 1]);
}

TEST(Clre, LengthMismatchThrows) {
  EXPECT_THROW(clre(Trace(3), Trace(4), 0.005), std::invalid_argument);
}

TEST(Clre, RunWithReferenceFillsTrace) {
  const auto r = run_with_reference(short_run(10.0));
  const Trace& t = r.tenants[0].trace;
  EXPECT_EQ(t.front().clre, 0.0);
  EXPECT_EQ(r.tenants[0].metrics.clre, t.back().clre);
  for (std::size_t i = 1; i < t.size(); ++i) ASSERT_GE(t[i].clre, t[i - 1].clre);
}

TEST(Metrics, FailureRecordedAndPlantFrozen) {
  ScenarioConfig cfg = effectiveness(Variant::OAMPC, 1);
  cfg.duration = 20.0;
  cfg.plant.beam_half_length = 0.05;
  const auto r = run_scenario(cfg);
  const auto& m = r.tenants[0].metrics;
  ASSERT_TRUE(m.failed);
  const Trace& t = r.tenants[0].trace;
  const auto it = std::find_if(t.begin(), t.end(), [](const TraceRecord& x) { return x.failed; });
  EXPECT_DOUBLE_EQ(m.failure_time, it->t);
  for (auto j = it; j != t.end(); ++j) ASSERT_EQ(j->position, it->position);
}

TEST(Metrics, FractionsInRange) {
  const auto m = run_with_reference(short_run(30.0)).tenants[0].metrics;
  EXPECT_GE(m.miss_ratio, 0.0);
  EXPECT_LE(m.miss_ratio, 1.0);
  EXPECT_GE(m.recovery_fraction, 0.0);
  EXPECT_LE(m.recovery_fraction, 1.0);
  EXPECT_GE(m.clre, 0.0);
  EXPECT_GT(m.requests, 0);
  EXPECT_GT(m.load, 0.0);
  EXPECT_GE(m.median_frequency, 10.0 - 1e-9);
  EXPECT_LE(m.median_frequency, 1.0 / 0.03 + 1e-9);
}

TEST(Metrics, MedianFrequencyWindow) {
  Trace t(4);
  const double periods[] = {0.1, 0.05, 0.05, 0.03};
  for (int i = 0; i < 4; ++i) {
    t[i].t = i;
    t[i].h_d = periods[i];
  }
  EXPECT_DOUBLE_EQ(median_frequency(t, 0, 4), 20.0);
  EXPECT_DOUBLE_EQ(median_frequency(t, 2, 4), 0.5 * (20.0 + 1.0 / 0.03));
  EXPECT_TRUE(std::isnan(median_frequency(t, 10, 20)));
}

TEST(Library, ValidationSetup) {
  const auto cfgs = suite("validation", 7);
  ASSERT_EQ(cfgs.size(), 12u);
  for (const auto& c : cfgs) {
    EXPECT_EQ(c.duration, 400.0);
    EXPECT_EQ(c.delay, DelayMode::Markov);
  }
  const ScenarioConfig c = validation(2, validation_column("22 Hz"), 7);
  EXPECT_EQ(c.variant, Variant::OAMPC);
  EXPECT_DOUBLE_EQ(c.fixed_period, 0.045);
  EXPECT_FALSE(c.queue);
  const ScenarioConfig q = validation(1, validation_column("R-CCS†"), 7);
  EXPECT_TRUE(q.queue);
  EXPECT_EQ(q.capacity, 1);
  EXPECT_EQ(q.variant, Variant::RCCS);
}

TEST(Library, StarvationSetup) {
  const ScenarioConfig c = starvation(Variant::RCCS, 1);
  EXPECT_EQ(c.tenants, (std::vector<double>{0.0, 20.0, 40.0}));
  EXPECT_TRUE(c.queue);
  EXPECT_EQ(c.capacity, 1);
  ASSERT_EQ(c.capacity_schedule.size(), 1u);
  EXPECT_EQ(c.capacity_schedule[0].t, 60.0);
  EXPECT_EQ(c.capacity_schedule[0].capacity, 3);
}

TEST(Library, ChaosWindows) {
  const ScenarioConfig c = chaos_experiment(Variant::RCCS, 1);
  ASSERT_TRUE(c.chaos);
  ChaosOverlay overlay(*c.chaos, 1);
  EXPECT_TRUE(overlay.active(10.0));
  EXPECT_FALSE(overlay.active(45.0));
  EXPECT_TRUE(overlay.active(75.0));
}

TEST(Library, CloudSwitchEvery20Seconds) {
  const ScenarioConfig c = cloud_switch(9);
  EXPECT_EQ(c.clouds.size(), 4u);
  ASSERT_EQ(c.switches.size(), 6u);
  for (std::size_t i = 0; i < c.switches.size(); ++i) EXPECT_DOUBLE_EQ(c.switches[i].t, 20.0 * i);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(cloud_switch(9).switches[3].target, c.switches[3].target);
}

TEST(Library, UnknownSuiteRejected) { EXPECT_THROW(suite("nope", 1), std::invalid_argument); }

TEST(Library, TableLayout) {
  ValidationTable t = empty_validation_table();
  t.clre[0][0] = 1.5;
  t.clre[1][3] = 307.87;
  t.failed[1][3] = true;
  const std::string text = format_validation_table(t);
  EXPECT_NE(text.find("R-CCS†"), std::string::npos);
  EXPECT_NE(text.find("307.87*"), std::string::npos);
  const std::string csv_text = validation_table_csv(t);
  EXPECT_EQ(csv_text.substr(0, csv_text.find('\n')), "scenario,rccs,rccs_q,22hz,22hz_q,17hz,17hz_q");
  EXPECT_NE(csv_text.find("1,1.5,,,,,"), std::string::npos);
}

}  // namespace
}  // namespace rccs
