#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lora_esl/report_io.hpp"
#include "lora_esl/simulator.hpp"

using namespace lora_esl;

namespace {

// A tenth of the default population over six hours keeps runs fast.
Scenario small(PolicyKind policy, int gws, std::uint64_t seed = 7) {
  Scenario s = default_scenario(policy, gws);
  s.allocation.first_term = 20;
  s.allocation.common_diff = 10;
  s.traffic.horizon_s = 6 * 3600.0;
  s.seed = seed;
  return s;
}

void expect_conserved(const MetricsReport& r) {
  long sched = 0, dec = 0;
  for (const auto& ring : r.rings) {
    long causes = 0;
    for (long v : ring.by_verdict) causes += v;
    EXPECT_EQ(causes, ring.scheduled);
    EXPECT_EQ(ring.by_verdict[static_cast<std::size_t>(Verdict::Decoded)], ring.decoded);
    EXPECT_GE(ring.rp_above_fraction, 0.0);
    EXPECT_LE(ring.rp_above_fraction, 1.0);
    if (auto p = compute_plr(r, static_cast<std::size_t>(ring.ring))) {
      EXPECT_GE(*p, 0.0);
      EXPECT_LE(*p, 1.0);
    }
    sched += ring.scheduled;
    dec += ring.decoded;
  }
  EXPECT_EQ(sched, r.scheduled);
  EXPECT_EQ(dec, r.decoded);
  long causes = 0, by_sf = 0, hist = 0;
  for (long v : r.by_verdict) causes += v;
  for (long v : r.sf_scheduled) by_sf += v;
  for (const auto& [rp, n] : r.rp_histogram) hist += n;
  EXPECT_EQ(causes, r.scheduled);
  EXPECT_EQ(by_sf, r.scheduled);
  EXPECT_EQ(hist, r.scheduled);
}

}  // namespace

TEST(RunScenario, ConservationAcrossConfigurations) {
  for (auto policy : {PolicyKind::Snr, PolicyKind::Rssi})
    for (int gws : {1, 2, 4}) {
      const auto r = run_scenario(small(policy, gws));
      EXPECT_GT(r.scheduled, 0);
      expect_conserved(r);
    }
  auto serving = small(PolicyKind::Rssi, 4);
  serving.channel.delivery = Delivery::ServingGateway;
  expect_conserved(run_scenario(serving));
  auto fading = small(PolicyKind::Rssi, 2);
  fading.link.per_packet_fading = true;
  expect_conserved(run_scenario(fading));
}

TEST(RunScenario, DeterministicPerSeed) {
  const auto s = small(PolicyKind::Snr, 1, 7);
  EXPECT_EQ(serialize_report(run_scenario(s)), serialize_report(run_scenario(s)));
  EXPECT_NE(serialize_report(run_scenario(s)), serialize_report(run_scenario(small(PolicyKind::Snr, 1, 8))));
}

TEST(RunScenario, DeviceCountsFollowAllocation) {
  const auto r = run_scenario(small(PolicyKind::Rssi, 2));
  const std::vector<int> want{20, 30, 40, 50, 60, 20};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(r.rings[i].devices, want[i]);
  EXPECT_EQ(r.devices.size(), 220u);
  EXPECT_EQ(r.gateways.size(), 2u);
}

TEST(RunScenario, RssiTraceStaysOnLadder) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto s = small(PolicyKind::Rssi, 1, seed);
    s.policy.granularity = AdrGranularity::Device;
    const auto r = run_scenario(s);
    ASSERT_FALSE(r.adr_trace.empty());
    for (const auto& t : r.adr_trace) {
      EXPECT_GE(t.tp_dbm, 14.0);
      EXPECT_LE(t.tp_dbm, 29.0);
      EXPECT_DOUBLE_EQ(std::fmod(t.tp_dbm - 14.0, 3.0), 0.0);
    }
  }
}

TEST(RunScenario, SnrTraceHoldsFourteen) {
  const auto r = run_scenario(small(PolicyKind::Snr, 2));
  ASSERT_FALSE(r.adr_trace.empty());
  for (const auto& t : r.adr_trace) {
    EXPECT_DOUBLE_EQ(t.tp_dbm, 14.0);
    EXPECT_GE(t.sf, kMinSf);
    EXPECT_LE(t.sf, kMaxSf);
    EXPECT_TRUE(t.margin_db.has_value());
  }
  for (const auto& d : r.devices) EXPECT_DOUBLE_EQ(d.tp_dbm, 14.0);
}

// Fibonacci pushes devices outward, so a lone, sensitivity-limited gateway
// loses more frames overall.
TEST(RunScenario, FibonacciRaisesLossAtOneGateway) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto arith = default_scenario(PolicyKind::Rssi, 1);
    arith.seed = seed;
    auto fib = arith;
    fib.allocation.kind = AllocationKind::Fibonacci;
    const auto a = run_scenario(arith), f = run_scenario(fib);
    EXPECT_EQ(f.devices.size(), a.devices.size());
    EXPECT_GT(f.total_plr(), a.total_plr()) << "seed " << seed;
  }
}

TEST(RunScenario, InvalidScenarioNamesField) {
  auto s = small(PolicyKind::Rssi, 1);
  s.gw_count = 0;
  try {
    run_scenario(s);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("deployment.gw_count"), std::string::npos);
  }
  s = small(PolicyKind::Snr, 1);
  s.radio.tp_dbm = 17.0;
  EXPECT_THROW(run_scenario(s), ConfigError);
}

TEST(ComputePlr, EdgeCases) {
  MetricsReport r;
  r.rings.resize(3);
  r.rings[0].scheduled = 10;
  r.rings[0].decoded = 10;
  r.rings[1].scheduled = 10;
  r.rings[1].decoded = 7;
  EXPECT_DOUBLE_EQ(*compute_plr(r, 0), 0.0);
  EXPECT_DOUBLE_EQ(*compute_plr(r, 1), 0.3);
  EXPECT_FALSE(compute_plr(r, 2).has_value());
  r.rings[2].scheduled = 4;
  EXPECT_DOUBLE_EQ(*compute_plr(r, 2), 1.0);
  EXPECT_THROW(compute_plr(r, 3), DomainError);
}

TEST(RpThresholdFraction, Limits) {
  const auto r = run_scenario(small(PolicyKind::Rssi, 1));
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_DOUBLE_EQ(*rp_threshold_fraction(r, -inf), 1.0);
  EXPECT_DOUBLE_EQ(*rp_threshold_fraction(r, inf), 0.0);
  EXPECT_NEAR(*rp_threshold_fraction(r, r.rp_threshold_dbw), r.rp_above_fraction(), 0.01);
  EXPECT_FALSE(rp_threshold_fraction(MetricsReport{}, 0.0).has_value());
  EXPECT_NEAR(r.rp_threshold_dbw, -150.85, 1e-9);
}

TEST(ComparePolicies, IdenticalPoliciesHaveZeroDeltas) {
  const auto c = compare_policies(small(PolicyKind::Rssi, 2), PolicyKind::Rssi, PolicyKind::Rssi);
  ASSERT_EQ(c.rows.size(), 6u);
  for (const auto& row : c.rows) {
    ASSERT_TRUE(row.plr_delta().has_value());
    EXPECT_DOUBLE_EQ(*row.plr_delta(), 0.0);
    EXPECT_DOUBLE_EQ(row.mean_rp_a, row.mean_rp_b);
  }
  EXPECT_FALSE(c.dominant().has_value());
}

TEST(ComparePolicies, RowsFullyPopulated) {
  const auto c = compare_policies(small(PolicyKind::Rssi, 2));
  EXPECT_EQ(c.a.policy, PolicyKind::Snr);
  EXPECT_EQ(c.b.policy, PolicyKind::Rssi);
  ASSERT_EQ(c.rows.size(), 6u);
  for (const auto& row : c.rows) {
    EXPECT_TRUE(row.plr_a.has_value());
    EXPECT_TRUE(row.plr_b.has_value());
  }
  EXPECT_EQ(c.a.devices.size(), c.b.devices.size());
  for (std::size_t i = 0; i < c.a.devices.size(); ++i) {
    EXPECT_EQ(c.a.devices[i].position.x, c.b.devices[i].position.x);
  }
}

TEST(SweepGateways, OrderedByCount) {
  const auto reports = sweep_gateways(small(PolicyKind::Rssi, 1), {1, 4, 2});
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].gw_count, 1);
  EXPECT_EQ(reports[1].gw_count, 4);
  EXPECT_EQ(reports[2].gw_count, 2);
  EXPECT_EQ(sweep_gateways(small(PolicyKind::Rssi, 1), {1}).size(), 1u);
  EXPECT_THROW(sweep_gateways(small(PolicyKind::Rssi, 1), {}), DomainError);
}

TEST(Defaults, PublishedParameters) {
  const auto rssi_s = default_scenario(PolicyKind::Rssi);
  EXPECT_DOUBLE_EQ(rssi_s.pathloss.ref_loss_db, 127.84);
  EXPECT_DOUBLE_EQ(rssi_s.pathloss.exponent, 4.31);
  EXPECT_DOUBLE_EQ(rssi_s.link.gains.g_tx_dbi, 2.15);
  EXPECT_TRUE(rssi_s.radio.tp_schedule);
  EXPECT_DOUBLE_EQ(rssi_s.channel.sensitivity_dbm, -123.0);
  EXPECT_EQ(rssi_s.ring_radii_km, (std::vector<double>{0.7, 0.9, 1.1, 1.5, 1.6, 2.1}));
  const auto snr_s = default_scenario(PolicyKind::Snr);
  EXPECT_FALSE(snr_s.radio.tp_schedule);
  EXPECT_DOUBLE_EQ(snr_s.radio.tp_dbm, 14.0);
  EXPECT_EQ(snr_s.radio.sf_min, 7);
  EXPECT_EQ(snr_s.radio.sf_max, 12);
}
