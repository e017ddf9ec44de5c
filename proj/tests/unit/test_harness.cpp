#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "drsim/harness.hpp"

using namespace drsim;

TEST(Harness, NoCreditHasZeroUtilization) {
  const RunSummary s = run_episodes(SimConfig{}, parse_policy("nocredit"), 5);
  EXPECT_EQ(s.budget_utilization, 0.0);
  EXPECT_EQ(s.total_payouts, 0.0);
  ASSERT_EQ(s.episodes.size(), 5u);
  EXPECT_EQ(s.episodes[3].seed, 45u);
}

TEST(Harness, RunsAreByteIdentical) {
  std::ostringstream j1, j2;
  const RunSummary a = run_episodes(SimConfig{}, parse_policy("random"), 4, {&j1, 1});
  const RunSummary b = run_episodes(SimConfig{}, parse_policy("random"), 4, {&j2, 1});
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(j1.str(), j2.str());
  const std::string text = j1.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 96);
}

TEST(Harness, ThreadedRunMatchesSerial) {
  std::ostringstream serial, threaded;
  const RunSummary a = run_episodes(SimConfig{}, parse_policy("rule"), 7, {&serial, 1});
  const RunSummary b = run_episodes(SimConfig{}, parse_policy("rule"), 7, {&threaded, 3});
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(serial.str(), threaded.str());
}

TEST(Harness, JsonlRecordsCarryFieldNames) {
  std::ostringstream out;
  run_episodes(SimConfig{}, parse_policy("uniform"), 2, {&out, 1});
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const Json j = Json::parse(line);
    EXPECT_EQ(j["episode"].get<int>(), n / 24);
    EXPECT_EQ(j["t"].get<int>(), n % 24);
    for (const char* key : {"price", "credit_effective", "payout", "budget_remaining", "cvar_running"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_TRUE(j["stress"].contains("overall"));
    EXPECT_TRUE(j["reward"].contains("total"));
    ++n;
  }
  EXPECT_EQ(n, 48);
}

TEST(Harness, NoCreditRiskExceedsUniform) {
  const RunSummary none = run_episodes(SimConfig{}, parse_policy("nocredit"), 50);
  const RunSummary uni = run_episodes(SimConfig{}, parse_policy("uniform:0.05"), 50);
  EXPECT_GT(none.cvar95_bills, uni.cvar95_bills);
}

TEST(Harness, SweepLevelZeroEqualsNoCredit) {
  const auto points = sweep_credit(SimConfig{}, {0.0, 0.05}, 6);
  const RunSummary none = run_episodes(SimConfig{}, parse_policy("nocredit"), 6);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_EQ(points[0].cvar95_bills, none.cvar95_bills);
  EXPECT_EQ(points[0].mean_episode_reward, none.mean_reward);
  EXPECT_EQ(points[0].mean_utility_revenue, none.mean_revenue);
  EXPECT_EQ(points[0].budget_utilization, 0.0);
  EXPECT_GT(points[1].budget_utilization, 0.0);
}

TEST(Harness, SweepValidatesLevels) {
  EXPECT_THROW(sweep_credit(SimConfig{}, {}, 1), std::invalid_argument);
  EXPECT_THROW(sweep_credit(SimConfig{}, {0.2}, 1), std::invalid_argument);
  EXPECT_THROW(run_episodes(SimConfig{}, parse_policy("rule"), 0), std::invalid_argument);
}

TEST(Harness, FrontierCsvLayout) {
  const std::string csv = frontier_csv({{0.02, -0.5, -300.25, 8.0, 0.125}});
  EXPECT_EQ(csv,
            "credit_level,mean_episode_reward,mean_utility_revenue,cvar95_bills,budget_utilization\n"
            "0.02,-0.5,-300.25,8.0,0.125\n");
}

TEST(MarketStats, MatchesEnvironmentPrices) {
  SimConfig c;
  c.episode_days = 3;
  const MarketTrace tr = market_trace(c, 72);
  Environment env(c);
  env.reset(c.seed);
  for (int t = 0; t < 72; ++t) {
    EXPECT_EQ(env.observation()[obs::kPrice], tr.price[static_cast<std::size_t>(t)]) << t;
    if (!env.terminated()) env.step(0.07);
  }
}

TEST(MarketStats, HandBuiltTrace) {
  MarketTrace tr;
  const Regime N = Regime::kNormal, S = Regime::kSpikeStorm;
  const std::vector<Regime> regimes = {S, S, N, N, S, S, S, N, S, N, N, S};
  const std::vector<double> prices = {2, 2, 0.1, 0.1, 3, 1.5, 0.9, 0.1, 1.2, 0.1, 0.1, 4};
  for (std::size_t i = 0; i < regimes.size(); ++i) {
    tr.regime.push_back(regimes[i]);
    tr.price.push_back(prices[i]);
    tr.xi.push_back(0.0);
    tr.hour.push_back(static_cast<int>(i));
  }
  const MarketStatsReport r = market_stats(tr, PriceParams{});
  EXPECT_EQ(r.n_storms, 2);
  EXPECT_DOUBLE_EQ(r.mean_storm_duration_hours, 2.0);
  EXPECT_DOUBLE_EQ(r.spike_hour_fraction, 6.0 / 12.0);
  EXPECT_DOUBLE_EQ(r.hourly_price_medians[2], 0.1);
  EXPECT_TRUE(std::isnan(r.hourly_price_medians[0]));
  EXPECT_TRUE(std::isnan(r.hourly_price_medians[20]));
}

TEST(MarketStats, Autocorrelation) {
  EXPECT_NEAR(lag1_autocorrelation({1, 2, 3, 4, 5}), 0.4, 1e-12);
  EXPECT_NEAR(lag1_autocorrelation({1, -1, 1, -1, 1, -1}), -5.0 / 6.0, 1e-12);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

TEST(MarketStats, OvernightInnovationSigma) {
  SimConfig c;
  c.seed = 5;
  const MarketStatsReport r = validate_market(c, 20000);
  EXPECT_GE(r.overnight_innovation_sigma, 0.015);
  EXPECT_LE(r.overnight_innovation_sigma, 0.025);
  EXPECT_GE(r.spike_hour_fraction, 0.0);
  EXPECT_LE(r.spike_hour_fraction, 1.0);
  EXPECT_THROW(validate_market(c, 999), std::invalid_argument);
}
