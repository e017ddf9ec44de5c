#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "drsim/environment.hpp"

using namespace drsim;

namespace {

SimConfig small_config(int n = 50) {
  SimConfig c;
  c.n_buildings = n;
  return c;
}

std::vector<StepRecord> rollout(const SimConfig& c, std::uint64_t seed, double credit) {
  Environment env(c);
  env.reset(seed);
  std::vector<StepRecord> out;
  while (!env.terminated()) out.push_back(env.step(credit).record);
  return out;
}

bool same(const StepRecord& a, const StepRecord& b) {
  return a.t == b.t && a.price == b.price && a.credit_effective == b.credit_effective &&
         a.aggregate_demand == b.aggregate_demand && a.n_accepted == b.n_accepted &&
         a.payout == b.payout && a.reward.total == b.reward.total && a.cvar_running == b.cvar_running &&
         a.budget_remaining == b.budget_remaining && a.temperature == b.temperature;
}

}  // namespace

TEST(Reward, WorkedExample) {
  const RewardBreakdown r = compute_reward(50.0, 100.0, 0.5, 0.0, 50, RewardParams{});
  EXPECT_NEAR(r.total, -0.008, 1e-12);
  EXPECT_NEAR(r.revenue_term + r.cost_term + r.stress_term + r.risk_term, r.total, 1e-15);
}

TEST(Environment, ResetObservation) {
  Environment env(small_config());
  const Observation o = env.reset(3);
  EXPECT_EQ(o.size(), 32u);
  EXPECT_EQ(o[obs::kHour], 0.0);
  EXPECT_EQ(o[obs::kLastCredit], 0.0);
  EXPECT_EQ(o[obs::kCumulativeCredits], 0.0);
  EXPECT_EQ(o[obs::kDayInEpisode], 0.0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(o[obs::kDemandHistory + k], 0.0);
  EXPECT_GT(o[obs::kAggregateDemand], 0.0);
  EXPECT_EQ(o[obs::kDemandHistory + 4], o[obs::kAggregateDemand]);
  double sum = 0.0;
  for (const auto& b : env.state().buildings) sum += b.baseline;
  EXPECT_NEAR(o[obs::kAggregateDemand], sum, 1e-12);
  EXPECT_EQ(o[obs::kBudgetRemaining], env.state().initial_budget);
  EXPECT_EQ(o[obs::kBuildingLoads], env.state().buildings[0].load);
}

TEST(Environment, FewBuildingsPadLoadsWithZero) {
  Environment env(small_config(5));
  Observation o = env.reset(1);
  while (true) {
    for (std::size_t i = 20; i < 25; ++i) EXPECT_EQ(o[i], 0.0);
    EXPECT_GT(o[obs::kBuildingLoads + 4], 0.0);
    if (env.terminated()) break;
    o = env.step(0.05).obs;
  }
}

TEST(Environment, ObservationBounds) {
  SimConfig c = small_config();
  c.episode_days = 3;
  Environment env(c);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Observation o = env.reset(seed);
    RandomStream rng(seed);
    while (true) {
      EXPECT_GE(o[obs::kPrice], 0.02);
      EXPECT_LE(o[obs::kPrice], 9.50);
      if (o[obs::kTemperature] <= 45.0) {
        for (std::size_t i = obs::kDemandStress; i <= obs::kOverallStress; ++i) {
          EXPECT_GE(o[i], 0.0);
          EXPECT_LE(o[i], 1.0);
        }
      }
      EXPECT_GE(o[obs::kBudgetRemaining], 0.0);
      EXPECT_LE(o[obs::kLastCredit], 0.10);
      if (env.terminated()) break;
      o = env.step(rng.uniform(-0.05, 0.2)).obs;
    }
    EXPECT_EQ(o[obs::kDayInEpisode], 3.0);
  }
}

TEST(Environment, HistoryShiftsOldestFirst) {
  Environment env(small_config());
  env.reset(5);
  std::vector<double> demand;
  Observation o{};
  for (int t = 0; t < 7; ++t) {
    const StepResult r = env.step(0.0);
    demand.push_back(r.record.aggregate_demand);
    o = r.obs;
  }
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(o[obs::kDemandHistory + k], demand[2 + k]);
  EXPECT_EQ(o[obs::kAggregateDemand], demand.back());
}

TEST(Environment, ZeroActionPaysNothing) {
  Environment env(small_config());
  env.reset(8);
  const std::vector<double> before = env.state().bills;
  const StepResult r = env.step(0.0);
  EXPECT_EQ(r.record.payout, 0.0);
  EXPECT_EQ(r.record.n_accepted, 0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_NEAR(env.state().bills[i] - before[i], 0.15 * env.state().buildings[i].load, 1e-12);
  }
}

TEST(Environment, ActionClampedToCreditMax) {
  const auto high = rollout(small_config(), 21, 0.2);
  const auto max = rollout(small_config(), 21, 0.10);
  ASSERT_EQ(high.size(), max.size());
  for (std::size_t t = 0; t < high.size(); ++t) {
    EXPECT_TRUE(same(high[t], max[t])) << t;
    EXPECT_EQ(high[t].credit_requested, 0.2);
  }
  const auto neg = rollout(small_config(), 21, -1.0);
  const auto zero = rollout(small_config(), 21, 0.0);
  for (std::size_t t = 0; t < neg.size(); ++t) EXPECT_TRUE(same(neg[t], zero[t])) << t;
}

TEST(Environment, AccountingIdentities) {
  SimConfig c = small_config();
  c.episode_days = 2;
  Environment env(c);
  RandomStream rng(17);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env.reset(seed);
    double risk_sum = 0.0;
    while (!env.terminated()) {
      const std::vector<double> before = env.state().bills;
      const StepResult r = env.step(rng.uniform(0.0, 0.1));
      const StepRecord& rec = r.record;
      const double d = rec.aggregate_demand;
      const double ce = rec.credit_effective;
      EXPECT_NEAR(rec.revenue, (0.15 - ce - rec.price) * d, 1e-9);
      EXPECT_NEAR(rec.consumer_cost, (0.15 - ce) * d, 1e-9);
      double non_accepting = 0.0;
      double accepting = 0.0;
      double increments = 0.0;
      for (std::size_t i = 0; i < before.size(); ++i) {
        const double load = env.state().buildings[i].load;
        (env.responses()[i].accepted ? accepting : non_accepting) += load;
        increments += env.state().bills[i] - before[i];
      }
      EXPECT_NEAR(rec.bill_increment_total - rec.consumer_cost, ce * non_accepting, 1e-9);
      EXPECT_NEAR(increments, rec.bill_increment_total, 1e-9);
      EXPECT_NEAR(rec.payout, ce * accepting, 1e-9);
      risk_sum += rec.reward.risk_term;
    }
    EXPECT_NEAR(risk_sum, -0.01 * 0.3 * cvar(env.state().bills, 0.95), 1e-12);
  }
}

TEST(Environment, DailyPayoutsWithinDrawnBudget) {
  SimConfig c = small_config();
  c.episode_days = 5;
  Environment env(c);
  RandomStream rng(23);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    env.reset(seed);
    std::map<int, double> paid;
    std::map<int, double> budget;
    while (!env.terminated()) {
      const StepRecord r = env.step(rng.uniform(0.0, 0.1)).record;
      paid[r.day_in_episode] += r.payout;
      budget[r.day_in_episode] = r.budget_today;
    }
    for (const auto& [day, p] : paid) EXPECT_LE(p, budget[day] * (1.0 + 1e-12)) << day;
  }
}

TEST(Environment, BudgetRollsOverBetweenDays) {
  SimConfig c = small_config();
  c.episode_days = 2;
  Environment env(c);
  env.reset(4);
  double remaining_end_day0 = 0.0;
  while (env.state().day_in_episode == 0) remaining_end_day0 = env.step(0.03).record.budget_remaining;
  const BudgetLedger& l = env.state().ledger;
  EXPECT_NEAR(l.unspent_carry, 0.95 * remaining_end_day0, 1e-12);
  EXPECT_GE(l.today_budget, l.unspent_carry);
  EXPECT_EQ(env.observation()[obs::kDayInEpisode], 1.0);
  EXPECT_EQ(env.observation()[obs::kHour], 0.0);
}

TEST(Environment, Deterministic) {
  const auto a = rollout(small_config(), 99, 0.04);
  const auto b = rollout(small_config(), 99, 0.04);
  ASSERT_EQ(a.size(), 24u);
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_TRUE(same(a[t], b[t]));
  const auto c = rollout(small_config(), 100, 0.04);
  EXPECT_NE(a[5].price, c[5].price);
}

TEST(Environment, BuildingCountDoesNotMovePrices) {
  const auto a = rollout(small_config(50), 7, 0.06);
  const auto b = rollout(small_config(13), 7, 0.06);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].price, b[t].price);
    EXPECT_EQ(a[t].temperature, b[t].temperature);
  }
}

TEST(Environment, CommonRandomNumbersAcrossCredits) {
  Environment lo(small_config()), hi(small_config());
  lo.reset(12);
  hi.reset(12);
  lo.step(0.02);
  hi.step(0.09);
  int nested = 0;
  for (std::size_t i = 0; i < lo.responses().size(); ++i) {
    if (lo.responses()[i].accepted) {
      EXPECT_TRUE(hi.responses()[i].accepted) << i;
      EXPECT_EQ(lo.responses()[i].delta, hi.responses()[i].delta);
      ++nested;
    }
  }
  EXPECT_GT(nested, 0);
}

TEST(Environment, EpisodeLengthAndGuards) {
  Environment env(small_config());
  EXPECT_THROW(env.step(0.0), std::logic_error);
  env.reset(1);
  EXPECT_THROW(env.step(std::nan("")), std::invalid_argument);
  for (int t = 0; t < 23; ++t) EXPECT_FALSE(env.step(0.0).terminated);
  const StepResult last = env.step(0.0);
  EXPECT_TRUE(last.terminated);
  EXPECT_FALSE(last.truncated);
  EXPECT_THROW(env.step(0.0), std::logic_error);
  env.reset(1);
  EXPECT_FALSE(env.terminated());
}

TEST(Environment, ResetRestoresStartState) {
  Environment env(small_config());
  const Observation first = env.reset(31);
  for (int t = 0; t < 10; ++t) env.step(0.08);
  EXPECT_EQ(env.reset(31), first);
}

TEST(Environment, FixedDayOfYear) {
  SimConfig c = small_config();
  c.day_of_year = 200;
  Environment env(c);
  env.reset(3);
  EXPECT_EQ(env.state().start_day_of_year, 200);
  EXPECT_EQ(env.observation()[obs::kDayOfWeek], 200 % 7);
}

TEST(Environment, RiskDisabled) {
  SimConfig c = small_config();
  c.reward.risk = "none";
  for (const auto& r : rollout(c, 3, 0.05)) {
    EXPECT_EQ(r.delta_risk, 0.0);
    EXPECT_EQ(r.reward.risk_term, 0.0);
    EXPECT_GT(r.cvar_running, 0.0);
  }
}

TEST(Environment, CsvReplayEpisode) {
  SimConfig c = small_config(12);
  c.demand.mode = DemandMode::kCsvReplay;
  c.demand.profile_path = std::string(DRSIM_TEST_DATA) + "/profiles_5.csv";
  c.demand.weather_path = std::string(DRSIM_TEST_DATA) + "/weather.csv";
  c.day_of_year = 0;
  Environment env(c);
  const Observation o = env.reset(2);
  EXPECT_NEAR(o[obs::kTemperature], 14.34, 1e-12);
  EXPECT_NEAR(o[obs::kBuildingLoads], 0.6, 1e-12);
  int steps = 0;
  while (!env.terminated()) {
    env.step(0.05);
    ++steps;
  }
  EXPECT_EQ(steps, 24);

  c.demand.profile_path = "/nonexistent.csv";
  EXPECT_THROW(Environment{c}, DataError);
}

TEST(Environment, InvalidConfigRejected) {
  SimConfig c;
  c.n_buildings = 0;
  EXPECT_THROW(Environment{c}, ConfigError);
}
