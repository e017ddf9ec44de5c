#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "drsim/budget.hpp"
#include "drsim/config.hpp"
#include "drsim/customer.hpp"
#include "drsim/demand.hpp"
#include "drsim/market.hpp"
#include "drsim/risk.hpp"
#include "drsim/rng.hpp"
#include "drsim/stress.hpp"

namespace drsim {

inline constexpr std::size_t kObservationSize = 32;
inline constexpr std::size_t kObservedBuildings = 10;
inline constexpr std::size_t kHistoryLength = 5;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kDaysInYear = 365;

using Observation = std::array<double, kObservationSize>;

// Observation vector layout.
namespace obs {
inline constexpr std::size_t kHour = 0;
inline constexpr std::size_t kDayOfWeek = 1;
inline constexpr std::size_t kAggregateDemand = 2;
inline constexpr std::size_t kPrice = 3;
inline constexpr std::size_t kForecast = 4;  // 4..7, t+1..t+4
inline constexpr std::size_t kTemperature = 8;
inline constexpr std::size_t kDemandStress = 9;
inline constexpr std::size_t kPriceStress = 10;
inline constexpr std::size_t kThermalStress = 11;
inline constexpr std::size_t kOverallStress = 12;
inline constexpr std::size_t kBudgetRemaining = 13;
inline constexpr std::size_t kLastCredit = 14;
inline constexpr std::size_t kBuildingLoads = 15;  // 15..24
inline constexpr std::size_t kDemandHistory = 25;  // 25..29, oldest first
inline constexpr std::size_t kCumulativeCredits = 30;
inline constexpr std::size_t kDayInEpisode = 31;
}  // namespace obs

struct RewardBreakdown {
  double revenue_term = 0.0;
  double cost_term = 0.0;
  double stress_term = 0.0;
  double risk_term = 0.0;
  double total = 0.0;
};

// Per-step reward: scale * (wR R/N - wC C/N - wS stress - wRisk dRisk).
inline RewardBreakdown compute_reward(double revenue, double consumer_cost, double stress_overall,
                                      double delta_risk, int n_buildings, const RewardParams& p) {
  const double n = static_cast<double>(n_buildings);
  RewardBreakdown r;
  r.revenue_term = p.scale * p.w_revenue * revenue / n;
  r.cost_term = -p.scale * p.w_cost * consumer_cost / n;
  r.stress_term = -p.scale * p.w_stress * stress_overall;
  r.risk_term = -p.scale * p.w_risk * delta_risk;
  r.total = p.scale * (p.w_revenue * revenue / n - p.w_cost * consumer_cost / n -
                       p.w_stress * stress_overall - p.w_risk * delta_risk);
  return r;
}

struct Building {
  BuildingProfile profile;
  CustomerState customer;
  double multiplier = 1.0;  // demand-persistence multiplier
  double baseline = 0.0;    // raw baseline for the current hour
  double load = 0.0;        // most recent realized (post-reduction) load
};

struct StepRecord {
  int episode = 0;
  int t = 0;
  int hour = 0;
  int day_in_episode = 0;
  double temperature = 0.0;
  double price = 0.0;
  double credit_requested = 0.0;
  double credit_effective = 0.0;
  double aggregate_demand = 0.0;
  int n_accepted = 0;
  double reduction_total_kwh = 0.0;
  double revenue = 0.0;
  double consumer_cost = 0.0;
  double payout = 0.0;
  double bill_increment_total = 0.0;
  double budget_today = 0.0;
  double budget_remaining = 0.0;
  StressReadout stress;
  double delta_risk = 0.0;
  RewardBreakdown reward;
  double cvar_running = 0.0;
};

struct EnvState {
  int t = 0;
  int hour = 0;
  int day_in_episode = 0;
  int day_of_week = 0;
  int start_day_of_year = 0;
  int day_of_year = 0;
  bool terminated = false;

  MarketState market;
  PriceForecast forecast{};
  double price = 0.0;        // wholesale price for the hour about to be acted on
  double temperature = 0.0;  // deg C for that hour

  std::vector<Building> buildings;
  std::vector<double> bills;  // cumulative per-building episode bills

  BudgetLedger ledger;
  double initial_budget = 0.0;
  double fresh_budget_total = 0.0;  // drawn budget excluding rollover
  double cumulative_credits = 0.0;
  double last_credit = 0.0;

  double aggregate_demand = 0.0;  // latest realized D (pre-action baseline at reset)
  std::array<double, kHistoryLength> demand_history{};
  int realized_steps = 0;

  double prev_risk = 0.0;
  double total_reward = 0.0;
  double total_revenue = 0.0;
};

// Assembles the 32-vector from state, in raw engineering units.
inline Observation build_observation(const EnvState& s, const SimConfig& c) {
  Observation o{};
  o[obs::kHour] = s.hour;
  o[obs::kDayOfWeek] = s.day_of_week;
  o[obs::kAggregateDemand] = s.aggregate_demand;
  o[obs::kPrice] = s.price;
  for (std::size_t k = 0; k < s.forecast.size(); ++k) o[obs::kForecast + k] = s.forecast[k];
  o[obs::kTemperature] = s.temperature;
  const StressReadout st = stress_indicators(s.aggregate_demand, s.price, s.temperature, c.stress);
  o[obs::kDemandStress] = st.demand;
  o[obs::kPriceStress] = st.price;
  o[obs::kThermalStress] = st.thermal;
  o[obs::kOverallStress] = st.overall;
  o[obs::kBudgetRemaining] = s.ledger.remaining;
  o[obs::kLastCredit] = s.last_credit;
  const std::size_t shown = std::min(kObservedBuildings, s.buildings.size());
  for (std::size_t i = 0; i < shown; ++i) o[obs::kBuildingLoads + i] = s.buildings[i].load;
  for (std::size_t k = 0; k < kHistoryLength; ++k) o[obs::kDemandHistory + k] = s.demand_history[k];
  o[obs::kCumulativeCredits] = s.cumulative_credits;
  o[obs::kDayInEpisode] = s.day_in_episode;
  return o;
}

// Fixed by config, or drawn once per episode from the budget stream.
inline int episode_start_day(const SimConfig& c, const StreamSet& streams) {
  if (c.day_of_year >= 0) return c.day_of_year;
  RandomStream rng = streams.budget.substream(stream_tag::kDayOfYear);
  return std::min(kDaysInYear - 1, static_cast<int>(rng.uniform() * kDaysInYear));
}

inline StepClock episode_clock(int start_day, int t) {
  const int day = t / kHoursPerDay;
  return {t, t % kHoursPerDay, (start_day + day) % kDaysInYear,
          static_cast<long>(start_day) * kHoursPerDay + t};
}

// Price path the environment sees at reset: one day of burn-in at the
// step-0 temperature, then the hour-0 advance.
inline MarketState initial_market(double temp_c, RandomStream& market, const PriceParams& p) {
  MarketState m;
  for (int h = 0; h < kHoursPerDay; ++h) m = advance_market(m, h, temp_c, market, p);
  return advance_market(m, 0, temp_c, market, p);
}

struct StepResult {
  Observation obs{};
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepRecord record;
};

// The demand-response MDP. One instance is single-threaded; independent
// instances may run concurrently and may be moved between threads between
// calls.
class Environment {
 public:
  explicit Environment(SimConfig config, std::shared_ptr<const ProfileSet> data = nullptr)
      : config_(validated(std::move(config))),
        risk_(make_risk_measure(config_.reward.risk)),
        demand_(config_, load_data_if_needed(config_, std::move(data))) {}

  const SimConfig& config() const { return config_; }
  const EnvState& state() const { return state_; }
  const Observation& observation() const { return obs_; }
  // Per-building responses of the most recent step.
  const std::vector<Response>& responses() const { return responses_; }
  const DemandSource& demand_source() const { return demand_; }
  bool terminated() const { return state_.terminated; }
  int episode_steps() const { return config_.episode_steps(); }

  Observation reset() { return reset(config_.seed); }

  Observation reset(std::uint64_t seed) {
    streams_ = StreamSet::from_seed(seed);
    state_ = EnvState{};
    EnvState& s = state_;

    s.start_day_of_year = episode_start_day(config_, streams_);

    const auto profiles = demand_.make_buildings(config_.n_buildings, streams_.demand);
    const RandomStream archetype_base = streams_.customer.substream(stream_tag::kArchetype);
    s.buildings.resize(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      s.buildings[i].profile = profiles[i];
      RandomStream rng = archetype_base.substream(i);
      s.buildings[i].customer = {archetype_for(rng.uniform(), config_.customer), 1.0};
    }
    s.bills.assign(profiles.size(), 0.0);

    set_clock(0);
    s.temperature = demand_.temperature(clock(), streams_.demand);

    s.market = initial_market(s.temperature, streams_.market, config_.price);
    s.price = s.market.last_price;
    s.forecast = price_forecast(s.market, s.hour, config_.price);

    RandomStream budget_rng = streams_.budget.substream(0);
    const double budget = draw_daily_budget(s.day_of_year, 0.0, budget_rng, config_.budget);
    s.ledger = open_day(s.day_of_year, budget, 0.0);
    s.initial_budget = budget;
    s.fresh_budget_total = budget;

    refresh_baselines();
    double preview = 0.0;
    for (auto& b : s.buildings) {
      b.load = b.baseline * b.multiplier;
      preview += b.load;
    }
    s.aggregate_demand = preview;
    s.demand_history.back() = preview;

    obs_ = build_observation(s, config_);
    started_ = true;
    return obs_;
  }

  StepResult step(double action) {
    if (!started_) throw std::logic_error("step() called before reset()");
    if (state_.terminated) throw std::logic_error("step() called on a terminated episode");
    if (std::isnan(action)) throw std::invalid_argument("action is NaN");
    EnvState& s = state_;
    const SimConfig& c = config_;

    StepRecord rec;
    rec.t = s.t;
    rec.hour = s.hour;
    rec.day_in_episode = s.day_in_episode;
    rec.temperature = s.temperature;
    rec.price = s.price;
    rec.credit_requested = action;

    // (1)-(2) clamp, then pre-cap against the previous aggregate demand.
    const double clamped = std::clamp(action, 0.0, c.credit_max);
    double credit = cap_credit(clamped, s.ledger.remaining, s.aggregate_demand);

    // (3)-(4) responses against the raw baseline, then realized loads.
    responses_.assign(s.buildings.size(), Response{});
    const RandomStream step_rng = streams_.customer.substream(static_cast<std::uint64_t>(s.t));
    double demand = 0.0;
    double accepted_kwh = 0.0;
    double reduction_total = 0.0;
    int n_accepted = 0;
    for (std::size_t i = 0; i < s.buildings.size(); ++i) {
      Building& b = s.buildings[i];
      if (credit > 0.0) {
        RandomStream rng = step_rng.substream(i);
        responses_[i] = sample_response(b.customer, credit, b.baseline, rng, c.customer);
      }
      const Response& r = responses_[i];
      b.load = effective_demand(b.baseline, b.multiplier, r.reduction_kwh);
      demand += b.load;
      if (r.accepted) {
        accepted_kwh += b.load;
        reduction_total += r.reduction_kwh;
        ++n_accepted;
      }
    }

    // (5) payout, rescaled to at most the remaining budget.
    const Payout pay = fit_payout(credit, accepted_kwh, s.ledger.remaining);
    credit = pay.credit;
    s.ledger = charge(s.ledger, pay.amount);

    // (6) accounting.
    const double revenue = (c.retail_rate - credit - s.price) * demand;
    const double consumer_cost = (c.retail_rate - credit) * demand;
    double bill_increments = 0.0;
    for (std::size_t i = 0; i < s.buildings.size(); ++i) {
      const double rate = c.retail_rate - (responses_[i].accepted ? credit : 0.0);
      const double inc = rate * s.buildings[i].load;
      s.bills[i] += inc;
      bill_increments += inc;
    }

    // (7)-(9) stress, incremental risk, reward.
    const StressReadout stress = stress_indicators(demand, s.price, s.temperature, c.stress);
    double delta = 0.0;
    if (risk_.enabled()) {
      const RiskDelta rd = delta_risk(s.prev_risk, s.bills, risk_);
      delta = rd.delta;
      s.prev_risk = rd.new_risk;
    }
    const RewardBreakdown reward =
        compute_reward(revenue, consumer_cost, stress.overall, delta, c.n_buildings, c.reward);

    // (10) behavioral and market memory.
    for (std::size_t i = 0; i < s.buildings.size(); ++i) {
      Building& b = s.buildings[i];
      b.customer.fatigue = update_fatigue(b.customer.fatigue, responses_[i].accepted, c.customer);
      b.multiplier = update_feedback_multiplier(b.multiplier, responses_[i].delta, c.feedback_gamma);
    }
    s.market.reduction_ewma =
        update_reduction_ewma(s.market.reduction_ewma, reduction_total, c.price.ewma_alpha);

    s.cumulative_credits += pay.amount;
    s.last_credit = credit;
    s.aggregate_demand = demand;
    if (s.realized_steps > 0) {
      std::rotate(s.demand_history.begin(), s.demand_history.begin() + 1, s.demand_history.end());
    }
    s.demand_history.back() = demand;
    ++s.realized_steps;
    s.total_reward += reward.total;
    s.total_revenue += revenue;

    rec.credit_effective = credit;
    rec.aggregate_demand = demand;
    rec.n_accepted = n_accepted;
    rec.reduction_total_kwh = reduction_total;
    rec.revenue = revenue;
    rec.consumer_cost = consumer_cost;
    rec.payout = pay.amount;
    rec.bill_increment_total = bill_increments;
    rec.budget_today = s.ledger.today_budget;
    rec.budget_remaining = s.ledger.remaining;
    rec.stress = stress;
    rec.delta_risk = delta;
    rec.reward = reward;
    rec.cvar_running = cvar(s.bills, 0.95);

    // (11) clock and daily budget.
    const int next_t = s.t + 1;
    s.terminated = next_t >= c.episode_steps();
    const bool new_day = next_t % kHoursPerDay == 0;
    set_clock(next_t);
    if (new_day && !s.terminated) {
      RandomStream rng = streams_.budget.substream(static_cast<std::uint64_t>(s.day_in_episode));
      const double carry = c.budget.rollover * s.ledger.remaining;
      const double budget = draw_daily_budget(s.day_of_year, s.ledger.remaining, rng, c.budget);
      s.ledger = open_day(s.day_of_year, budget, carry);
      s.fresh_budget_total += budget - carry;
    }

    // (12)-(13) next price, forecast and observation.
    s.temperature = demand_.temperature(clock(), streams_.demand);
    s.market = advance_market(s.market, s.hour, s.temperature, streams_.market, c.price);
    s.price = s.market.last_price;
    s.forecast = price_forecast(s.market, s.hour, c.price);
    if (!s.terminated) refresh_baselines();
    obs_ = build_observation(s, c);

    return {obs_, reward.total, s.terminated, false, rec};
  }

 private:
  static SimConfig validated(SimConfig c) {
    validate(c);
    return c;
  }

  static std::shared_ptr<const ProfileSet> load_data_if_needed(
      const SimConfig& c, std::shared_ptr<const ProfileSet> data) {
    if (c.demand.mode != DemandMode::kCsvReplay || data) return data;
    return std::make_shared<const ProfileSet>(
        load_profiles_csv(c.demand.profile_path, c.demand.weather_path));
  }

  StepClock clock() const { return episode_clock(state_.start_day_of_year, state_.t); }

  void set_clock(int t) {
    EnvState& s = state_;
    s.t = t;
    s.hour = t % kHoursPerDay;
    s.day_in_episode = t / kHoursPerDay;
    s.day_of_year = (s.start_day_of_year + s.day_in_episode) % kDaysInYear;
    s.day_of_week = (s.start_day_of_year + s.day_in_episode) % kDaysPerWeek;
  }

  void refresh_baselines() {
    const StepClock now = clock();
    const RandomStream step_rng = streams_.demand.substream(static_cast<std::uint64_t>(now.step));
    for (std::size_t i = 0; i < state_.buildings.size(); ++i) {
      Building& b = state_.buildings[i];
      b.baseline = demand_.baseline(b.profile, i, now, state_.temperature, step_rng);
    }
  }

  SimConfig config_;
  RiskMeasure risk_;
  DemandSource demand_;
  StreamSet streams_;
  EnvState state_;
  Observation obs_{};
  std::vector<Response> responses_;
  bool started_ = false;
};

}  // namespace drsim
