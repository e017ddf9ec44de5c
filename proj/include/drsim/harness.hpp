#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "drsim/environment.hpp"
#include "drsim/policies.hpp"
#include "drsim/records.hpp"

namespace drsim {

inline constexpr double kReportCvarAlpha = 0.95;
inline constexpr double kSpikePriceThreshold = 1.0;

struct EpisodeSummary {
  int episode = 0;
  std::uint64_t seed = 0;
  int start_day_of_year = 0;
  double total_reward = 0.0;
  double total_revenue = 0.0;
  double total_payouts = 0.0;
  double fresh_budget = 0.0;
  double final_cvar = 0.0;
  double budget_utilization = 0.0;
};

struct EpisodeResult {
  EpisodeSummary summary;
  std::vector<double> bills;
};

using StepObserver = std::function<void(const StepRecord&)>;

// Plays one episode. Policy draws come from the policy stream of the episode seed.
inline EpisodeResult run_episode(Environment& env, const Policy& policy, std::uint64_t seed,
                                 int episode, const StepObserver& observer = {}) {
  Observation o = env.reset(seed);
  RandomStream policy_rng = named_stream(seed, StreamId::kPolicy);
  const double initial_budget = env.state().initial_budget;
  EpisodeResult out;
  EpisodeSummary& s = out.summary;
  s.episode = episode;
  s.seed = seed;
  s.start_day_of_year = env.state().start_day_of_year;
  while (!env.terminated()) {
    const double credit = act(policy, o, initial_budget, policy_rng);
    StepResult r = env.step(credit);
    r.record.episode = episode;
    s.total_reward += r.reward;
    s.total_revenue += r.record.revenue;
    s.total_payouts += r.record.payout;
    if (observer) observer(r.record);
    o = r.obs;
  }
  s.fresh_budget = env.state().fresh_budget_total;
  out.bills = env.state().bills;
  s.final_cvar = cvar(out.bills, kReportCvarAlpha);
  s.budget_utilization = s.fresh_budget > 0.0 ? s.total_payouts / s.fresh_budget : 0.0;
  return out;
}

inline Json to_json(const EpisodeSummary& s) {
  return Json{{"episode", s.episode},
              {"seed", s.seed},
              {"start_day_of_year", s.start_day_of_year},
              {"total_reward", s.total_reward},
              {"total_revenue", s.total_revenue},
              {"total_payouts", s.total_payouts},
              {"final_cvar", s.final_cvar},
              {"budget_utilization", s.budget_utilization}};
}

struct RunSummary {
  std::string policy;
  int n_episodes = 0;
  std::uint64_t base_seed = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_revenue = 0.0;
  double cvar95_bills = 0.0;
  double total_payouts = 0.0;
  double budget_utilization = 0.0;
  std::vector<EpisodeSummary> episodes;
};

inline Json to_json(const RunSummary& s) {
  Json eps = Json::array();
  for (const auto& e : s.episodes) eps.push_back(to_json(e));
  return Json{{"policy", s.policy},
              {"n_episodes", s.n_episodes},
              {"seed", s.base_seed},
              {"mean_reward", s.mean_reward},
              {"std_reward", s.std_reward},
              {"mean_revenue", s.mean_revenue},
              {"cvar95_bills", s.cvar95_bills},
              {"total_payouts", s.total_payouts},
              {"budget_utilization", s.budget_utilization},
              {"episodes", std::move(eps)}};
}

struct RunOptions {
  std::ostream* jsonl = nullptr;  // per-step records, ordered by episode
  int threads = 1;
};

// Runs episodes with seeds config.seed + i. Episodes may be spread over
// worker threads; results and JSONL are assembled in episode order.
inline RunSummary run_episodes(const SimConfig& config, const Policy& policy, int n_episodes,
                               const RunOptions& options = {},
                               std::shared_ptr<const ProfileSet> data = nullptr) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  const std::size_t n = static_cast<std::size_t>(n_episodes);
  std::vector<EpisodeResult> results(n);
  std::vector<std::string> lines(options.jsonl ? n : 0);

  if (config.demand.mode == DemandMode::kCsvReplay && !data) {
    data = std::make_shared<const ProfileSet>(
        load_profiles_csv(config.demand.profile_path, config.demand.weather_path));
  }

  auto work = [&](std::size_t first, std::size_t stride) {
    Environment env(config, data);
    for (std::size_t i = first; i < n; i += stride) {
      StepObserver observer;
      std::string buffer;
      if (options.jsonl) {
        observer = [&buffer](const StepRecord& r) {
          buffer += to_json(r).dump();
          buffer += '\n';
        };
      }
      results[i] = run_episode(env, policy, config.seed + i, static_cast<int>(i), observer);
      if (options.jsonl) lines[i] = std::move(buffer);
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.threads, 1)), 1, n);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  if (options.jsonl) {
    for (const auto& l : lines) *options.jsonl << l;
    options.jsonl->flush();
    if (!*options.jsonl) throw std::runtime_error("failed writing trajectory output");
  }

  RunSummary s;
  s.policy = to_string(policy);
  s.n_episodes = n_episodes;
  s.base_seed = config.seed;
  std::vector<double> pooled;
  double fresh = 0.0;
  for (auto& r : results) {
    s.mean_reward += r.summary.total_reward;
    s.mean_revenue += r.summary.total_revenue;
    s.total_payouts += r.summary.total_payouts;
    fresh += r.summary.fresh_budget;
    pooled.insert(pooled.end(), r.bills.begin(), r.bills.end());
    s.episodes.push_back(r.summary);
  }
  s.mean_reward /= static_cast<double>(n);
  s.mean_revenue /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const auto& r : results) ss += std::pow(r.summary.total_reward - s.mean_reward, 2);
    s.std_reward = std::sqrt(ss / static_cast<double>(n - 1));
  }
  s.cvar95_bills = cvar(pooled, kReportCvarAlpha);
  s.budget_utilization = fresh > 0.0 ? s.total_payouts / fresh : 0.0;
  return s;
}

struct FrontierPoint {
  double credit_level = 0.0;
  double mean_episode_reward = 0.0;
  double mean_utility_revenue = 0.0;
  double cvar95_bills = 0.0;
  double budget_utilization = 0.0;
};

inline constexpr std::array<double, 6> kDefaultSweepLevels = {0.0, 0.02, 0.04, 0.06, 0.08, 0.10};

// Every level replays seeds config.seed + 0..episodes_per_level-1.
inline std::vector<FrontierPoint> sweep_credit(const SimConfig& config, const std::vector<double>& levels,
                                               int episodes_per_level, int threads = 1) {
  if (levels.empty()) throw std::invalid_argument("sweep needs at least one credit level");
  std::vector<FrontierPoint> out;
  for (double c : levels) {
    if (!(c >= 0.0 && c <= config.credit_max)) {
      throw std::invalid_argument("credit level " + format_number(c) + " outside [0, credit_max]");
    }
    Policy p;
    p.kind = PolicyKind::kUniform;
    p.uniform_level = c;
    p.credit_max = config.credit_max;
    const RunSummary s = run_episodes(config, p, episodes_per_level, {nullptr, threads});
    out.push_back({c, s.mean_reward, s.mean_revenue, s.cvar95_bills, s.budget_utilization});
  }
  return out;
}

inline std::string frontier_csv(const std::vector<FrontierPoint>& points) {
  std::ostringstream os;
  os << "credit_level,mean_episode_reward,mean_utility_revenue,cvar95_bills,budget_utilization\n";
  for (const auto& p : points) {
    os << format_number(p.credit_level) << ',' << format_number(p.mean_episode_reward) << ','
       << format_number(p.mean_utility_revenue) << ',' << format_number(p.cvar95_bills) << ','
       << format_number(p.budget_utilization) << '\n';
  }
  return os.str();
}

struct MarketTrace {
  std::vector<double> price;
  std::vector<double> xi;
  std::vector<Regime> regime;
  std::vector<int> hour;
};

// The agent-free price path of an episode with this seed, continued for
// n_steps hours.
inline MarketTrace market_trace(const SimConfig& config, int n_steps,
                                std::shared_ptr<const ProfileSet> data = nullptr) {
  if (config.demand.mode == DemandMode::kCsvReplay && !data) {
    data = std::make_shared<const ProfileSet>(
        load_profiles_csv(config.demand.profile_path, config.demand.weather_path));
  }
  const DemandSource demand(config, data);
  const StreamSet streams = StreamSet::from_seed(config.seed);
  RandomStream market = streams.market;
  const int start = episode_start_day(config, streams);

  MarketTrace tr;
  const auto n = static_cast<std::size_t>(n_steps);
  tr.price.reserve(n);
  tr.xi.reserve(n);
  tr.regime.reserve(n);
  tr.hour.reserve(n);
  MarketState m = initial_market(demand.temperature(episode_clock(start, 0), streams.demand), market,
                                 config.price);
  for (int t = 0; t < n_steps; ++t) {
    if (t > 0) {
      const StepClock clock = episode_clock(start, t);
      m = advance_market(m, clock.hour, demand.temperature(clock, streams.demand), market, config.price);
    }
    tr.price.push_back(m.last_price);
    tr.xi.push_back(m.xi);
    tr.regime.push_back(m.regime);
    tr.hour.push_back(t % kHoursPerDay);
  }
  return tr;
}

struct MarketStatsReport {
  int n_steps = 0;
  double lag1_autocorr = 0.0;
  std::array<double, kHoursPerDay> hourly_price_medians{};
  double spike_hour_fraction = 0.0;
  double mean_storm_duration_hours = 0.0;
  int n_storms = 0;
  double overnight_innovation_sigma = 0.0;
};

inline double lag1_autocorrelation(const std::vector<double>& x) {
  if (x.size() < 3) throw std::invalid_argument("autocorrelation needs at least 3 values");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean;
    den += d * d;
    if (i + 1 < x.size()) num += d * (x[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

inline MarketStatsReport market_stats(const MarketTrace& tr, const PriceParams& p) {
  MarketStatsReport r;
  const std::size_t n = tr.price.size();
  r.n_steps = static_cast<int>(n);
  r.lag1_autocorr = lag1_autocorrelation(tr.price);

  std::array<std::vector<double>, kHoursPerDay> by_hour;
  std::size_t spikes = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (tr.regime[t] == Regime::kNormal) by_hour[static_cast<std::size_t>(tr.hour[t])].push_back(tr.price[t]);
    if (tr.price[t] > kSpikePriceThreshold) ++spikes;
  }
  for (std::size_t h = 0; h < by_hour.size(); ++h) r.hourly_price_medians[h] = median(by_hour[h]);
  r.spike_hour_fraction = static_cast<double>(spikes) / static_cast<double>(n);

  // Only storms that start and end inside the trace are counted.
  long storm_hours = 0;
  std::size_t t = 0;
  while (t < n && tr.regime[t] == Regime::kSpikeStorm) ++t;
  while (t < n) {
    if (tr.regime[t] != Regime::kSpikeStorm) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end < n && tr.regime[end] == Regime::kSpikeStorm) ++end;
    if (end < n) {
      ++r.n_storms;
      storm_hours += static_cast<long>(end - t);
    }
    t = end;
  }
  r.mean_storm_duration_hours = r.n_storms > 0 ? static_cast<double>(storm_hours) / r.n_storms : 0.0;

  // Least-squares fit xi' = a + b xi over transitions into unit-multiplier hours.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (p.het_multipliers[static_cast<std::size_t>(tr.hour[i + 1])] != 1.0) continue;
    const double x = tr.xi[i];
    const double y = tr.xi[i + 1];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++m;
  }
  if (m > 2) {
    const double md = static_cast<double>(m);
    const double vx = sxx - sx * sx / md;
    const double cxy = sxy - sx * sy / md;
    const double vy = syy - sy * sy / md;
    const double rss = vx > 0.0 ? vy - cxy * cxy / vx : vy;
    r.overnight_innovation_sigma = std::sqrt(std::max(0.0, rss) / (md - 2.0));
  }
  return r;
}

inline MarketStatsReport validate_market(const SimConfig& config, int n_steps,
                                         std::shared_ptr<const ProfileSet> data = nullptr) {
  if (n_steps < 1000) throw std::invalid_argument("validate-market needs at least 1000 steps");
  return market_stats(market_trace(config, n_steps, std::move(data)), config.price);
}

inline Json to_json(const MarketStatsReport& r) {
  return Json{{"n_steps", r.n_steps},
              {"lag1_autocorr", r.lag1_autocorr},
              {"hourly_price_medians", to_json(r.hourly_price_medians)},
              {"spike_hour_fraction", r.spike_hour_fraction},
              {"mean_storm_duration_hours", r.mean_storm_duration_hours},
              {"n_storms", r.n_storms},
              {"overnight_innovation_sigma", r.overnight_innovation_sigma}};
}

}  // namespace drsim
