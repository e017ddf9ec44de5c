#pragma once

#include <array>
#include <bitset>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drsim/risk.hpp"

namespace drsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kHoursPerDay = 24;

using HourSet = std::bitset<kHoursPerDay>;

inline HourSet make_hour_set(std::initializer_list<int> hours) {
  HourSet set;
  for (int h : hours) set.set(static_cast<std::size_t>(h));
  return set;
}

// Shortest round-trip text for a double, with a trailing ".0" on integers.
inline std::string format_number(double x) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  std::string s(buf.data(), end);
  if (std::isfinite(x) && s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

struct PriceParams {
  double tou_offpeak = 0.07;
  double tou_shoulder = 0.12;
  double tou_peak = 0.18;
  HourSet peak_hours = make_hour_set({16, 17, 18, 19, 20, 21});
  HourSet offpeak_hours = make_hour_set({22, 23, 0, 1, 2, 3, 4, 5});

  double rho = 0.9;
  double sigma_eps = 0.02;
  std::array<double, kHoursPerDay> het_multipliers = {
      1.0, 1.0, 1.0, 1.0, 1.0, 1.0,   // 0-5
      1.4, 1.8, 1.8, 1.8, 1.4, 1.4,   // 6-11
      1.4, 1.4, 1.4, 1.4, 1.4, 1.4,   // 12-17
      1.8, 1.8, 1.8, 1.4, 1.0, 1.0};  // 18-23

  double spike_entry_base = 0.005;
  double peak_entry_multiplier = 2.0;
  double temp_spike_boost = 0.03;
  double spike_temp_hi = 35.0;
  double spike_temp_lo = 0.0;
  double spike_exit_prob = 0.15;
  double spike_lognormal_mu = 0.4;
  double spike_lognormal_sigma = 0.8;
  // false: one magnitude per storm, drawn on entry.
  bool spike_resample_hourly = false;

  double price_cap = 9.50;
  double price_floor = 0.02;
  double elasticity_lambda = 0.0;
  double ewma_alpha = 0.8;

  bool operator==(const PriceParams&) const = default;
};

struct ArchetypeParams {
  std::string name;
  double proportion = 0.0;
  double base_accept = 0.0;
  double reduction_mean = 0.0;
  double sensitivity_kappa = 0.0;

  bool operator==(const ArchetypeParams&) const = default;
};

enum class AcceptanceForm {
  kIncreasing,  // base * f * 2 * logistic(kappa * (c - midpoint)), capped at 1
  kLiteral,     // base * f * logistic(-kappa * (c - midpoint))
};

struct CustomerParams {
  std::vector<ArchetypeParams> archetypes = {
      {"price_sensitive", 0.30, 0.80, 0.20, 3.0},
      {"eco_conscious", 0.20, 0.85, 0.18, 1.5},
      {"neutral", 0.35, 0.65, 0.12, 2.0},
      {"reluctant", 0.15, 0.40, 0.08, 1.0},
  };
  double credit_midpoint = 0.05;
  double sensitivity_scale = 1.0;
  AcceptanceForm acceptance_form = AcceptanceForm::kIncreasing;
  double fatigue_decay = 0.1;
  double fatigue_recovery = 0.05;
  double fatigue_floor = 0.3;
  double reduction_std_ratio = 0.25;
  double reduction_cap = 0.5;

  bool operator==(const CustomerParams&) const = default;
};

struct StressParams {
  double demand_threshold = 100.0;
  double demand_slope = 1.0;
  double price_threshold = 0.25;
  double price_slope = 20.0;
  double thermal_hi = 35.0;
  double thermal_lo = 0.0;
  double thermal_ramp = 10.0;
  double w_demand = 0.3;
  double w_price = 0.5;
  double w_thermal = 0.2;

  bool operator==(const StressParams&) const = default;
};

struct BudgetParams {
  double mu = 100.0;
  double sigma = 20.0;
  double rollover = 0.95;
  double seasonal_base = 0.6;
  double seasonal_amp = 0.8;

  bool operator==(const BudgetParams&) const = default;
};

struct RewardParams {
  double w_revenue = 0.3;
  double w_cost = 0.5;
  double w_stress = 0.2;
  double w_risk = 0.3;
  double scale = 0.01;
  // "cvar:<alpha>" or "none"; see risk.hpp for the registry.
  std::string risk = "cvar:0.95";

  bool operator==(const RewardParams&) const = default;
};

enum class DemandMode { kSynthetic, kCsvReplay };

struct DemandParams {
  DemandMode mode = DemandMode::kSynthetic;
  std::string profile_path;
  std::string weather_path;

  // Synthetic generator. load_scale puts the population mean near 2 kWh/h.
  double load_scale = 2.3;
  double scale_lo = 0.7;
  double scale_hi = 1.3;
  double hvac_lo = 0.5;
  double hvac_hi = 1.5;
  double noise_sigma = 0.15;
  double temp_noise_sigma = 1.0;

  // Replay: copies of a source profile beyond the first get a jitter
  // uniform on [1 - reuse_jitter, 1 + reuse_jitter].
  double reuse_jitter = 0.1;

  bool operator==(const DemandParams&) const = default;
};

struct SimConfig {
  int n_buildings = 50;
  int episode_days = 1;
  int steps_per_day = kHoursPerDay;
  double retail_rate = 0.15;
  double credit_max = 0.10;
  double feedback_gamma = 0.9;
  // Start day of year in [0, 364]; negative draws it per episode.
  int day_of_year = -1;
  std::uint64_t seed = 42;

  PriceParams price;
  CustomerParams customer;
  StressParams stress;
  BudgetParams budget;
  RewardParams reward;
  DemandParams demand;

  int episode_steps() const { return episode_days * steps_per_day; }

  bool operator==(const SimConfig&) const = default;
};

namespace detail {

[[noreturn]] inline void invalid(std::string_view field, std::string_view what) {
  throw ConfigError("invalid config field '" + std::string(field) + "': " +
                    std::string(what));
}

inline void require_finite(std::string_view field, double x) {
  if (!std::isfinite(x)) invalid(field, "must be finite");
}

inline void require_positive(std::string_view field, double x) {
  require_finite(field, x);
  if (!(x > 0.0)) invalid(field, "must be > 0, got " + format_number(x));
}

inline void require_nonnegative(std::string_view field, double x) {
  require_finite(field, x);
  if (!(x >= 0.0)) invalid(field, "must be >= 0, got " + format_number(x));
}

inline void require_closed(std::string_view field, double x, double lo, double hi) {
  require_finite(field, x);
  if (!(x >= lo && x <= hi)) {
    invalid(field, "must be in [" + format_number(lo) + ", " + format_number(hi) +
                       "], got " + format_number(x));
  }
}

inline void require_open(std::string_view field, double x, double lo, double hi) {
  require_finite(field, x);
  if (!(x > lo && x < hi)) {
    invalid(field, "must be in (" + format_number(lo) + ", " + format_number(hi) +
                       "), got " + format_number(x));
  }
}

}  // namespace detail

// Throws ConfigError naming the first offending field.
inline void validate(const SimConfig& c) {
  using namespace detail;
  if (c.n_buildings < 1) invalid("n_buildings", "must be >= 1");
  if (c.episode_days < 1) invalid("episode_days", "must be >= 1");
  if (c.steps_per_day != kHoursPerDay) invalid("steps_per_day", "must be 24");
  require_positive("retail_rate", c.retail_rate);
  require_positive("credit_max", c.credit_max);
  require_closed("feedback_gamma", c.feedback_gamma, 0.0, 1.0);
  if (c.day_of_year > 364) invalid("day_of_year", "must be <= 364 (negative = random)");

  const auto& p = c.price;
  require_positive("price.tou_offpeak", p.tou_offpeak);
  require_positive("price.tou_shoulder", p.tou_shoulder);
  require_positive("price.tou_peak", p.tou_peak);
  if ((p.peak_hours & p.offpeak_hours).any()) {
    invalid("price.peak_hours", "overlaps price.offpeak_hours");
  }
  require_open("price.rho", p.rho, 0.0, 1.0);
  require_nonnegative("price.sigma_eps", p.sigma_eps);
  for (double m : p.het_multipliers) {
    require_finite("price.het_multipliers", m);
    if (m < 1.0) invalid("price.het_multipliers", "all multipliers must be >= 1");
  }
  require_closed("price.spike_entry_base", p.spike_entry_base, 0.0, 1.0);
  require_nonnegative("price.peak_entry_multiplier", p.peak_entry_multiplier);
  require_nonnegative("price.temp_spike_boost", p.temp_spike_boost);
  require_finite("price.spike_temp_hi", p.spike_temp_hi);
  require_finite("price.spike_temp_lo", p.spike_temp_lo);
  if (!(p.spike_exit_prob > 0.0 && p.spike_exit_prob <= 1.0)) {
    invalid("price.spike_exit_prob", "must be in (0, 1], got " + format_number(p.spike_exit_prob));
  }
  require_finite("price.spike_lognormal_mu", p.spike_lognormal_mu);
  require_nonnegative("price.spike_lognormal_sigma", p.spike_lognormal_sigma);
  require_finite("price.price_floor", p.price_floor);
  require_finite("price.price_cap", p.price_cap);
  if (!(p.price_floor < p.price_cap)) invalid("price.price_floor", "must be < price.price_cap");
  require_nonnegative("price.elasticity_lambda", p.elasticity_lambda);
  require_closed("price.ewma_alpha", p.ewma_alpha, 0.0, 1.0);

  const auto& cu = c.customer;
  if (cu.archetypes.empty()) invalid("customer.archetypes", "at least one archetype required");
  double total = 0.0;
  for (const auto& a : cu.archetypes) {
    require_closed("customer.archetypes.proportion", a.proportion, 0.0, 1.0);
    require_open("customer.archetypes.base_accept", a.base_accept, 0.0, 1.0);
    require_open("customer.archetypes.reduction_mean", a.reduction_mean, 0.0, 1.0);
    require_nonnegative("customer.archetypes.sensitivity_kappa", a.sensitivity_kappa);
    total += a.proportion;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    invalid("customer.archetypes", "proportions sum to " + format_number(total) +
                                       ", expected 1");
  }
  require_nonnegative("customer.credit_midpoint", cu.credit_midpoint);
  require_nonnegative("customer.sensitivity_scale", cu.sensitivity_scale);
  require_open("customer.fatigue_floor", cu.fatigue_floor, 0.0, 1.0);
  require_nonnegative("customer.fatigue_decay", cu.fatigue_decay);
  require_nonnegative("customer.fatigue_recovery", cu.fatigue_recovery);
  require_nonnegative("customer.reduction_std_ratio", cu.reduction_std_ratio);
  require_open("customer.reduction_cap", cu.reduction_cap, 0.0, 1.0);

  const auto& s = c.stress;
  require_finite("stress.demand_threshold", s.demand_threshold);
  require_positive("stress.demand_slope", s.demand_slope);
  require_finite("stress.price_threshold", s.price_threshold);
  require_positive("stress.price_slope", s.price_slope);
  require_finite("stress.thermal_hi", s.thermal_hi);
  require_finite("stress.thermal_lo", s.thermal_lo);
  if (!(s.thermal_lo <= s.thermal_hi)) invalid("stress.thermal_lo", "must be <= stress.thermal_hi");
  require_positive("stress.thermal_ramp", s.thermal_ramp);
  require_nonnegative("stress.w_demand", s.w_demand);
  require_nonnegative("stress.w_price", s.w_price);
  require_nonnegative("stress.w_thermal", s.w_thermal);

  const auto& b = c.budget;
  require_nonnegative("budget.mu", b.mu);
  require_nonnegative("budget.sigma", b.sigma);
  require_closed("budget.rollover", b.rollover, 0.0, 1.0);
  require_nonnegative("budget.seasonal_base", b.seasonal_base);
  require_nonnegative("budget.seasonal_amp", b.seasonal_amp);

  const auto& r = c.reward;
  require_finite("reward.w_revenue", r.w_revenue);
  require_finite("reward.w_cost", r.w_cost);
  require_finite("reward.w_stress", r.w_stress);
  require_finite("reward.w_risk", r.w_risk);
  require_finite("reward.scale", r.scale);
  try {
    validate_risk_spec(r.risk);
  } catch (const std::exception& e) {
    invalid("reward.risk", e.what());
  }

  const auto& d = c.demand;
  if (d.mode == DemandMode::kCsvReplay &&
      (d.profile_path.empty() || d.weather_path.empty())) {
    invalid("demand.profile_path", "csv replay needs profile_path and weather_path");
  }
  require_positive("demand.load_scale", d.load_scale);
  require_nonnegative("demand.scale_lo", d.scale_lo);
  if (!(d.scale_lo <= d.scale_hi)) invalid("demand.scale_lo", "must be <= demand.scale_hi");
  require_nonnegative("demand.hvac_lo", d.hvac_lo);
  if (!(d.hvac_lo <= d.hvac_hi)) invalid("demand.hvac_lo", "must be <= demand.hvac_hi");
  require_nonnegative("demand.noise_sigma", d.noise_sigma);
  require_nonnegative("demand.temp_noise_sigma", d.temp_noise_sigma);
  require_closed("demand.reuse_jitter", d.reuse_jitter, 0.0, 1.0);
}

enum class PresetName { kDefault, kUriAnalog, kPortfolio500 };

inline PresetName parse_preset_name(std::string_view name) {
  if (name == "default") return PresetName::kDefault;
  if (name == "uri_analog") return PresetName::kUriAnalog;
  if (name == "portfolio500") return PresetName::kPortfolio500;
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected default, uri_analog or portfolio500)");
}

inline SimConfig preset(PresetName name) {
  SimConfig c;
  switch (name) {
    case PresetName::kDefault:
      break;
    case PresetName::kUriAnalog:
      c.price.spike_entry_base = 0.08;
      c.price.temp_spike_boost = 0.15;
      c.episode_days = 7;
      break;
    case PresetName::kPortfolio500:
      c.demand.mode = DemandMode::kSynthetic;
      c.n_buildings = 500;
      c.stress.demand_threshold = 10000.0;
      break;
  }
  return c;
}

inline SimConfig preset(std::string_view name) { return preset(parse_preset_name(name)); }

}  // namespace drsim
