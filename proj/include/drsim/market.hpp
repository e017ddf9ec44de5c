#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "drsim/config.hpp"
#include "drsim/rng.hpp"

namespace drsim {

enum class Regime { kNormal, kSpikeStorm };

struct MarketState {
  double xi = 0.0;              // AR(1) residual, $/kWh
  Regime regime = Regime::kNormal;
  double spike = 0.0;           // additive storm component, $/kWh; 0 when normal
  double reduction_ewma = 0.0;  // kWh
  double last_price = 0.0;

  bool operator==(const MarketState&) const = default;
};

inline constexpr int kForecastHorizon = 4;
using PriceForecast = std::array<double, kForecastHorizon>;

inline void check_hour(int hour) {
  if (hour < 0 || hour >= kHoursPerDay) throw std::out_of_range("hour must be in [0, 23]");
}

inline double tou_base(int hour, const PriceParams& p) {
  check_hour(hour);
  const auto h = static_cast<std::size_t>(hour);
  if (p.peak_hours.test(h)) return p.tou_peak;
  if (p.offpeak_hours.test(h)) return p.tou_offpeak;
  return p.tou_shoulder;
}

inline double spike_entry_probability(int hour, double temp_c, const PriceParams& p) {
  check_hour(hour);
  const bool peak = p.peak_hours.test(static_cast<std::size_t>(hour));
  const bool extreme = temp_c > p.spike_temp_hi || temp_c < p.spike_temp_lo;
  const double prob = p.spike_entry_base * (peak ? p.peak_entry_multiplier : 1.0) *
                      (1.0 + (extreme ? p.temp_spike_boost : 0.0));
  return std::clamp(prob, 0.0, 1.0);
}

inline double clamp_price(double price, const PriceParams& p) {
  return std::clamp(price, p.price_floor, p.price_cap);
}

// One market hour from explicit shocks: noise_z ~ N(0,1) drives the AR(1)
// innovation, regime_u ~ U[0,1) the regime transition, and magnitude_z() is
// called (once, only when a new storm magnitude is needed) for the
// log-normal spike size.
template <typename MagnitudeSource>
MarketState step_market(const MarketState& s, int hour, double temp_c, double noise_z,
                        double regime_u, MagnitudeSource&& magnitude_z, const PriceParams& p) {
  check_hour(hour);
  MarketState next = s;
  next.xi = p.rho * s.xi + p.sigma_eps * p.het_multipliers[static_cast<std::size_t>(hour)] * noise_z;

  bool new_magnitude = false;
  if (s.regime == Regime::kNormal) {
    if (regime_u < spike_entry_probability(hour, temp_c, p)) {
      next.regime = Regime::kSpikeStorm;
      new_magnitude = true;
    }
  } else if (regime_u < p.spike_exit_prob) {
    next.regime = Regime::kNormal;
  } else {
    new_magnitude = p.spike_resample_hourly;
  }

  if (next.regime == Regime::kNormal) {
    next.spike = 0.0;
  } else if (new_magnitude) {
    next.spike = std::exp(p.spike_lognormal_mu + p.spike_lognormal_sigma * magnitude_z());
  }

  const double raw = tou_base(hour, p) + next.xi + next.spike;
  // Elasticity uses the reduction EWMA as it stood before this hour.
  next.last_price = clamp_price(raw - p.elasticity_lambda * s.reduction_ewma, p);
  return next;
}

// Draw order per call: innovation normal, regime uniform, then the storm
// magnitude normal if one is needed.
inline MarketState advance_market(const MarketState& s, int hour, double temp_c,
                                  RandomStream& rng, const PriceParams& p) {
  const double z = rng.normal();
  const double u = rng.uniform();
  return step_market(s, hour, temp_c, z, u, [&rng] { return rng.normal(); }, p);
}

inline double update_reduction_ewma(double ewma, double reduction_total_kwh, double alpha) {
  return alpha * ewma + (1.0 - alpha) * reduction_total_kwh;
}

// TOU plus decayed AR(1) residual for the next four hours.
inline PriceForecast price_forecast(const MarketState& s, int hour, const PriceParams& p) {
  check_hour(hour);
  PriceForecast out{};
  double decay = 1.0;
  for (int k = 1; k <= kForecastHorizon; ++k) {
    decay *= p.rho;
    out[static_cast<std::size_t>(k - 1)] =
        clamp_price(tou_base((hour + k) % kHoursPerDay, p) + decay * s.xi, p);
  }
  return out;
}

}  // namespace drsim
