#pragma once

#include <algorithm>

#include "drsim/config.hpp"
#include "drsim/numeric.hpp"

namespace drsim {

struct StressReadout {
  double demand = 0.0;
  double price = 0.0;
  double thermal = 0.0;  // unbounded above
  double overall = 0.0;

  bool operator==(const StressReadout&) const = default;
};

// Grid stress from aggregate demand (kWh), wholesale price ($/kWh) and
// outdoor temperature (deg C).
inline StressReadout stress_indicators(double demand_kwh, double price, double temp_c,
                                       const StressParams& p) {
  StressReadout s;
  s.demand = logistic(p.demand_slope * (demand_kwh - p.demand_threshold));
  s.price = logistic(p.price_slope * (price - p.price_threshold));
  s.thermal = std::max(0.0, (temp_c - p.thermal_hi) / p.thermal_ramp) +
              std::max(0.0, (p.thermal_lo - temp_c) / p.thermal_ramp);
  s.overall = p.w_demand * s.demand + p.w_price * s.price + p.w_thermal * s.thermal;
  return s;
}

}  // namespace drsim
