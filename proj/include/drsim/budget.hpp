#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "drsim/config.hpp"
#include "drsim/rng.hpp"

namespace drsim {

inline constexpr double kDaysPerYear = 365.25;

// Seasonal budget factor: highest midwinter/midsummer, lowest spring/fall.
// Averages seasonal_base + seasonal_amp / 2 over a year (1.0 by default).
inline double seasonal_factor(double day_of_year, const BudgetParams& p) {
  const double c = std::cos(2.0 * std::numbers::pi * day_of_year / kDaysPerYear);
  return p.seasonal_base + p.seasonal_amp * c * c;
}

// Budget from an already-drawn Normal(mu, sigma) sample.
inline double daily_budget_from_draw(double day_of_year, double normal_draw,
                                     double unspent_prev, const BudgetParams& p) {
  if (unspent_prev < 0.0) throw std::invalid_argument("unspent budget must be >= 0");
  return std::max(0.0, seasonal_factor(day_of_year, p) * normal_draw) +
         p.rollover * unspent_prev;
}

inline double draw_daily_budget(double day_of_year, double unspent_prev, RandomStream& rng,
                                const BudgetParams& p) {
  return daily_budget_from_draw(day_of_year, rng.normal(p.mu, p.sigma), unspent_prev, p);
}

// Pre-caps a credit so that paying it on the reference demand fits the
// remaining budget.
inline double cap_credit(double credit, double remaining, double reference_demand_kwh) {
  constexpr double kMinDemand = 1e-6;
  return std::min(credit, remaining / std::max(kMinDemand, reference_demand_kwh));
}

struct BudgetLedger {
  double today_budget = 0.0;
  double remaining = 0.0;
  double unspent_carry = 0.0;  // carry included in today_budget
  int day_of_year = 0;

  double spent_today() const { return today_budget - remaining; }
};

struct Payout {
  double credit = 0.0;  // effective credit after any rescale
  double amount = 0.0;  // dollars
};

// Scales the credit down so that the payout equals the remaining budget
// exactly when it would otherwise overshoot.
inline Payout fit_payout(double credit, double eligible_kwh, double remaining) {
  const double amount = credit * eligible_kwh;
  if (amount <= remaining) return {credit, amount};
  return {credit * (remaining / amount), remaining};
}

inline BudgetLedger charge(BudgetLedger ledger, double payout) {
  if (payout < 0.0) throw std::invalid_argument("payout must be >= 0");
  if (payout > ledger.remaining) throw std::logic_error("payout exceeds remaining budget");
  ledger.remaining = std::max(0.0, ledger.remaining - payout);
  return ledger;
}

inline BudgetLedger open_day(int day_of_year, double budget, double carry) {
  return {budget, budget, carry, day_of_year};
}

}  // namespace drsim
