#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>

#include "drsim/config.hpp"
#include "drsim/numeric.hpp"
#include "drsim/rng.hpp"

namespace drsim {

struct CustomerState {
  std::size_t archetype = 0;
  double fatigue = 1.0;
};

struct Response {
  bool accepted = false;
  double delta = 0.0;          // fractional reduction of the raw baseline
  double reduction_kwh = 0.0;  // delta * baseline

  bool operator==(const Response&) const = default;
};

// Probability that a customer accepts a credit offer ($/kWh).
inline double acceptance_probability(const ArchetypeParams& a, double fatigue, double credit,
                                     const CustomerParams& p) {
  if (!(credit >= 0.0)) throw std::domain_error("credit must be >= 0");
  if (!(fatigue >= p.fatigue_floor - 1e-12 && fatigue <= 1.0 + 1e-12)) {
    throw std::domain_error("fatigue outside [fatigue_floor, 1]");
  }
  const double x = a.sensitivity_kappa * p.sensitivity_scale * (credit - p.credit_midpoint);
  if (p.acceptance_form == AcceptanceForm::kLiteral) {
    return a.base_accept * fatigue * logistic(-x);
  }
  return std::min(1.0, a.base_accept * fatigue * 2.0 * logistic(x));
}

// Builds an accepted response from a raw reduction-fraction sample.
inline Response accepted_response(double sampled_fraction, double baseline_kwh,
                                  const CustomerParams& p) {
  const double delta = std::clamp(sampled_fraction, 0.0, p.reduction_cap);
  return {true, delta, delta * baseline_kwh};
}

// A zero credit is no event: no draws are taken. Otherwise one uniform
// decides acceptance and, if accepted, one normal sets the reduction.
inline Response sample_response(const CustomerState& state, double credit, double baseline_kwh,
                                RandomStream& rng, const CustomerParams& p) {
  if (credit <= 0.0) return {};
  const ArchetypeParams& a = p.archetypes.at(state.archetype);
  const double u = rng.uniform();
  if (!(u < acceptance_probability(a, state.fatigue, credit, p))) return {};
  const double sample = rng.normal(a.reduction_mean, p.reduction_std_ratio * a.reduction_mean);
  return accepted_response(sample, baseline_kwh, p);
}

inline double update_fatigue(double fatigue, bool accepted, const CustomerParams& p) {
  if (accepted) return std::max(p.fatigue_floor, fatigue - p.fatigue_decay);
  return std::min(1.0, fatigue + p.fatigue_recovery);
}

// Archetype index for a uniform draw u in [0, 1), by cumulative proportion.
inline std::size_t archetype_for(double u, const CustomerParams& p) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k < p.archetypes.size(); ++k) {
    cumulative += p.archetypes[k].proportion;
    if (u < cumulative) return k;
  }
  return p.archetypes.size() - 1;
}

}  // namespace drsim
