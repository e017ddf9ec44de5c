#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "drsim/environment.hpp"
#include "drsim/rng.hpp"

namespace drsim {

enum class PolicyKind { kNoCredit, kUniform, kRuleBased, kBudgetAwareRule, kRandom };

struct Policy {
  PolicyKind kind = PolicyKind::kNoCredit;
  double uniform_level = 0.05;
  double stress_threshold = 0.5;
  double high_credit = 0.10;
  double min_budget_fraction = 0.1;
  double credit_max = 0.10;  // upper end of the random policy's range

  bool operator==(const Policy&) const = default;
};

inline constexpr double kDefaultUniformCredit = 0.05;

inline Policy parse_policy(std::string_view spec, double credit_max = 0.10) {
  Policy p;
  p.credit_max = credit_max;
  const auto colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  const std::string_view param =
      colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  auto no_param = [&] {
    if (colon != std::string_view::npos) {
      throw std::invalid_argument("policy '" + std::string(name) + "' takes no parameter");
    }
  };
  if (name == "nocredit") {
    no_param();
    p.kind = PolicyKind::kNoCredit;
  } else if (name == "uniform") {
    p.kind = PolicyKind::kUniform;
    p.uniform_level = kDefaultUniformCredit;
    if (colon != std::string_view::npos) {
      std::size_t used = 0;
      try {
        p.uniform_level = std::stod(std::string(param), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != param.size() || !(p.uniform_level >= 0.0) ||
          p.uniform_level > credit_max) {
        throw std::invalid_argument("bad uniform credit level '" + std::string(param) + "'");
      }
    }
  } else if (name == "rule") {
    no_param();
    p.kind = PolicyKind::kRuleBased;
  } else if (name == "budget-rule") {
    no_param();
    p.kind = PolicyKind::kBudgetAwareRule;
  } else if (name == "random") {
    no_param();
    p.kind = PolicyKind::kRandom;
  } else {
    throw std::invalid_argument("unknown policy '" + std::string(spec) +
                                "' (expected nocredit, uniform[:c], rule, budget-rule, random)");
  }
  return p;
}

inline std::string to_string(const Policy& p) {
  switch (p.kind) {
    case PolicyKind::kNoCredit:
      return "nocredit";
    case PolicyKind::kUniform:
      return "uniform:" + format_number(p.uniform_level);
    case PolicyKind::kRuleBased:
      return "rule";
    case PolicyKind::kBudgetAwareRule:
      return "budget-rule";
    case PolicyKind::kRandom:
      return "random";
  }
  return "?";
}

// Only obs[10] (price stress) and obs[13] (budget remaining) are read. The
// random policy consumes one uniform from rng; the others draw nothing.
inline double act(const Policy& p, std::span<const double> observation, double initial_budget,
                  RandomStream& rng) {
  if (observation.size() != kObservationSize) {
    throw std::invalid_argument("observation must have " + std::to_string(kObservationSize) +
                                " entries, got " + std::to_string(observation.size()));
  }
  const double price_stress = observation[obs::kPriceStress];
  switch (p.kind) {
    case PolicyKind::kNoCredit:
      return 0.0;
    case PolicyKind::kUniform:
      return p.uniform_level;
    case PolicyKind::kRuleBased:
      return price_stress > p.stress_threshold ? p.high_credit : 0.0;
    case PolicyKind::kBudgetAwareRule: {
      if (!(initial_budget > 0.0)) {
        throw std::invalid_argument("budget-aware rule needs a positive initial budget");
      }
      const double beta = observation[obs::kBudgetRemaining] / initial_budget;
      if (price_stress > p.stress_threshold && beta > p.min_budget_fraction) {
        return std::min(p.high_credit * beta, p.credit_max);
      }
      return 0.0;
    }
    case PolicyKind::kRandom:
      return rng.uniform(0.0, p.credit_max);
  }
  return 0.0;
}

}  // namespace drsim
