#pragma once

#include <json.hpp>

#include "drsim/environment.hpp"

namespace drsim {

using Json = nlohmann::ordered_json;

inline Json to_json(const StressReadout& s) {
  return Json{{"demand", s.demand}, {"price", s.price}, {"thermal", s.thermal}, {"overall", s.overall}};
}

inline Json to_json(const RewardBreakdown& r) {
  return Json{{"revenue_term", r.revenue_term},
              {"cost_term", r.cost_term},
              {"stress_term", r.stress_term},
              {"risk_term", r.risk_term},
              {"total", r.total}};
}

inline Json to_json(const StepRecord& r) {
  return Json{{"episode", r.episode},
              {"t", r.t},
              {"hour", r.hour},
              {"day_in_episode", r.day_in_episode},
              {"temperature", r.temperature},
              {"price", r.price},
              {"credit_requested", r.credit_requested},
              {"credit_effective", r.credit_effective},
              {"aggregate_demand", r.aggregate_demand},
              {"n_accepted", r.n_accepted},
              {"reduction_total_kwh", r.reduction_total_kwh},
              {"revenue", r.revenue},
              {"consumer_cost", r.consumer_cost},
              {"payout", r.payout},
              {"bill_increment_total", r.bill_increment_total},
              {"budget_today", r.budget_today},
              {"budget_remaining", r.budget_remaining},
              {"stress", to_json(r.stress)},
              {"delta_risk", r.delta_risk},
              {"reward", to_json(r.reward)},
              {"cvar_running", r.cvar_running}};
}

template <std::size_t N>
Json to_json(const std::array<double, N>& a) {
  Json out = Json::array();
  for (double x : a) out.push_back(x);
  return out;
}

}  // namespace drsim
