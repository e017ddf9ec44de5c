#pragma once

#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include "drsim/environment.hpp"
#include "drsim/records.hpp"

namespace drsim {

// Stand-in for an unbounded side in declared spaces (float32 max).
inline constexpr double kUnbounded = static_cast<double>(std::numeric_limits<float>::max());

struct ObservationBounds {
  Observation low{};
  Observation high{};
};

inline ObservationBounds observation_bounds(const SimConfig& c) {
  ObservationBounds b;
  b.high.fill(kUnbounded);
  auto set = [&](std::size_t i, double lo, double hi) {
    b.low[i] = lo;
    b.high[i] = hi;
  };
  set(obs::kHour, 0, kHoursPerDay - 1);
  set(obs::kDayOfWeek, 0, kDaysPerWeek - 1);
  set(obs::kPrice, c.price.price_floor, c.price.price_cap);
  for (std::size_t k = 0; k < kForecastHorizon; ++k) {
    set(obs::kForecast + k, c.price.price_floor, c.price.price_cap);
  }
  set(obs::kTemperature, kMinTempC, kMaxTempC);
  set(obs::kDemandStress, 0, 1);
  set(obs::kPriceStress, 0, 1);
  set(obs::kLastCredit, 0, c.credit_max);
  set(obs::kDayInEpisode, 0, c.episode_days);
  return b;
}

inline Json spec_json(const SimConfig& c) {
  const ObservationBounds b = observation_bounds(c);
  return Json{{"action", {{"low", 0.0}, {"high", c.credit_max}, {"shape", {1}}}},
              {"observation", {{"shape", {kObservationSize}}, {"low", to_json(b.low)}, {"high", to_json(b.high)}}},
              {"episode_steps", c.episode_steps()}};
}

namespace detail {

inline double action_value(const Json& req) {
  auto it = req.find("action");
  if (it == req.end()) throw std::invalid_argument("step needs an 'action'");
  const Json* v = &*it;
  if (v->is_array()) {
    if (v->size() != 1) throw std::invalid_argument("'action' array must have exactly one element");
    v = &(*v)[0];
  }
  if (!v->is_number()) throw std::invalid_argument("'action' must be a number");
  return v->get<double>();
}

}  // namespace detail

// Newline-delimited JSON request/response loop. Returns when "close" is
// received or input ends.
inline void serve(std::istream& in, std::ostream& out, const SimConfig& config) {
  std::optional<Environment> env;
  std::string error;
  try {
    env.emplace(config);
  } catch (const std::exception& e) {
    error = e.what();
  }
  std::string line;
  int episode = -1;
  auto reply = [&](const Json& j) {
    out << j.dump() << '\n';
    out.flush();
  };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json req = Json::parse(line);
      if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string()) {
        throw std::invalid_argument("request must be an object with a string 'cmd'");
      }
      const std::string cmd = req["cmd"].get<std::string>();
      if (cmd == "close") {
        reply(Json{{"closed", true}});
        return;
      }
      if (cmd == "spec") {
        reply(spec_json(config));
        continue;
      }
      if (!env) throw std::runtime_error(error);
      if (cmd == "reset") {
        std::uint64_t seed = config.seed;
        if (auto it = req.find("seed"); it != req.end() && !it->is_null()) {
          if (!it->is_number_integer()) throw std::invalid_argument("'seed' must be an integer");
          seed = it->is_number_unsigned() ? it->get<std::uint64_t>()
                                          : static_cast<std::uint64_t>(it->get<std::int64_t>());
        }
        const Observation o = env->reset(seed);
        ++episode;
        const EnvState& s = env->state();
        reply(Json{{"obs", to_json(o)},
                   {"info",
                    {{"seed", seed},
                     {"initial_budget", s.initial_budget},
                     {"start_day_of_year", s.start_day_of_year}}}});
      } else if (cmd == "step") {
        StepResult r = env->step(detail::action_value(req));
        r.record.episode = episode;
        reply(Json{{"obs", to_json(r.obs)},
                   {"reward", r.reward},
                   {"terminated", r.terminated},
                   {"truncated", r.truncated},
                   {"info", to_json(r.record)}});
      } else {
        throw std::invalid_argument("unknown cmd '" + cmd + "'");
      }
    } catch (const std::exception& e) {
      reply(Json{{"error", e.what()}});
    }
  }
}

}  // namespace drsim
