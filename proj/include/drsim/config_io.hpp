#pragma once

// TOML persistence for SimConfig.
//
// Layout: top-level scalars, then one table per subsystem ([price],
// [customer], [stress], [budget], [reward], [demand]) and the archetype list
// as [[customer.archetypes]]. Every key is optional; missing keys keep the
// value of the base preset. Unknown keys are rejected.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <toml.hpp>

#include "drsim/config.hpp"

namespace drsim {

inline std::string_view to_string(DemandMode m) {
  return m == DemandMode::kSynthetic ? "synthetic" : "csv_replay";
}

inline std::string_view to_string(AcceptanceForm f) {
  return f == AcceptanceForm::kIncreasing ? "increasing" : "literal";
}

namespace detail {

// Every scalar field of SimConfig, as (section, key, member).
template <typename Config, typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("", "n_buildings", c.n_buildings);
  v("", "episode_days", c.episode_days);
  v("", "steps_per_day", c.steps_per_day);
  v("", "retail_rate", c.retail_rate);
  v("", "credit_max", c.credit_max);
  v("", "feedback_gamma", c.feedback_gamma);
  v("", "day_of_year", c.day_of_year);
  v("", "seed", c.seed);

  auto& p = c.price;
  v("price", "tou_offpeak", p.tou_offpeak);
  v("price", "tou_shoulder", p.tou_shoulder);
  v("price", "tou_peak", p.tou_peak);
  v("price", "peak_hours", p.peak_hours);
  v("price", "offpeak_hours", p.offpeak_hours);
  v("price", "rho", p.rho);
  v("price", "sigma_eps", p.sigma_eps);
  v("price", "het_multipliers", p.het_multipliers);
  v("price", "spike_entry_base", p.spike_entry_base);
  v("price", "peak_entry_multiplier", p.peak_entry_multiplier);
  v("price", "temp_spike_boost", p.temp_spike_boost);
  v("price", "spike_temp_hi", p.spike_temp_hi);
  v("price", "spike_temp_lo", p.spike_temp_lo);
  v("price", "spike_exit_prob", p.spike_exit_prob);
  v("price", "spike_lognormal_mu", p.spike_lognormal_mu);
  v("price", "spike_lognormal_sigma", p.spike_lognormal_sigma);
  v("price", "spike_resample_hourly", p.spike_resample_hourly);
  v("price", "price_cap", p.price_cap);
  v("price", "price_floor", p.price_floor);
  v("price", "elasticity_lambda", p.elasticity_lambda);
  v("price", "ewma_alpha", p.ewma_alpha);

  auto& cu = c.customer;
  v("customer", "credit_midpoint", cu.credit_midpoint);
  v("customer", "sensitivity_scale", cu.sensitivity_scale);
  v("customer", "acceptance_form", cu.acceptance_form);
  v("customer", "fatigue_decay", cu.fatigue_decay);
  v("customer", "fatigue_recovery", cu.fatigue_recovery);
  v("customer", "fatigue_floor", cu.fatigue_floor);
  v("customer", "reduction_std_ratio", cu.reduction_std_ratio);
  v("customer", "reduction_cap", cu.reduction_cap);

  auto& s = c.stress;
  v("stress", "demand_threshold", s.demand_threshold);
  v("stress", "demand_slope", s.demand_slope);
  v("stress", "price_threshold", s.price_threshold);
  v("stress", "price_slope", s.price_slope);
  v("stress", "thermal_hi", s.thermal_hi);
  v("stress", "thermal_lo", s.thermal_lo);
  v("stress", "thermal_ramp", s.thermal_ramp);
  v("stress", "w_demand", s.w_demand);
  v("stress", "w_price", s.w_price);
  v("stress", "w_thermal", s.w_thermal);

  auto& b = c.budget;
  v("budget", "mu", b.mu);
  v("budget", "sigma", b.sigma);
  v("budget", "rollover", b.rollover);
  v("budget", "seasonal_base", b.seasonal_base);
  v("budget", "seasonal_amp", b.seasonal_amp);

  auto& r = c.reward;
  v("reward", "w_revenue", r.w_revenue);
  v("reward", "w_cost", r.w_cost);
  v("reward", "w_stress", r.w_stress);
  v("reward", "w_risk", r.w_risk);
  v("reward", "scale", r.scale);
  v("reward", "risk", r.risk);

  auto& d = c.demand;
  v("demand", "source", d.mode);
  v("demand", "profile_path", d.profile_path);
  v("demand", "weather_path", d.weather_path);
  v("demand", "load_scale", d.load_scale);
  v("demand", "scale_lo", d.scale_lo);
  v("demand", "scale_hi", d.scale_hi);
  v("demand", "hvac_lo", d.hvac_lo);
  v("demand", "hvac_hi", d.hvac_hi);
  v("demand", "noise_sigma", d.noise_sigma);
  v("demand", "temp_noise_sigma", d.temp_noise_sigma);
  v("demand", "reuse_jitter", d.reuse_jitter);
}

template <typename Visitor>
void visit_archetype_fields(ArchetypeParams& a, Visitor&& v) {
  v("name", a.name);
  v("proportion", a.proportion);
  v("base_accept", a.base_accept);
  v("reduction_mean", a.reduction_mean);
  v("sensitivity_kappa", a.sensitivity_kappa);
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

inline std::string emit(double x) { return format_number(x); }
inline std::string emit(int x) { return std::to_string(x); }
inline std::string emit(std::uint64_t x) {
  return std::to_string(static_cast<std::int64_t>(x));  // TOML integers are signed
}
inline std::string emit(bool x) { return x ? "true" : "false"; }
inline std::string emit(const std::string& x) { return quote(x); }
inline std::string emit(DemandMode x) { return quote(to_string(x)); }
inline std::string emit(AcceptanceForm x) { return quote(to_string(x)); }
inline std::string emit(const HourSet& x) {
  std::string out = "[";
  for (int h = 0; h < kHoursPerDay; ++h) {
    if (!x.test(static_cast<std::size_t>(h))) continue;
    if (out.size() > 1) out += ", ";
    out += std::to_string(h);
  }
  return out + "]";
}
inline std::string emit(const std::array<double, kHoursPerDay>& x) {
  std::string out = "[";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out += ", ";
    out += format_number(x[i]);
  }
  return out + "]";
}

[[noreturn]] inline void type_error(std::string_view path, std::string_view expected) {
  throw ConfigError("config field '" + std::string(path) + "': expected " + std::string(expected));
}

inline void read(const toml::node& n, std::string_view path, double& out) {
  if (auto v = n.as_floating_point()) {
    out = v->get();
  } else if (auto i = n.as_integer()) {
    out = static_cast<double>(i->get());
  } else {
    type_error(path, "a number");
  }
}

inline void read(const toml::node& n, std::string_view path, int& out) {
  auto v = n.as_integer();
  if (!v) type_error(path, "an integer");
  out = static_cast<int>(v->get());
}

inline void read(const toml::node& n, std::string_view path, std::uint64_t& out) {
  auto v = n.as_integer();
  if (!v) type_error(path, "an integer");
  out = static_cast<std::uint64_t>(v->get());
}

inline void read(const toml::node& n, std::string_view path, bool& out) {
  auto v = n.as_boolean();
  if (!v) type_error(path, "a boolean");
  out = v->get();
}

inline void read(const toml::node& n, std::string_view path, std::string& out) {
  auto v = n.as_string();
  if (!v) type_error(path, "a string");
  out = v->get();
}

inline void read(const toml::node& n, std::string_view path, DemandMode& out) {
  std::string s;
  read(n, path, s);
  if (s == "synthetic") {
    out = DemandMode::kSynthetic;
  } else if (s == "csv_replay" || s == "csv") {
    out = DemandMode::kCsvReplay;
  } else {
    type_error(path, "\"synthetic\" or \"csv_replay\"");
  }
}

inline void read(const toml::node& n, std::string_view path, AcceptanceForm& out) {
  std::string s;
  read(n, path, s);
  if (s == "increasing") {
    out = AcceptanceForm::kIncreasing;
  } else if (s == "literal") {
    out = AcceptanceForm::kLiteral;
  } else {
    type_error(path, "\"increasing\" or \"literal\"");
  }
}

inline void read(const toml::node& n, std::string_view path, HourSet& out) {
  auto arr = n.as_array();
  if (!arr) type_error(path, "an array of hours");
  HourSet set;
  for (const auto& e : *arr) {
    auto h = e.as_integer();
    if (!h || h->get() < 0 || h->get() > 23) type_error(path, "hours in 0..23");
    set.set(static_cast<std::size_t>(h->get()));
  }
  out = set;
}

inline void read(const toml::node& n, std::string_view path,
                 std::array<double, kHoursPerDay>& out) {
  auto arr = n.as_array();
  if (!arr || arr->size() != out.size()) type_error(path, "an array of 24 numbers");
  for (std::size_t i = 0; i < out.size(); ++i) read(*arr->get(i), path, out[i]);
}

inline std::string join_path(std::string_view section, std::string_view key) {
  return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

inline bool is_known_key(std::string_view section, std::string_view key) {
  bool found = false;
  SimConfig probe;
  visit_fields(probe, [&](std::string_view s, std::string_view k, auto&) {
    if (s == section && k == key) found = true;
  });
  return found;
}

inline bool is_known_archetype_key(std::string_view key) {
  bool found = false;
  ArchetypeParams probe;
  visit_archetype_fields(probe, [&](std::string_view k, auto&) {
    if (k == key) found = true;
  });
  return found;
}

inline void reject_unknown_keys(const toml::table& root) {
  static constexpr std::string_view kSections[] = {"price",  "customer", "stress",
                                                   "budget", "reward",   "demand"};
  for (const auto& [key, node] : root) {
    const std::string_view k = key.str();
    if (std::find(std::begin(kSections), std::end(kSections), k) != std::end(kSections)) {
      auto sub = node.as_table();
      if (!sub) type_error(k, "a table");
      for (const auto& [skey, snode] : *sub) {
        if (k == "customer" && skey.str() == "archetypes") continue;
        if (!is_known_key(k, skey.str())) {
          throw ConfigError("unknown config key '" + join_path(k, skey.str()) + "'");
        }
      }
    } else if (!is_known_key("", k)) {
      throw ConfigError("unknown config key '" + std::string(k) + "'");
    }
  }
}

}  // namespace detail

// Applies the values present in `root` on top of `base`, then validates.
inline SimConfig from_toml(const toml::table& root, SimConfig base = {}) {
  detail::reject_unknown_keys(root);
  detail::visit_fields(base, [&](std::string_view section, std::string_view key, auto& member) {
    const toml::node* node = nullptr;
    if (section.empty()) {
      node = root.get(key);
    } else if (auto sub = root.get_as<toml::table>(section)) {
      node = sub->get(key);
    }
    if (node) detail::read(*node, detail::join_path(section, key), member);
  });

  if (auto cust = root.get_as<toml::table>("customer")) {
    if (auto node = cust->get("archetypes")) {
      auto arr = node->as_array();
      if (!arr) detail::type_error("customer.archetypes", "an array of tables");
      std::vector<ArchetypeParams> archetypes;
      for (std::size_t i = 0; i < arr->size(); ++i) {
        auto tbl = arr->get(i)->as_table();
        if (!tbl) detail::type_error("customer.archetypes", "an array of tables");
        // Entries overlay the base archetype at the same index, if any.
        ArchetypeParams a = i < base.customer.archetypes.size() ? base.customer.archetypes[i]
                                                                : ArchetypeParams{};
        for (const auto& [k, v] : *tbl) {
          if (!detail::is_known_archetype_key(k.str())) {
            throw ConfigError("unknown config key 'customer.archetypes." + std::string(k.str()) + "'");
          }
        }
        detail::visit_archetype_fields(a, [&](std::string_view key, auto& member) {
          if (auto n = tbl->get(key)) {
            detail::read(*n, "customer.archetypes." + std::string(key), member);
          }
        });
        archetypes.push_back(std::move(a));
      }
      base.customer.archetypes = std::move(archetypes);
    }
  }
  validate(base);
  return base;
}

inline std::string to_toml_string(const SimConfig& config) {
  SimConfig c = config;
  std::ostringstream out;
  std::string current = "";
  detail::visit_fields(c, [&](std::string_view section, std::string_view key, auto& member) {
    if (section != current) {
      out << "\n[" << section << "]\n";
      current = std::string(section);
    }
    out << key << " = " << detail::emit(member) << "\n";
  });
  for (auto& a : c.customer.archetypes) {
    out << "\n[[customer.archetypes]]\n";
    detail::visit_archetype_fields(a, [&](std::string_view key, auto& member) {
      out << key << " = " << detail::emit(member) << "\n";
    });
  }
  return out.str();
}

inline toml::table parse_toml_text(std::string_view text, std::string_view source = "config") {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error in " << source << " at " << e.source().begin << ": "
        << e.description();
    throw ConfigError(msg.str());
  }
}

namespace detail {

inline toml::node* child(toml::node& parent, std::string_view seg, bool create) {
  if (auto tbl = parent.as_table()) {
    if (auto n = tbl->get(seg)) return n;
    if (!create) return nullptr;
    tbl->insert(seg, toml::table{});
    return tbl->get(seg);
  }
  if (auto arr = parent.as_array()) {
    std::size_t idx = 0;
    auto [p, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
    if (ec != std::errc{} || p != seg.data() + seg.size()) return nullptr;
    if (idx >= arr->size()) return nullptr;
    return arr->get(idx);
  }
  return nullptr;
}

// Parses "a.b.c=value". The value is read as a TOML value when possible and
// as a bare string otherwise.
inline void apply_override(toml::table& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string_view path = assignment.substr(0, eq);
  const std::string_view raw = assignment.substr(eq + 1);

  toml::table holder;
  try {
    holder = toml::parse("v = " + std::string(raw));
  } catch (const toml::parse_error&) {
    holder = toml::table{};
    holder.insert("v", std::string(raw));
  }

  std::vector<std::string_view> segs;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    segs.push_back(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }

  toml::node* node = &root;
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    node = child(*node, segs[i], true);
    if (!node) throw ConfigError("override path '" + std::string(path) + "' does not exist");
  }
  const std::string_view leaf = segs.back();
  if (auto tbl = node->as_table()) {
    tbl->insert_or_assign(leaf, *holder.get("v"));
  } else if (auto arr = node->as_array()) {
    auto target = child(*node, leaf, false);
    if (!target) throw ConfigError("override path '" + std::string(path) + "' does not exist");
    const std::size_t idx = static_cast<std::size_t>(target - arr->get(0));
    arr->replace(arr->cbegin() + static_cast<std::ptrdiff_t>(idx), *holder.get("v"));
  } else {
    throw ConfigError("override path '" + std::string(path) + "' does not exist");
  }
}

}  // namespace detail

namespace detail {

inline void merge_into(toml::table& dst, const toml::table& src) {
  for (const auto& [key, node] : src) {
    auto d = dst.get_as<toml::table>(key.str());
    auto s = node.as_table();
    if (d && s) {
      merge_into(*d, *s);
    } else {
      dst.insert_or_assign(key.str(), node);
    }
  }
}

}  // namespace detail

// Loads a configuration: base preset, then the TOML file (if any), then the
// DRSIM_SEED environment variable, then `overrides` ("key=value"), validated.
inline SimConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides = {},
                             std::string_view base_preset = "default") {
  const SimConfig base = preset(base_preset);
  toml::table root = parse_toml_text(to_toml_string(base), "preset");
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + path->string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const toml::table file = parse_toml_text(buf.str(), path->string());
    detail::reject_unknown_keys(file);
    detail::merge_into(root, file);
  }
  if (const char* env = std::getenv("DRSIM_SEED"); env && *env) {
    std::int64_t seed = 0;
    const std::string_view s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw ConfigError("DRSIM_SEED='" + std::string(s) + "' is not an integer");
    }
    root.insert_or_assign("seed", seed);
  }
  for (const auto& o : overrides) detail::apply_override(root, o);
  return from_toml(root, base);
}

}  // namespace drsim
