#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace drsim {

// Number of values in the upper (1 - alpha) tail of n values, at least 1.
inline std::size_t tail_count(std::size_t n, double alpha) {
  const double raw = (1.0 - alpha) * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

// Empirical upper-tail CVaR: mean of the ceil((1 - alpha) * n) largest values.
inline double cvar(std::span<const double> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("cvar: empty value vector");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("cvar: alpha must be in (0, 1)");
  const std::size_t k = tail_count(values.size(), alpha);
  std::vector<double> sorted(values.begin(), values.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k),
                    sorted.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
  return sum / static_cast<double>(k);
}

// A scalar risk functional over a vector of losses (bills).
class RiskMeasure {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  RiskMeasure() : RiskMeasure(none()) {}
  RiskMeasure(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  static RiskMeasure none() { return {"none", nullptr}; }

  static RiskMeasure cvar(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("cvar alpha must be in (0, 1)");
    return {"cvar", [alpha](std::span<const double> v) { return drsim::cvar(v, alpha); }};
  }

  const std::string& name() const { return name_; }
  bool enabled() const { return static_cast<bool>(fn_); }

  double operator()(std::span<const double> values) const {
    if (values.empty()) throw std::invalid_argument("risk measure: empty value vector");
    return fn_ ? fn_(values) : 0.0;
  }

 private:
  std::string name_;
  Fn fn_;
};

// Maps "name" or "name:param" specs to measures. Register custom measures
// before any simulator instance is constructed; lookups are then read-only.
class RiskRegistry {
 public:
  using Factory = std::function<RiskMeasure(std::string_view param)>;

  static RiskRegistry& instance() {
    static RiskRegistry registry;
    return registry;
  }

  void add(std::string name, Factory factory) { factories_[std::move(name)] = std::move(factory); }

  bool contains(std::string_view name) const { return factories_.find(name) != factories_.end(); }

  RiskMeasure make(std::string_view spec) const {
    const auto colon = spec.find(':');
    const std::string_view name = spec.substr(0, colon);
    const std::string_view param =
        colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    auto it = factories_.find(name);
    if (it == factories_.end()) {
      throw std::invalid_argument("unknown risk measure '" + std::string(name) + "'");
    }
    return it->second(param);
  }

 private:
  RiskRegistry() {
    add("none", [](std::string_view param) {
      if (!param.empty()) throw std::invalid_argument("'none' takes no parameter");
      return RiskMeasure::none();
    });
    add("cvar", [](std::string_view param) {
      if (param.empty()) return RiskMeasure::cvar(0.95);
      std::size_t used = 0;
      double alpha = 0.0;
      try {
        alpha = std::stod(std::string(param), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != param.size()) {
        throw std::invalid_argument("bad cvar level '" + std::string(param) + "'");
      }
      return RiskMeasure::cvar(alpha);
    });
  }

  std::map<std::string, Factory, std::less<>> factories_;
};

inline RiskMeasure make_risk_measure(std::string_view spec) {
  return RiskRegistry::instance().make(spec);
}

inline void validate_risk_spec(const std::string& spec) { (void)make_risk_measure(spec); }

struct RiskDelta {
  double delta = 0.0;
  double new_risk = 0.0;
};

// Incremental risk of the running bill vector; prev_risk is 0 at the first step.
inline RiskDelta delta_risk(double prev_risk, std::span<const double> bills,
                            const RiskMeasure& measure) {
  const double now = measure(bills);
  return {now - prev_risk, now};
}

}  // namespace drsim
