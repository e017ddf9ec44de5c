#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drsim/config.hpp"
#include "drsim/rng.hpp"

namespace drsim {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMinTempC = -40.0;
inline constexpr double kMaxTempC = 55.0;

struct SourceProfile {
  std::string building_id;
  std::vector<double> load_kwh;  // indexed by timestep
};

struct WeatherSeries {
  std::vector<double> outdoor_temp_c;
};

// Replay data as loaded from disk. Immutable after load and shareable.
struct ProfileSet {
  std::vector<SourceProfile> profiles;
  WeatherSeries weather;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source, std::vector<std::string> required)
      : in_(in), source_(std::move(source)) {
    std::string header;
    if (!std::getline(in_, header)) throw DataError(source_ + ": empty file, missing header");
    ++line_no_;
    if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
    const auto cols = split_csv_line(header);
    for (const auto& name : required) {
      auto it = std::find(cols.begin(), cols.end(), name);
      if (it == cols.end()) throw DataError(source_ + ": missing column '" + name + "'");
      index_.push_back(static_cast<std::size_t>(it - cols.begin()));
    }
  }

  // Reads the next non-blank row; fields come back in `required` order.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      const auto cols = split_csv_line(line);
      fields.clear();
      for (std::size_t idx : index_) {
        if (idx >= cols.size()) fail("too few fields");
        fields.emplace_back(cols[idx]);
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source_ + ": row " + std::to_string(line_no_) + ": " + what);
  }

  double number(const std::string& s, std::string_view column) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
      fail("bad " + std::string(column) + " '" + s + "'");
    }
    return v;
  }

  long timestep(const std::string& s) const {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v < 0) fail("bad timestep '" + s + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::size_t> index_;
  long line_no_ = 0;
};

// Orders (timestep, value) pairs and checks they cover 0..n-1 exactly once.
inline std::vector<double> contiguous_series(std::vector<std::pair<long, double>> rows,
                                             const std::string& what) {
  std::sort(rows.begin(), rows.end());
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<long>(i)) {
      throw DataError(what + ": timesteps not contiguous from 0 (expected " + std::to_string(i) +
                      ", found " + std::to_string(rows[i].first) + ")");
    }
    out.push_back(rows[i].second);
  }
  return out;
}

}  // namespace detail

// Long format, header `building_id,timestep,non_shiftable_load_kwh`.
inline std::vector<SourceProfile> parse_profiles_csv(std::istream& in,
                                                     const std::string& source = "profiles") {
  detail::CsvReader reader(in, source, {"building_id", "timestep", "non_shiftable_load_kwh"});
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<long, double>>> rows;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f[0].empty()) reader.fail("empty building_id");
    const long t = reader.timestep(f[1]);
    const double load = reader.number(f[2], "non_shiftable_load_kwh");
    if (load < 0.0) reader.fail("negative load " + f[2] + " for building '" + f[0] + "'");
    auto [it, inserted] = rows.try_emplace(f[0]);
    if (inserted) order.push_back(f[0]);
    it->second.emplace_back(t, load);
  }
  if (order.empty()) throw DataError(source + ": no data rows");
  std::vector<SourceProfile> out;
  for (const auto& id : order) {
    out.push_back({id, detail::contiguous_series(std::move(rows[id]), source + ": building '" + id + "'")});
  }
  return out;
}

// Header `timestep,outdoor_temp_c`.
inline WeatherSeries parse_weather_csv(std::istream& in, const std::string& source = "weather") {
  detail::CsvReader reader(in, source, {"timestep", "outdoor_temp_c"});
  std::vector<std::pair<long, double>> rows;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const long t = reader.timestep(f[0]);
    const double temp = reader.number(f[1], "outdoor_temp_c");
    if (temp < kMinTempC || temp > kMaxTempC) reader.fail("temperature out of [-40, 55]: " + f[1]);
    rows.emplace_back(t, temp);
  }
  if (rows.empty()) throw DataError(source + ": no data rows");
  return {detail::contiguous_series(std::move(rows), source)};
}

inline ProfileSet load_profiles_csv(const std::filesystem::path& profile_path,
                                    const std::filesystem::path& weather_path) {
  std::ifstream profiles(profile_path);
  if (!profiles) throw DataError("cannot open profile file '" + profile_path.string() + "'");
  std::ifstream weather(weather_path);
  if (!weather) throw DataError("cannot open weather file '" + weather_path.string() + "'");
  return {parse_profiles_csv(profiles, profile_path.string()),
          parse_weather_csv(weather, weather_path.string())};
}

// Per-building demand parameters fixed at reset.
struct BuildingProfile {
  std::string building_id;
  std::size_t source_index = 0;  // replay: which source profile
  double jitter = 1.0;           // replay: scale applied to the source series
  double amplitude = 1.0;        // synthetic: kWh scale of the daily shape
  double hvac = 0.0;             // synthetic: kWh per 10 deg C beyond comfort band
};

// Unit-height Gaussian bump in hour of day, with circular distance.
inline double hour_bump(double hour, double center, double width) {
  double d = std::abs(hour - center);
  d = std::min(d, kHoursPerDay - d);
  return std::exp(-d * d / (2.0 * width * width));
}

// Bimodal residential shape: overnight base, morning and evening peaks.
inline double synthetic_shape(double hour) {
  return 0.4 + 0.8 * hour_bump(hour, 7.5, 1.5) + 1.0 * hour_bump(hour, 19.0, 2.0);
}

// Noise-free synthetic baseline; multiply by a mean-one log-normal factor.
inline double synthetic_baseline(double amplitude, double hvac, int hour, double temp_c) {
  return amplitude * synthetic_shape(hour) + hvac * std::max(0.0, (temp_c - 22.0) / 10.0) +
         hvac * std::max(0.0, (10.0 - temp_c) / 10.0);
}

// Noise-free synthetic outdoor temperature.
inline double synthetic_temperature(int day_of_year, int hour) {
  return 15.0 + 12.0 * std::cos(2.0 * std::numbers::pi * (day_of_year - 200) / 365.0) +
         5.0 * std::cos(2.0 * std::numbers::pi * (hour - 15) / 24.0);
}

inline double update_feedback_multiplier(double m, double delta, double gamma) {
  if (!(m > 0.0 && m <= 1.0)) throw std::domain_error("multiplier must be in (0, 1]");
  if (!(delta >= 0.0 && delta < 1.0)) throw std::domain_error("reduction fraction must be in [0, 1)");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::domain_error("gamma must be in [0, 1]");
  return std::min(1.0, m * gamma + (1.0 - delta) * (1.0 - gamma));
}

inline double effective_demand(double baseline_kwh, double multiplier, double reduction_kwh) {
  return std::max(0.0, baseline_kwh * multiplier - reduction_kwh);
}

// Time context used to index demand and weather for one simulation step.
struct StepClock {
  int step = 0;            // step within the episode
  int hour = 0;
  int day_of_year = 0;
  long replay_index = 0;   // absolute index into replay series
};

// Baseline demand and temperature for either replay or synthetic mode.
//
// All randomness comes from the demand stream through sub-streams keyed by
// (purpose, step, building).
class DemandSource {
 public:
  DemandSource(const SimConfig& config, std::shared_ptr<const ProfileSet> data)
      : params_(config.demand), data_(std::move(data)) {
    if (params_.mode == DemandMode::kCsvReplay) {
      if (!data_ || data_->profiles.empty() || data_->weather.outdoor_temp_c.empty()) {
        throw DataError("csv replay mode needs loaded profiles and weather");
      }
    }
  }

  bool replay() const { return params_.mode == DemandMode::kCsvReplay; }
  const ProfileSet* data() const { return data_.get(); }

  std::vector<BuildingProfile> make_buildings(int n, const RandomStream& demand) const {
    std::vector<BuildingProfile> out(static_cast<std::size_t>(n));
    const RandomStream base = demand.substream(stream_tag::kProfile);
    for (std::size_t i = 0; i < out.size(); ++i) {
      RandomStream rng = base.substream(i);
      BuildingProfile& b = out[i];
      if (replay()) {
        const std::size_t n_src = data_->profiles.size();
        b.source_index = i % n_src;
        b.building_id = data_->profiles[b.source_index].building_id;
        if (i >= n_src) {
          b.jitter = rng.uniform(1.0 - params_.reuse_jitter, 1.0 + params_.reuse_jitter);
        }
      } else {
        b.building_id = "synthetic_" + std::to_string(i);
        b.amplitude = params_.load_scale * rng.uniform(params_.scale_lo, params_.scale_hi);
        b.hvac = rng.uniform(params_.hvac_lo, params_.hvac_hi);
      }
    }
    return out;
  }

  double temperature(const StepClock& clock, const RandomStream& demand) const {
    if (replay()) return replay_at(data_->weather.outdoor_temp_c, clock.replay_index);
    RandomStream rng = demand.substream(stream_tag::kWeather).substream(static_cast<std::uint64_t>(clock.step));
    const double t = synthetic_temperature(clock.day_of_year, clock.hour) +
                     params_.temp_noise_sigma * rng.normal();
    return std::clamp(t, kMinTempC, kMaxTempC);
  }

  // `step_stream` is demand.substream(step); building i uses its i-th child.
  double baseline(const BuildingProfile& b, std::size_t index, const StepClock& clock,
                  double temp_c, const RandomStream& step_stream) const {
    if (replay()) {
      return replay_at(data_->profiles[b.source_index].load_kwh, clock.replay_index) * b.jitter;
    }
    RandomStream rng = step_stream.substream(index);
    const double sigma = params_.noise_sigma;
    const double noise = std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
    return synthetic_baseline(b.amplitude, b.hvac, clock.hour, temp_c) * noise;
  }

  static double replay_at(const std::vector<double>& series, long index) {
    const long n = static_cast<long>(series.size());
    return series[static_cast<std::size_t>(((index % n) + n) % n)];
  }

 private:
  DemandParams params_;
  std::shared_ptr<const ProfileSet> data_;
};

}  // namespace drsim
