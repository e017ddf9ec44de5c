#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace drsim {

// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Splittable counter-based stream.
//
// The n-th output of a stream with key k is mix64(k + n * gamma), i.e. a
// SplitMix64 generator started at state k. Sub-streams are addressed by a
// 64-bit id; the child key is
//
//     mix64(k ^ mix64(id + 0x632be59bd9b4e019))
//
// A child depends only on (parent key, id), not on how many values the
// parent or its siblings have produced.
class RandomStream {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  constexpr RandomStream() noexcept = default;
  constexpr explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

  constexpr RandomStream substream(std::uint64_t id) const noexcept {
    return RandomStream(mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ULL)));
  }

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  // Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Standard normal by Box-Muller; always consumes exactly two outputs.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Top-level named streams of one simulation. Each is derived from the
// master seed with a fixed id.
enum class StreamId : std::uint64_t {
  kMarket = 1,
  kCustomer = 2,
  kBudget = 3,
  kDemand = 4,
  kPolicy = 5,
};

inline RandomStream named_stream(std::uint64_t seed, StreamId id) noexcept {
  return RandomStream(mix64(seed)).substream(static_cast<std::uint64_t>(id));
}

struct StreamSet {
  RandomStream market;
  RandomStream customer;
  RandomStream budget;
  RandomStream demand;

  static StreamSet from_seed(std::uint64_t seed) noexcept {
    return {named_stream(seed, StreamId::kMarket),
            named_stream(seed, StreamId::kCustomer),
            named_stream(seed, StreamId::kBudget),
            named_stream(seed, StreamId::kDemand)};
  }
};

// Sub-stream tags that must not collide with step indices.
namespace stream_tag {
inline constexpr std::uint64_t kArchetype = 0xA100000000000001ULL;
inline constexpr std::uint64_t kProfile = 0xA100000000000002ULL;
inline constexpr std::uint64_t kWeather = 0xA100000000000003ULL;
inline constexpr std::uint64_t kDayOfYear = 0xA100000000000004ULL;
}  // namespace stream_tag

}  // namespace drsim
