#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "drsim/config_io.hpp"
#include "drsim/rng.hpp"

using drsim::ConfigError;
using drsim::SimConfig;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) { setenv(name, value, 1); }
  ~ScopedEnv() { unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  const SimConfig c = drsim::from_toml(drsim::parse_toml_text(""));
  EXPECT_EQ(c, SimConfig{});
  EXPECT_EQ(c.n_buildings, 50);
  EXPECT_EQ(c.episode_steps(), 24);
  EXPECT_DOUBLE_EQ(c.retail_rate, 0.15);
  EXPECT_DOUBLE_EQ(c.credit_max, 0.10);
  EXPECT_DOUBLE_EQ(c.feedback_gamma, 0.9);
  EXPECT_DOUBLE_EQ(c.price.rho, 0.9);
  EXPECT_DOUBLE_EQ(c.budget.mu, 100.0);
  EXPECT_EQ(c.reward.risk, "cvar:0.95");
  ASSERT_EQ(c.customer.archetypes.size(), 4u);
  EXPECT_DOUBLE_EQ(c.customer.archetypes[3].base_accept, 0.40);
}

TEST(Config, ProportionsMustSumToOne) {
  std::vector<std::string> o;
  for (int k = 0; k < 4; ++k) o.push_back("customer.archetypes." + std::to_string(k) + ".proportion=0.5");
  const std::string msg = error_of([&] { drsim::load_config(std::nullopt, o); });
  EXPECT_NE(msg.find("proportions sum to 2.0"), std::string::npos) << msg;
}

TEST(Config, RepeatedOverrideIsDeterministic) {
  const SimConfig a = drsim::load_config(std::nullopt, {"seed=42"});
  const SimConfig b = drsim::load_config(std::nullopt, {"seed=42"});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.seed, 42u);
}

TEST(Config, Presets) {
  const SimConfig uri = drsim::preset("uri_analog");
  EXPECT_DOUBLE_EQ(uri.price.spike_entry_base, 0.08);
  EXPECT_DOUBLE_EQ(uri.price.temp_spike_boost, 0.15);
  const SimConfig big = drsim::preset("portfolio500");
  EXPECT_EQ(big.n_buildings, 500);
  EXPECT_DOUBLE_EQ(big.stress.demand_threshold, 10000.0);
  EXPECT_EQ(drsim::preset("default").n_buildings, 50);
  EXPECT_THROW(drsim::preset("nope"), ConfigError);
  for (const char* name : {"default", "uri_analog", "portfolio500"}) {
    EXPECT_NO_THROW(drsim::validate(drsim::preset(name))) << name;
  }
}

TEST(Config, RoundTripPresets) {
  for (const char* name : {"default", "uri_analog", "portfolio500"}) {
    const SimConfig c = drsim::preset(name);
    const SimConfig back = drsim::from_toml(drsim::parse_toml_text(drsim::to_toml_string(c)));
    EXPECT_EQ(back, c) << name;
  }
}

TEST(Config, RoundTripRandomizedConfigs) {
  drsim::RandomStream rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    SimConfig c;
    c.n_buildings = 1 + static_cast<int>(rng.uniform() * 1000);
    c.episode_days = 1 + static_cast<int>(rng.uniform() * 30);
    c.retail_rate = rng.uniform(0.01, 1.0);
    c.credit_max = rng.uniform(0.01, 0.5);
    c.feedback_gamma = rng.uniform();
    c.day_of_year = static_cast<int>(rng.uniform() * 366) - 1;
    c.seed = rng.next_u64() >> 2;
    c.price.rho = rng.uniform(0.0, 0.99);
    c.price.sigma_eps = rng.uniform(0.001, 0.1);
    c.price.het_multipliers[static_cast<std::size_t>(trial % 24)] = rng.uniform(1.0, 3.0);
    c.price.spike_resample_hourly = rng.uniform() < 0.5;
    c.price.elasticity_lambda = rng.uniform(0.0, 0.01);
    c.price.peak_hours.reset(16);
    c.customer.archetypes[1].reduction_mean = rng.uniform(0.01, 0.4);
    c.customer.acceptance_form =
        rng.uniform() < 0.5 ? drsim::AcceptanceForm::kLiteral : drsim::AcceptanceForm::kIncreasing;
    c.stress.demand_slope = rng.uniform(0.01, 5.0);
    c.budget.sigma = rng.uniform(0.0, 50.0);
    c.reward.scale = rng.uniform(0.001, 1.0);
    c.reward.risk = rng.uniform() < 0.5 ? "none" : "cvar:0.9";
    c.demand.profile_path = "dir with \"quotes\"\\x.csv";
    c.demand.noise_sigma = rng.uniform(0.0, 0.5);
    ASSERT_NO_THROW(drsim::validate(c));
    const std::string text = drsim::to_toml_string(c);
    const SimConfig back = drsim::from_toml(drsim::parse_toml_text(text));
    ASSERT_EQ(back, c) << text;
  }
}

TEST(Config, UnknownKeysRejected) {
  const auto path = std::filesystem::temp_directory_path() / "drsim_unknown_key.toml";
  std::ofstream(path) << "[price]\nvolatility = 0.3\n";
  const std::string msg = error_of([&] { drsim::load_config(path); });
  EXPECT_NE(msg.find("price.volatility"), std::string::npos) << msg;
  EXPECT_THROW(drsim::load_config(std::nullopt, {"bogus=1"}), ConfigError);
}

TEST(Config, TypeErrorsNameTheField) {
  const std::string msg = error_of([] { drsim::load_config(std::nullopt, {"n_buildings=\"ten\""}); });
  EXPECT_NE(msg.find("n_buildings"), std::string::npos) << msg;
  EXPECT_THROW(drsim::load_config(std::nullopt, {"price.rho=[1,2]"}), ConfigError);
}

TEST(Config, IntegersAcceptedForReals) {
  const SimConfig c = drsim::load_config(std::nullopt, {"retail_rate=1"});
  EXPECT_DOUBLE_EQ(c.retail_rate, 1.0);
}

TEST(Config, ValidationRejectsBadValues) {
  const std::vector<std::string> bad = {
      "n_buildings=0",          "steps_per_day=12",        "feedback_gamma=1.5",
      "credit_max=0",           "retail_rate=-0.1",        "price.rho=1.0",
      "price.price_floor=10.0", "reward.risk=\"entropic\"", "customer.reduction_cap=1.0",
      "day_of_year=365",        "price.peak_hours=[1,22]",  "budget.sigma=-1"};
  for (const auto& o : bad) {
    EXPECT_THROW(drsim::load_config(std::nullopt, {o}), ConfigError) << o;
  }
}

TEST(Config, FileThenEnvThenOverrides) {
  const auto path = std::filesystem::temp_directory_path() / "drsim_layers.toml";
  std::ofstream(path) << "seed = 5\nn_buildings = 7\n[price]\nrho = 0.8\n";
  EXPECT_EQ(drsim::load_config(path).seed, 5u);
  {
    ScopedEnv env("DRSIM_SEED", "77");
    const SimConfig c = drsim::load_config(path);
    EXPECT_EQ(c.seed, 77u);
    EXPECT_EQ(c.n_buildings, 7);
    EXPECT_DOUBLE_EQ(c.price.rho, 0.8);
    EXPECT_EQ(drsim::load_config(path, {"seed=9"}).seed, 9u);
  }
  {
    ScopedEnv env("DRSIM_SEED", "abc");
    EXPECT_THROW(drsim::load_config(path), ConfigError);
  }
}

TEST(Config, PresetBaseThenOverride) {
  const SimConfig c = drsim::load_config(std::nullopt, {"n_buildings=20"}, "portfolio500");
  EXPECT_EQ(c.n_buildings, 20);
  EXPECT_DOUBLE_EQ(c.stress.demand_threshold, 10000.0);
}

TEST(Config, ArchetypeTablesOverlayDefaults) {
  const std::string text =
      "[[customer.archetypes]]\nbase_accept = 0.7\n[[customer.archetypes]]\n[[customer.archetypes]]\n"
      "[[customer.archetypes]]\n";
  const SimConfig c = drsim::from_toml(drsim::parse_toml_text(text));
  EXPECT_DOUBLE_EQ(c.customer.archetypes[0].base_accept, 0.7);
  EXPECT_DOUBLE_EQ(c.customer.archetypes[0].proportion, 0.30);
  EXPECT_EQ(c.customer.archetypes[2].name, "neutral");
}

TEST(Config, MalformedTomlIsConfigError) {
  EXPECT_THROW(drsim::parse_toml_text("seed = = 1"), ConfigError);
}

TEST(Config, NumbersPrintShortest) {
  EXPECT_EQ(drsim::format_number(0.1), "0.1");
  EXPECT_EQ(drsim::format_number(2.0), "2.0");
  EXPECT_EQ(drsim::format_number(1e-7), "1e-07");
}
