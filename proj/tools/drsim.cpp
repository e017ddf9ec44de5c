#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "drsim/config_io.hpp"
#include "drsim/env_server.hpp"
#include "drsim/harness.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset = "default";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "TOML configuration file")->check(CLI::ExistingFile);
  app->add_option("--preset", o.preset, "base preset: default, uri_analog, portfolio500");
  app->add_option("--set", o.overrides, "override a config key, e.g. --set price.rho=0.8")
      ->allow_extra_args(false);
  app->add_option("--seed", o.seed, "master seed (beats config, DRSIM_SEED and --set)");
}

drsim::SimConfig resolve(const CommonOptions& o) {
  std::optional<std::filesystem::path> path;
  if (!o.config_path.empty()) path = o.config_path;
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  return drsim::load_config(path, overrides, o.preset);
}

// Writes to the named file, or stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demand-response credit issuance simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts, market_opts, sweep_opts, server_opts;

  auto* run = app.add_subcommand("run", "run episodes under a baseline policy");
  add_common(run, run_opts);
  std::string policy = "nocredit";
  int episodes = 1;
  int threads = 1;
  std::string out_path;
  std::string summary_path;
  run->add_option("--policy", policy, "nocredit | uniform[:c] | rule | budget-rule | random");
  run->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  run->add_option("--threads", threads)->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "per-step JSONL trajectory file");
  run->add_option("--summary", summary_path, "summary JSON file (default stdout)");

  auto* market = app.add_subcommand("validate-market", "price statistics of an agent-free trace");
  add_common(market, market_opts);
  int steps = 4380;
  std::string market_out;
  market->add_option("--steps", steps)->check(CLI::Range(1000, 100000000));
  market->add_option("--out", market_out, "report JSON file (default stdout)");

  auto* sweep = app.add_subcommand("sweep-credit", "uniform-credit risk/revenue frontier");
  add_common(sweep, sweep_opts);
  std::vector<double> levels(drsim::kDefaultSweepLevels.begin(), drsim::kDefaultSweepLevels.end());
  int sweep_episodes = 50;
  int sweep_threads = 1;
  std::string sweep_out;
  sweep->add_option("--levels", levels, "credit levels in $/kWh")->delimiter(',');
  sweep->add_option("--episodes", sweep_episodes, "episodes per level")->check(CLI::PositiveNumber);
  sweep->add_option("--threads", sweep_threads)->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "CSV file (default stdout)");

  auto* server = app.add_subcommand("env-server", "JSON-lines environment protocol on stdio");
  add_common(server, server_opts);

  auto* show = app.add_subcommand("preset", "print a preset as TOML");
  std::string preset_name = "default";
  show->add_option("name", preset_name, "default, uri_analog, portfolio500");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const drsim::SimConfig config = resolve(run_opts);
      const drsim::Policy p = drsim::parse_policy(policy, config.credit_max);
      std::optional<Output> traj;
      if (!out_path.empty()) traj.emplace(out_path);
      drsim::RunOptions ro;
      ro.jsonl = traj ? &traj->stream() : nullptr;
      ro.threads = threads;
      const auto summary = drsim::run_episodes(config, p, episodes, ro);
      Output s(summary_path);
      s.stream() << drsim::to_json(summary).dump(2) << '\n';
    } else if (*market) {
      const drsim::SimConfig config = resolve(market_opts);
      Output o(market_out);
      o.stream() << drsim::to_json(drsim::validate_market(config, steps)).dump(2) << '\n';
    } else if (*sweep) {
      const drsim::SimConfig config = resolve(sweep_opts);
      const auto points = drsim::sweep_credit(config, levels, sweep_episodes, sweep_threads);
      Output o(sweep_out);
      o.stream() << drsim::frontier_csv(points);
    } else if (*server) {
      const drsim::SimConfig config = resolve(server_opts);
      std::ios::sync_with_stdio(false);
      drsim::serve(std::cin, std::cout, config);
    } else if (*show) {
      std::cout << drsim::to_toml_string(drsim::preset(preset_name));
    }
  } catch (const std::exception& e) {
    std::cerr << "drsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
