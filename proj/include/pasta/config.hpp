#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pasta/trainer.hpp"

namespace pasta {

// Everything a run needs. Loaded from a sectioned INI file:
//
//   [run]         iterations, seed, preference
//   [environment] name, max_steps, stub_objectives, stealth_*
//   [algorithm]   name, mu_fixed, zeta, rho, pcgrad, weighted_pcgrad, critic,
//                 critic_weighted, pair_sampling, tch_selection
//   [controller]  mu_start, mu_min, mu_max, tau, lambda_ema, decay, braking
//   [ppo]         horizon, epochs, minibatch, clip_eps, c1, c2, gamma,
//                 lambda_gae, learning_rate, hidden
//   [output]      dir, label, eval_interval, eval_episodes, checkpoint_interval
//
// Keys are addressed as "section.key" by overrides and sweep axes.
struct RunConfig {
  TrainConfig train;
  std::string out_dir = "runs/default";
  std::string label;  // method label for comparisons; derived when empty
  int checkpoint_interval = 10;  // 0 keeps only the final checkpoint

  void validate() const;
  std::string method_label() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(std::string_view text, const std::string& source);

// "section.key=value". Throws ConfigError for unknown keys or bad values.
void apply_override(RunConfig& config, std::string_view assignment);
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

// Canonical INI text; parsing it gives back an identical config.
std::string serialize_run_config(const RunConfig& config);

std::vector<std::string> config_keys();

// "0.2,0.3,0.5"; entries may be fractions such as "1/3".
std::vector<double> parse_preference(std::string_view text);
double parse_number(std::string_view text, const std::string& key);

// The eight three-objective preference vectors of the stealth preference study
// (sweep value "stealth8").
std::vector<std::vector<double>> stealth_preferences();

}  // namespace pasta
