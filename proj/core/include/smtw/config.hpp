#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smtw/baselines.hpp"

namespace smtw {

// One document holds every knob of the pipeline; defaults are the reference
// experimental constants. CLI flags override individual fields.
struct ExperimentConfig {
  uint64_t master_seed = 7;

  struct Env {
    int n = 5;
    int demonstrator_cap = 2000;
    int free_cap = 1000;
    double wait_prob = 0.1;
  } env;

  struct Dataset {
    int train_envs = 200;
    int demos_per_env = 10;
    int test_envs_analysis = 20;
    int test_envs_agent = 10;
  } dataset;

  struct Smtw {
    double gamma = 0.99;
    double bc_lr = 1e-3;
    double bonus_lr = 1e-4;
    int bc_epochs = 10;
    int bonus_epochs = 10;
    int lstm_units = 64;
    int dense_units = 512;
    std::optional<double> b_min_override;
  } smtw;

  RndConfig rnd;

  struct Agent {
    double epsilon = 0.1;
    double gamma = 0.99;
    std::vector<double> lr_sweep = {0.01, 0.1, 0.5, 0.7};
    int episodes = 300;
    int episode_cap = 1000;
    int repeats = 2;
  } agent;

  struct Eval {
    int bootstrap_resamples = 10000;
    int histogram_bins = 40;
  } eval;
};

// Canonical JSON (sorted keys, full double precision); hashing this string
// identifies a configuration.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace smtw
