#include "smtw/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "smtw/agent.hpp"
#include "smtw/behaviors.hpp"
#include "smtw/cascade.hpp"
#include "smtw/config.hpp"
#include "smtw/evalharness.hpp"
#include "smtw/io.hpp"

namespace smtw {

namespace fs = std::filesystem;

namespace {

struct MissingInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input(const std::string& path) {
  if (!fs::exists(path)) throw MissingInputError("input not found: " + path);
}

std::vector<EnvInstance> make_instances(uint64_t master_seed, int count, int n) {
  std::vector<EnvInstance> instances;
  instances.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    EnvConfig ec;
    ec.n = n;
    ec.seed = derive_stream(master_seed, "gridworld", static_cast<uint64_t>(i));
    Rng rng(ec.seed);
    instances.push_back(generate_instance(ec, rng));
  }
  return instances;
}

BehaviorConfig behavior_config(const ExperimentConfig& cfg) {
  BehaviorConfig bc;
  bc.demonstrator_cap = cfg.env.demonstrator_cap;
  bc.free_cap = cfg.env.free_cap;
  bc.wait_prob = cfg.env.wait_prob;
  return bc;
}

CascadeConfig cascade_config(const ExperimentConfig& cfg, int n) {
  CascadeConfig cc;
  cc.n = n;
  cc.gamma = cfg.smtw.gamma;
  cc.bc_lr = cfg.smtw.bc_lr;
  cc.bonus_lr = cfg.smtw.bonus_lr;
  cc.bc_epochs = cfg.smtw.bc_epochs;
  cc.bonus_epochs = cfg.smtw.bonus_epochs;
  cc.lstm_units = static_cast<size_t>(cfg.smtw.lstm_units);
  cc.dense_units = static_cast<size_t>(cfg.smtw.dense_units);
  cc.seed = cfg.master_seed;
  cc.b_min_override = cfg.smtw.b_min_override;
  return cc;
}

int cmd_gen_envs(const ExperimentConfig& cfg, int count, const std::string& out) {
  auto instances = make_instances(cfg.master_seed, count, cfg.env.n);
  write_instances(out, instances);
  ManifestData manifest;
  manifest.command = "gen-envs";
  manifest.config_json = config_to_json(cfg);
  manifest.master_seed = cfg.master_seed;
  manifest.outputs = {out};
  manifest.notes["count"] = std::to_string(count);
  write_manifest(out + ".manifest.json", manifest);
  return kExitOk;
}

int cmd_gen_demos(const ExperimentConfig& cfg, const std::string& instances_path, int per_env,
                  const std::string& out) {
  require_input(instances_path);
  auto instances = read_instances(instances_path);
  if (instances.empty()) throw DataFormatError(instances_path + ": no instances");

  DemoDataset dataset;
  dataset.n = instances[0].n;
  dataset.demonstrator_cap = cfg.env.demonstrator_cap;
  dataset.free_cap = cfg.env.free_cap;
  dataset.per_env = per_env;
  for (const EnvInstance& inst : instances) dataset.instance_seeds.push_back(inst.seed);
  dataset.demos = generate_demonstrations(instances, per_env, behavior_config(cfg));
  write_demos(out, dataset);

  ManifestData manifest;
  manifest.command = "gen-demos";
  manifest.config_json = config_to_json(cfg);
  manifest.master_seed = cfg.master_seed;
  manifest.inputs = {instances_path};
  manifest.outputs = {out};
  manifest.metrics["demos"] = static_cast<double>(dataset.demos.size());
  write_manifest(out + ".manifest.json", manifest);
  return kExitOk;
}

int cmd_train_smtw(const ExperimentConfig& cfg, const std::string& demos_path,
                   const std::string& out_dir) {
  require_input(demos_path);
  DemoDataset dataset = read_demos(demos_path);
  fs::create_directories(out_dir);

  CascadeConfig cc = cascade_config(cfg, dataset.n);
  auto episodes = flatten_demonstrations(dataset.demos);

  std::cerr << "train-smtw: " << dataset.demos.size() << " demonstrations, "
            << episodes.size() << " episodes\n";
  BcResult bc = train_bc(episodes, cc);
  std::cerr << "train-smtw: behavior cloning done (accuracy " << bc.final_accuracy << ")\n";
  RegressionTargets targets = make_regression_targets(*bc.policy, episodes, cc);
  BonusResult bonus = train_bonus(episodes, targets, cc);
  std::cerr << "train-smtw: bonus regression done (rms " << bonus.rms_demo << " / "
            << bonus.rms_contrast << ")\n";

  const std::string policy_path = out_dir + "/policy.ckpt.json";
  const std::string bonus_path = out_dir + "/bonus.ckpt.json";
  bc.policy->save(policy_path);
  bonus.bonus->save(bonus_path);

  ManifestData manifest;
  manifest.command = "train-smtw";
  manifest.config_json = config_to_json(cfg);
  manifest.master_seed = cfg.master_seed;
  manifest.inputs = {demos_path};
  manifest.outputs = {policy_path, bonus_path};
  manifest.metrics["bc_accuracy"] = bc.final_accuracy;
  manifest.metrics["bc_mean_loss"] = bc.final_mean_loss;
  manifest.metrics["b_min"] = targets.b_min;
  manifest.metrics["bonus_rms_demo"] = bonus.rms_demo;
  manifest.metrics["bonus_rms_contrast"] = bonus.rms_contrast;
  manifest.metrics["bonus_mean_loss"] = bonus.final_mean_loss;
  manifest.notes["episodes"] = std::to_string(episodes.size());
  write_manifest(out_dir + "/manifest.json", manifest);
  return kExitOk;
}

std::vector<std::string> histogram_paths(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".svg") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

int cmd_eval_bonus(const ExperimentConfig& cfg, const std::string& bonus_ckpt,
                   const std::string& test_path, const std::string& train_path,
                   const std::string& out_dir) {
  require_input(bonus_ckpt);
  require_input(test_path);
  require_input(train_path);
  auto bonus_net = BonusNet::from_checkpoint(bonus_ckpt);
  auto test_instances = read_instances(test_path);
  auto train_instances = read_instances(train_path);
  std::vector<uint64_t> train_seeds;
  for (const EnvInstance& inst : train_instances) train_seeds.push_back(inst.seed);

  AnalysisConfig ac;
  ac.behavior = behavior_config(cfg);
  ac.rnd = cfg.rnd;
  ac.master_seed = cfg.master_seed;
  AnalysisResult analysis = run_analysis(*bonus_net, test_instances, train_seeds, ac);

  fs::create_directories(out_dir);
  const std::string raw_path = out_dir + "/raw_values.csv";
  const std::string summary_path = out_dir + "/summary.csv";
  const std::string orderings_path = out_dir + "/orderings.csv";
  const std::string hist_dir = out_dir + "/histograms";
  write_raw_values_csv(raw_path, analysis);
  auto summary = summarize(analysis);
  write_summary_csv(summary_path, summary);
  auto orderings =
      pairwise_orderings(analysis, cfg.eval.bootstrap_resamples, cfg.master_seed);
  write_orderings_csv(orderings_path, orderings);
  write_histograms(hist_dir, analysis, cfg.eval.histogram_bins);

  ManifestData manifest;
  manifest.command = "eval-bonus";
  manifest.config_json = config_to_json(cfg);
  manifest.master_seed = cfg.master_seed;
  manifest.inputs = {bonus_ckpt, test_path, train_path};
  manifest.outputs = {raw_path, summary_path, orderings_path};
  for (const std::string& p : histogram_paths(hist_dir)) manifest.outputs.push_back(p);
  write_manifest(out_dir + "/manifest.json", manifest);
  return kExitOk;
}

int cmd_train_agent(const ExperimentConfig& cfg, const std::string& instances_path,
                    const std::string& bonus_ckpt, const std::string& train_path,
                    const std::string& algorithms_csv, const std::string& out_dir) {
  require_input(instances_path);
  auto instances = read_instances(instances_path);

  ExperimentConfigAgent agent_cfg;
  agent_cfg.epsilon = cfg.agent.epsilon;
  agent_cfg.gamma = cfg.agent.gamma;
  agent_cfg.lr_sweep = cfg.agent.lr_sweep;
  agent_cfg.episodes = cfg.agent.episodes;
  agent_cfg.episode_cap = cfg.agent.episode_cap;
  agent_cfg.repeats = cfg.agent.repeats;
  agent_cfg.master_seed = cfg.master_seed;

  agent_cfg.algorithms.clear();
  std::stringstream ss(algorithms_csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) agent_cfg.algorithms.push_back(bonus_kind_from_name(token));
  }
  if (agent_cfg.algorithms.empty()) {
    throw std::invalid_argument("train-agent: no algorithms selected");
  }

  const bool needs_model =
      std::count(agent_cfg.algorithms.begin(), agent_cfg.algorithms.end(), BonusKind::kSmtw) > 0;
  std::unique_ptr<BonusNet> bonus_net;
  if (needs_model) {
    require_input(bonus_ckpt);
    bonus_net = BonusNet::from_checkpoint(bonus_ckpt);
  }
  if (!train_path.empty()) {
    require_input(train_path);
    std::set<uint64_t> train_seeds;
    for (const EnvInstance& inst : read_instances(train_path)) train_seeds.insert(inst.seed);
    for (const EnvInstance& inst : instances) {
      if (train_seeds.count(inst.seed)) {
        throw OverlapError("train-agent: instance " + std::to_string(inst.seed) +
                           " was used for training");
      }
    }
  }

  ExperimentResult result = run_experiment(instances, agent_cfg, bonus_net.get());

  fs::create_directories(out_dir);
  const std::string curves_path = out_dir + "/curves.csv";
  write_curves_csv(curves_path, result);

  ManifestData manifest;
  manifest.command = "train-agent";
  manifest.config_json = config_to_json(cfg);
  manifest.master_seed = cfg.master_seed;
  manifest.inputs = {instances_path};
  if (needs_model) manifest.inputs.push_back(bonus_ckpt);
  manifest.outputs = {curves_path};
  for (const auto& [kind, lr] : result.best_lr) {
    manifest.metrics[std::string("best_lr_") + bonus_kind_name(kind)] = lr;
  }
  write_manifest(out_dir + "/manifest.json", manifest);
  return kExitOk;
}

int cmd_report(const ExperimentConfig& cfg, const std::string& raw_path,
               const std::string& out_dir) {
  require_input(raw_path);
  AnalysisResult analysis = read_raw_values_csv(raw_path);
  fs::create_directories(out_dir);
  const std::string summary_path = out_dir + "/summary.csv";
  const std::string orderings_path = out_dir + "/orderings.csv";
  const std::string hist_dir = out_dir + "/histograms";
  write_summary_csv(summary_path, summarize(analysis));
  write_orderings_csv(orderings_path, pairwise_orderings(analysis, cfg.eval.bootstrap_resamples,
                                                         cfg.master_seed));
  write_histograms(hist_dir, analysis, cfg.eval.histogram_bins);

  ManifestData manifest;
  manifest.command = "report";
  manifest.config_json = config_to_json(cfg);
  manifest.master_seed = cfg.master_seed;
  manifest.inputs = {raw_path};
  manifest.outputs = {summary_path, orderings_path};
  for (const std::string& p : histogram_paths(hist_dir)) manifest.outputs.push_back(p);
  write_manifest(out_dir + "/manifest.json", manifest);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"KeysDoors exploration-bonus toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (defaults apply otherwise)");

  uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--seed", seed, "master seed (overrides the config)")
      ->each([&](const std::string&) { seed_set = true; });

  // gen-envs
  auto* gen_envs = app.add_subcommand("gen-envs", "sample environment instances");
  int ge_count = 200, ge_n = 0;
  std::string ge_out = "instances.jsonl";
  gen_envs->add_option("--count", ge_count, "number of instances");
  gen_envs->add_option("--n", ge_n, "grid side length");
  gen_envs->add_option("--out", ge_out, "output instance-set file");

  // gen-demos
  auto* gen_demos = app.add_subcommand("gen-demos", "script demonstrations for instances");
  std::string gd_instances = "instances.jsonl", gd_out = "demos.jsonl";
  int gd_per_env = 0;
  gen_demos->add_option("--instances", gd_instances, "instance-set file");
  gen_demos->add_option("--per-env", gd_per_env, "demonstrations per instance");
  gen_demos->add_option("--out", gd_out, "output dataset file");

  // train-smtw
  auto* train_smtw = app.add_subcommand("train-smtw", "train the learned bonus");
  std::string ts_demos = "demos.jsonl", ts_out_dir = ".";
  int ts_bc_epochs = 0, ts_bonus_epochs = 0;
  train_smtw->add_option("--demos", ts_demos, "demonstration dataset");
  train_smtw->add_option("--out-dir", ts_out_dir, "directory for checkpoints and manifest");
  train_smtw->add_option("--bc-epochs", ts_bc_epochs, "override classifier epochs");
  train_smtw->add_option("--bonus-epochs", ts_bonus_epochs, "override regression epochs");

  // eval-bonus
  auto* eval_bonus = app.add_subcommand("eval-bonus", "score behaviors with all bonuses");
  std::string eb_ckpt = "bonus.ckpt.json", eb_test, eb_train, eb_out_dir = ".";
  eval_bonus->add_option("--bonus-ckpt", eb_ckpt, "bonus checkpoint");
  eval_bonus->add_option("--test-instances", eb_test, "held-out instance set")->required();
  eval_bonus->add_option("--train-instances", eb_train, "training instance set (for the disjointness guard)")
      ->required();
  eval_bonus->add_option("--out-dir", eb_out_dir, "output directory");

  // train-agent
  auto* train_agent_cmd = app.add_subcommand("train-agent", "tabular agent sweep");
  std::string ta_instances, ta_ckpt, ta_train, ta_algos = "none,count,smtw", ta_out_dir = ".";
  int ta_episodes = 0;
  train_agent_cmd->add_option("--instances", ta_instances, "instance set to train on")->required();
  train_agent_cmd->add_option("--bonus-ckpt", ta_ckpt, "bonus checkpoint (needed for smtw)");
  train_agent_cmd->add_option("--train-instances", ta_train,
                              "bonus training instances (optional disjointness guard)");
  train_agent_cmd->add_option("--algorithms", ta_algos, "comma list of none,count,smtw");
  train_agent_cmd->add_option("--episodes", ta_episodes, "training episodes per run");
  train_agent_cmd->add_option("--out-dir", ta_out_dir, "output directory");

  // report
  auto* report = app.add_subcommand("report", "recompute summaries from raw values");
  std::string rp_raw, rp_out_dir = ".";
  report->add_option("--raw", rp_raw, "raw_values.csv")->required();
  report->add_option("--out-dir", rp_out_dir, "output directory");

  // verify
  auto* verify = app.add_subcommand("verify", "run the invariant self-checks");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      require_input(config_path);
      cfg = load_config_file(config_path);
    }
    if (seed_set) cfg.master_seed = seed;

    if (gen_envs->parsed()) {
      if (gen_envs->count("--n")) cfg.env.n = ge_n;
      return cmd_gen_envs(cfg, ge_count, ge_out);
    }
    if (gen_demos->parsed()) {
      if (gen_demos->count("--per-env")) cfg.dataset.demos_per_env = gd_per_env;
      return cmd_gen_demos(cfg, gd_instances, cfg.dataset.demos_per_env, gd_out);
    }
    if (train_smtw->parsed()) {
      if (train_smtw->count("--bc-epochs")) cfg.smtw.bc_epochs = ts_bc_epochs;
      if (train_smtw->count("--bonus-epochs")) cfg.smtw.bonus_epochs = ts_bonus_epochs;
      return cmd_train_smtw(cfg, ts_demos, ts_out_dir);
    }
    if (eval_bonus->parsed()) {
      return cmd_eval_bonus(cfg, eb_ckpt, eb_test, eb_train, eb_out_dir);
    }
    if (train_agent_cmd->parsed()) {
      if (train_agent_cmd->count("--episodes")) cfg.agent.episodes = ta_episodes;
      return cmd_train_agent(cfg, ta_instances, ta_ckpt, ta_train, ta_algos, ta_out_dir);
    }
    if (report->parsed()) {
      return cmd_report(cfg, rp_raw, rp_out_dir);
    }
    if (verify->parsed()) {
      return run_verification(std::cout, cfg.master_seed) == 0 ? kExitOk : kExitVerifyFailed;
    }
  } catch (const MissingInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const DataFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataFormat;
  } catch (const OverlapError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOverlap;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace smtw
