#include "smtw/config.hpp"

#include <fstream>

#include "json.hpp"
#include "smtw/io.hpp"

namespace smtw {

using nlohmann::json;

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["format_version"] = kFormatVersion;
  j["master_seed"] = cfg.master_seed;
  j["env"] = {{"n", cfg.env.n},
              {"demonstrator_cap", cfg.env.demonstrator_cap},
              {"free_cap", cfg.env.free_cap},
              {"wait_prob", cfg.env.wait_prob}};
  j["dataset"] = {{"train_envs", cfg.dataset.train_envs},
                  {"demos_per_env", cfg.dataset.demos_per_env},
                  {"test_envs_analysis", cfg.dataset.test_envs_analysis},
                  {"test_envs_agent", cfg.dataset.test_envs_agent}};
  j["smtw"] = {{"gamma", cfg.smtw.gamma},
               {"bc_lr", cfg.smtw.bc_lr},
               {"bonus_lr", cfg.smtw.bonus_lr},
               {"bc_epochs", cfg.smtw.bc_epochs},
               {"bonus_epochs", cfg.smtw.bonus_epochs},
               {"lstm_units", cfg.smtw.lstm_units},
               {"dense_units", cfg.smtw.dense_units}};
  if (cfg.smtw.b_min_override) {
    j["smtw"]["b_min_override"] = *cfg.smtw.b_min_override;
  } else {
    j["smtw"]["b_min_override"] = nullptr;
  }
  j["rnd"] = {{"hidden", cfg.rnd.hidden},
              {"embed", cfg.rnd.embed},
              {"lr", cfg.rnd.lr},
              {"warmup", cfg.rnd.warmup},
              {"eps", cfg.rnd.eps}};
  j["agent"] = {{"epsilon", cfg.agent.epsilon},
                {"gamma", cfg.agent.gamma},
                {"lr_sweep", cfg.agent.lr_sweep},
                {"episodes", cfg.agent.episodes},
                {"episode_cap", cfg.agent.episode_cap},
                {"repeats", cfg.agent.repeats}};
  j["eval"] = {{"bootstrap_resamples", cfg.eval.bootstrap_resamples},
               {"histogram_bins", cfg.eval.histogram_bins}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataFormatError("config: malformed JSON");
  if (j.contains("format_version") && j["format_version"].get<int>() != kFormatVersion) {
    throw DataFormatError("config: unsupported format_version");
  }
  ExperimentConfig cfg;
  // Partial documents are fine: absent fields keep their defaults.
  if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<uint64_t>();
  if (j.contains("env")) {
    const json& e = j["env"];
    if (e.contains("n")) cfg.env.n = e["n"].get<int>();
    if (e.contains("demonstrator_cap")) cfg.env.demonstrator_cap = e["demonstrator_cap"].get<int>();
    if (e.contains("free_cap")) cfg.env.free_cap = e["free_cap"].get<int>();
    if (e.contains("wait_prob")) cfg.env.wait_prob = e["wait_prob"].get<double>();
  }
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    if (d.contains("train_envs")) cfg.dataset.train_envs = d["train_envs"].get<int>();
    if (d.contains("demos_per_env")) cfg.dataset.demos_per_env = d["demos_per_env"].get<int>();
    if (d.contains("test_envs_analysis"))
      cfg.dataset.test_envs_analysis = d["test_envs_analysis"].get<int>();
    if (d.contains("test_envs_agent"))
      cfg.dataset.test_envs_agent = d["test_envs_agent"].get<int>();
  }
  if (j.contains("smtw")) {
    const json& s = j["smtw"];
    if (s.contains("gamma")) cfg.smtw.gamma = s["gamma"].get<double>();
    if (s.contains("bc_lr")) cfg.smtw.bc_lr = s["bc_lr"].get<double>();
    if (s.contains("bonus_lr")) cfg.smtw.bonus_lr = s["bonus_lr"].get<double>();
    if (s.contains("bc_epochs")) cfg.smtw.bc_epochs = s["bc_epochs"].get<int>();
    if (s.contains("bonus_epochs")) cfg.smtw.bonus_epochs = s["bonus_epochs"].get<int>();
    if (s.contains("lstm_units")) cfg.smtw.lstm_units = s["lstm_units"].get<int>();
    if (s.contains("dense_units")) cfg.smtw.dense_units = s["dense_units"].get<int>();
    if (s.contains("b_min_override") && !s["b_min_override"].is_null()) {
      cfg.smtw.b_min_override = s["b_min_override"].get<double>();
    }
  }
  if (j.contains("rnd")) {
    const json& r = j["rnd"];
    if (r.contains("hidden")) cfg.rnd.hidden = r["hidden"].get<size_t>();
    if (r.contains("embed")) cfg.rnd.embed = r["embed"].get<size_t>();
    if (r.contains("lr")) cfg.rnd.lr = r["lr"].get<double>();
    if (r.contains("warmup")) cfg.rnd.warmup = r["warmup"].get<int>();
    if (r.contains("eps")) cfg.rnd.eps = r["eps"].get<double>();
  }
  if (j.contains("agent")) {
    const json& a = j["agent"];
    if (a.contains("epsilon")) cfg.agent.epsilon = a["epsilon"].get<double>();
    if (a.contains("gamma")) cfg.agent.gamma = a["gamma"].get<double>();
    if (a.contains("lr_sweep")) cfg.agent.lr_sweep = a["lr_sweep"].get<std::vector<double>>();
    if (a.contains("episodes")) cfg.agent.episodes = a["episodes"].get<int>();
    if (a.contains("episode_cap")) cfg.agent.episode_cap = a["episode_cap"].get<int>();
    if (a.contains("repeats")) cfg.agent.repeats = a["repeats"].get<int>();
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    if (e.contains("bootstrap_resamples"))
      cfg.eval.bootstrap_resamples = e["bootstrap_resamples"].get<int>();
    if (e.contains("histogram_bins")) cfg.eval.histogram_bins = e["histogram_bins"].get<int>();
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

}  // namespace smtw
