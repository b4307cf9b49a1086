#include "smtw/episode.hpp"

#include <numeric>

namespace smtw {

Frame pack_frame(const Observation& obs) {
  Frame f(obs.pixels.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = obs.pixels[i] != 0.0 ? 1 : 0;
  return f;
}

double Episode::total_reward() const {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

Rollout::Rollout(const EnvInstance& instance, int episode_cap)
    : instance_(instance), cap_(episode_cap) {
  auto [state, obs] = reset(instance);
  state_ = state;
  episode_.instance_seed = instance.seed;
  episode_.n = instance.n;
  episode_.frames.push_back(pack_frame(obs));
  episode_.gts.push_back(ground_truth_state(state_, instance));
}

double Rollout::apply(Action a) {
  StepResult r = step(state_, a, instance_, cap_);
  state_ = r.state;
  episode_.frames.push_back(pack_frame(r.obs));
  episode_.gts.push_back(ground_truth_state(state_, instance_));
  episode_.actions.push_back(a);
  episode_.rewards.push_back(r.reward);
  episode_.terminal = r.terminal;
  episode_.truncated = r.truncated;
  return r.reward;
}

Episode Rollout::take_episode() { return std::move(episode_); }

}  // namespace smtw
