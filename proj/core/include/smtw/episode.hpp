#pragma once

#include <cstdint>
#include <vector>

#include "smtw/gridworld.hpp"

namespace smtw {

// Observations are stored packed (one byte per pixel, values 0/1) because a
// dataset holds hundreds of thousands of frames. Network code widens them to
// doubles at the input boundary.
using Frame = std::vector<uint8_t>;

Frame pack_frame(const Observation& obs);

inline void widen_frame(const Frame& f, double* out) {
  for (size_t i = 0; i < f.size(); ++i) out[i] = static_cast<double>(f[i]);
}

// One trajectory. Per-step arrays index transitions 0..length()-1; frames and
// ground-truth states have one extra trailing entry for the final state, which
// makes chain consistency (next_obs of t == obs of t+1) hold by construction.
struct Episode {
  uint64_t instance_seed = 0;
  int n = 0;
  std::vector<Frame> frames;    // length()+1
  std::vector<int> gts;         // length()+1
  std::vector<Action> actions;  // length()
  std::vector<double> rewards;  // length()
  bool terminal = false;        // ended at the goal
  bool truncated = false;       // ended at the step cap

  size_t length() const { return actions.size(); }
  double total_reward() const;

  struct TransitionView {
    const Frame& obs;
    int gts;
    Action action;
    double reward;
    const Frame& next_obs;
    int next_gts;
    bool terminal;
    bool truncated;
  };
  TransitionView transition(size_t t) const {
    bool last = t + 1 == actions.size();
    return {frames[t],     gts[t],     actions[t],         rewards[t],
            frames[t + 1], gts[t + 1], last && terminal,   last && truncated};
  }
};

struct Demonstration {
  Episode exploration;
  std::vector<Episode> exploits;  // 5 goal-reaching episodes
};

// Steps an environment instance and records the trajectory.
class Rollout {
 public:
  Rollout(const EnvInstance& instance, int episode_cap);

  const EnvState& state() const { return state_; }
  bool done() const { return state_.terminal; }

  double apply(Action a);

  Episode take_episode();

 private:
  const EnvInstance& instance_;
  int cap_;
  EnvState state_;
  Episode episode_;
};

}  // namespace smtw
