#include "smtw/gridworld.hpp"

#include <stdexcept>

namespace smtw {

const char* action_name(Action a) {
  switch (a) {
    case Action::kLeft: return "left";
    case Action::kRight: return "right";
    case Action::kUp: return "up";
    case Action::kDown: return "down";
    case Action::kTake: return "take";
    case Action::kOpen: return "open";
    case Action::kWait: return "wait";
  }
  return "?";
}

EnvInstance generate_instance(const EnvConfig& cfg, Rng& rng) {
  if (cfg.n < 2) {
    throw std::invalid_argument("generate_instance: n must be at least 2");
  }
  const int n = cfg.n;
  EnvInstance inst;
  inst.n = n;
  inst.seed = cfg.seed;
  inst.key_rows.resize(n);
  inst.door_rows.resize(n);
  for (int c = 0; c < n; ++c) {
    int key = static_cast<int>(rng.uniform_index(n));
    int door = static_cast<int>(rng.uniform_index(n - 1));
    if (door >= key) ++door;  // uniform over the remaining n-1 rows
    inst.key_rows[c] = key;
    inst.door_rows[c] = door;
  }
  inst.correct_key = static_cast<int>(rng.uniform_index(n));
  inst.correct_door = static_cast<int>(rng.uniform_index(n));
  inst.start_cell.row = static_cast<int>(rng.uniform_index(n));
  inst.start_cell.col = static_cast<int>(rng.uniform_index(n));
  return inst;
}

std::pair<EnvState, Observation> reset(const EnvInstance& instance) {
  EnvState s;
  s.agent = instance.start_cell;
  return {s, render(s, instance)};
}

Observation render(const EnvState& state, const EnvInstance& instance) {
  const int n = instance.n;
  Observation obs;
  obs.n = n;
  obs.pixels.assign(static_cast<size_t>(n) * n * 3, 0.0);
  auto lit = [&](int row, int col, int channel) {
    obs.pixels[static_cast<size_t>((row * n + col) * 3 + channel)] = 1.0;
  };
  for (int c = 0; c < n; ++c) {
    if (!(state.held_key && *state.held_key == c)) lit(instance.key_rows[c], c, 0);
    lit(instance.door_rows[c], c, 1);
  }
  if (state.held_key) lit(state.agent.row, state.agent.col, 0);
  lit(state.agent.row, state.agent.col, 2);
  return obs;
}

int ground_truth_state(const EnvState& state, const EnvInstance& instance) {
  const int n = instance.n;
  int held = state.held_key ? *state.held_key + 1 : 0;
  return (state.agent.row * n + state.agent.col) * (n + 1) + held;
}

StepResult step(const EnvState& state, Action action, const EnvInstance& instance,
                int episode_cap) {
  if (state.terminal) {
    throw std::logic_error("step: episode already over");
  }
  const int n = instance.n;
  EnvState next = state;
  double reward = -1.0;

  switch (action) {
    case Action::kLeft:
      if (next.agent.col > 0) --next.agent.col;
      break;
    case Action::kRight:
      if (next.agent.col < n - 1) ++next.agent.col;
      break;
    case Action::kUp:
      if (next.agent.row > 0) --next.agent.row;
      break;
    case Action::kDown:
      if (next.agent.row < n - 1) ++next.agent.row;
      break;
    case Action::kWait:
      reward = 0.0;
      break;
    case Action::kTake: {
      // A key is available here iff this cell is the home of an unheld key.
      int c = next.agent.col;
      bool available = instance.key_rows[c] == next.agent.row &&
                       !(next.held_key && *next.held_key == c);
      if (available) {
        next.held_key = c;  // a previously held key snaps back to its home
      } else {
        next.held_key.reset();
      }
      break;
    }
    case Action::kOpen: {
      bool on_goal_door = next.agent == instance.goal_cell();
      if (on_goal_door && next.held_key && *next.held_key == instance.correct_key) {
        reward = 100.0;
        next.terminal = true;
      } else {
        next.held_key.reset();
      }
      break;
    }
  }

  ++next.step_count;
  if (!next.terminal && next.step_count >= episode_cap) {
    next.terminal = true;
    next.truncated = true;
  }

  StepResult r;
  r.reward = reward;
  r.terminal = next.terminal && !next.truncated;
  r.truncated = next.truncated;
  r.obs = render(next, instance);
  r.state = std::move(next);
  return r;
}

}  // namespace smtw
