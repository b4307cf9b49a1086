#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "smtw/prng.hpp"

namespace smtw {

// Deterministic KeysDoors grid-world. Every column of the n x n grid holds
// one key and one door at distinct rows. The task is to take the correct key
// and open the correct door with it; doing so pays +100 and ends the episode.
// Every other action costs -1 except wait, which is free.

enum class Action : int {
  kLeft = 0,
  kRight = 1,
  kUp = 2,
  kDown = 3,
  kTake = 4,
  kOpen = 5,
  kWait = 6,
};

inline constexpr int kNumActions = 7;

const char* action_name(Action a);

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

struct EnvConfig {
  int n = 5;
  int episode_cap = 2000;
  uint64_t seed = 0;
};

// A sampled layout plus the goal choice and a fixed start cell. `seed` is the
// stream seed the instance was generated from and doubles as its identity in
// dataset files and train/test disjointness checks.
struct EnvInstance {
  int n = 0;
  std::vector<int> key_rows;   // key_rows[c] = row of the key in column c
  std::vector<int> door_rows;  // door_rows[c] = row of the door in column c
  int correct_key = 0;
  int correct_door = 0;
  Cell start_cell;
  uint64_t seed = 0;

  Cell key_cell(int col) const { return {key_rows[col], col}; }
  Cell door_cell(int col) const { return {door_rows[col], col}; }
  Cell goal_cell() const { return door_cell(correct_door); }
};

struct EnvState {
  Cell agent;
  std::optional<int> held_key;  // column index of the held key, if any
  bool terminal = false;        // no further step is legal
  bool truncated = false;       // terminal due to the step cap, not the goal
  int step_count = 0;
};

// n x n x 3 pixels in [0,1], laid out [row][col][channel].
// Channel 0: keys (home cells of unheld keys; the agent's cell if one is held).
// Channel 1: doors. Channel 2: agent. Lit cells are exactly 1.0.
struct Observation {
  int n = 0;
  std::vector<double> pixels;

  double at(int row, int col, int channel) const {
    return pixels[static_cast<size_t>((row * n + col) * 3 + channel)];
  }
};

struct StepResult {
  EnvState state;
  Observation obs;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
};

// Samples a layout: per column, key and door rows uniformly without
// replacement; then correct key, correct door, start row, start column, in
// that draw order. Rejects n < 2.
EnvInstance generate_instance(const EnvConfig& cfg, Rng& rng);

// Agent at the start cell, nothing held, step count zero.
std::pair<EnvState, Observation> reset(const EnvInstance& instance);

// Applies one action. Stepping a terminal state is a contract violation and
// throws. Reaching `episode_cap` marks the state terminal with the truncation
// flag set; goal termination takes precedence when both happen on one step.
StepResult step(const EnvState& state, Action action, const EnvInstance& instance,
                int episode_cap);

Observation render(const EnvState& state, const EnvInstance& instance);

// Injective code of (agent cell, held key): (row*n + col)*(n+1) + held+1,
// with "nothing held" encoded as 0. Range [0, n^2*(n+1)).
int ground_truth_state(const EnvState& state, const EnvInstance& instance);

inline int ground_truth_state_count(int n) { return n * n * (n + 1); }

}  // namespace smtw
