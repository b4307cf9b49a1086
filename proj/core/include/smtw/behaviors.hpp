#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "smtw/episode.hpp"
#include "smtw/gridworld.hpp"
#include "smtw/prng.hpp"

namespace smtw {

// Scripted controllers used to probe what a bonus encourages. All of them are
// pure functions of (instance, seed).
enum class BehaviorKind : int {
  kDemonstrator = 0,
  kRandom = 1,
  kDemonstratorInverse = 2,
  kDemonstratorRandomOrder = 3,
  kDummyDemonstrator = 4,
  kStandingStill = 5,
  kWaitingDemonstrator = 6,
  kUnsafeDemonstrator = 7,
};

inline constexpr int kNumBehaviors = 8;
inline constexpr BehaviorKind kAllBehaviors[kNumBehaviors] = {
    BehaviorKind::kDemonstrator,        BehaviorKind::kRandom,
    BehaviorKind::kDemonstratorInverse, BehaviorKind::kDemonstratorRandomOrder,
    BehaviorKind::kDummyDemonstrator,   BehaviorKind::kStandingStill,
    BehaviorKind::kWaitingDemonstrator, BehaviorKind::kUnsafeDemonstrator,
};

const char* behavior_name(BehaviorKind kind);
BehaviorKind behavior_from_name(std::string_view name);

struct BehaviorConfig {
  // Demonstrator-style scripts terminate at the goal well under this cap;
  // hitting it is treated as a script bug.
  int demonstrator_cap = 2000;
  // Behaviors that need not reach the goal run to this cap.
  int free_cap = 1000;
  double wait_prob = 0.1;  // waiting demonstrator
};

// Column-first movement plan: align the column, then the row. Length equals
// the Manhattan distance.
std::vector<Action> navigate(Cell from, Cell to);

// Key/door trial plan: keys left to right, and for each key all doors left to
// right. Pairs are (key column, door column).
std::vector<std::pair<int, int>> canonical_trial_order(int n);

// Runs the trial script under a given ordering: navigate to the key, take it,
// navigate to the door, open. Ends at the +100 transition; throws if the plan
// is exhausted or the cap is hit first.
Episode run_demonstrator(const EnvInstance& instance,
                         std::span<const std::pair<int, int>> order, int episode_cap);

Episode run_behavior(BehaviorKind kind, const EnvInstance& instance, Rng& rng,
                     const BehaviorConfig& cfg = {});

// One canonical exploration episode plus five direct goal runs.
Demonstration make_demonstration(const EnvInstance& instance, const BehaviorConfig& cfg = {});

// per_env bundles per instance, in instance order. The canonical demonstrator
// is deterministic, so bundles for one instance are identical; duplicates are
// kept so dataset sizes match the configured counts.
std::vector<Demonstration> generate_demonstrations(std::span<const EnvInstance> instances,
                                                   int per_env,
                                                   const BehaviorConfig& cfg = {});

}  // namespace smtw
