#include <set>

#include <stdexcept>

#include "doctest.h"
#include "reference_env.hpp"
#include "smtw/gridworld.hpp"

using namespace smtw;

namespace {

EnvInstance make(int n, uint64_t seed) {
  EnvConfig cfg{n, 2000, seed};
  Rng rng(seed);
  return generate_instance(cfg, rng);
}

}  // namespace

TEST_CASE("generation rejects n below 2") {
  EnvConfig cfg{1, 2000, 0};
  Rng rng(0);
  CHECK_THROWS_AS(generate_instance(cfg, rng), std::invalid_argument);
}

TEST_CASE("one key and one door per column, never colocated") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    EnvInstance inst = make(5, seed);
    REQUIRE(inst.key_rows.size() == 5);
    REQUIRE(inst.door_rows.size() == 5);
    for (int c = 0; c < 5; ++c) {
      CHECK(inst.key_rows[c] != inst.door_rows[c]);
      CHECK(inst.key_rows[c] >= 0);
      CHECK(inst.key_rows[c] < 5);
      CHECK(inst.door_rows[c] >= 0);
      CHECK(inst.door_rows[c] < 5);
    }
    CHECK(inst.correct_key >= 0);
    CHECK(inst.correct_key < 5);
    CHECK(inst.correct_door >= 0);
    CHECK(inst.correct_door < 5);
  }
}

TEST_CASE("same seed twice gives identical instances") {
  EnvInstance a = make(5, 77);
  EnvInstance b = make(5, 77);
  CHECK(a.key_rows == b.key_rows);
  CHECK(a.door_rows == b.door_rows);
  CHECK(a.correct_key == b.correct_key);
  CHECK(a.correct_door == b.correct_door);
  CHECK(a.start_cell == b.start_cell);
}

TEST_CASE("n=2 layouts only use the two legal row assignments") {
  // Exhaust the per-column support over many seeds: rows must be one of
  // (0,1) or (1,0), and both appear.
  std::set<std::pair<int, int>> support;
  for (uint64_t seed = 0; seed < 10000; ++seed) {
    EnvInstance inst = make(2, seed);
    for (int c = 0; c < 2; ++c) {
      support.insert({inst.key_rows[c], inst.door_rows[c]});
    }
  }
  CHECK(support == std::set<std::pair<int, int>>{{0, 1}, {1, 0}});
}

TEST_CASE("reset restores the start state deterministically") {
  EnvInstance inst = make(5, 5);
  auto [s1, o1] = reset(inst);
  auto [s2, o2] = reset(inst);
  CHECK(s1.agent == inst.start_cell);
  CHECK_FALSE(s1.held_key.has_value());
  CHECK_FALSE(s1.terminal);
  CHECK(s1.step_count == 0);
  CHECK(o1.pixels == o2.pixels);
  CHECK(s1.agent == s2.agent);
}

TEST_CASE("reset observation channel counts") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    EnvInstance inst = make(5, seed + 1000);
    auto [state, obs] = reset(inst);
    int keys = 0, doors = 0, agents = 0;
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        keys += obs.at(r, c, 0) == 1.0;
        doors += obs.at(r, c, 1) == 1.0;
        agents += obs.at(r, c, 2) == 1.0;
      }
    }
    CHECK(keys == 5);
    CHECK(doors == 5);
    CHECK(agents == 1);
  }
}

TEST_CASE("wait leaves the agent in place and pays zero") {
  EnvInstance inst = make(5, 11);
  auto [state, obs] = reset(inst);
  StepResult r = step(state, Action::kWait, inst, 2000);
  CHECK(r.reward == 0.0);
  CHECK(r.state.agent == state.agent);
  CHECK_FALSE(r.terminal);
}

TEST_CASE("opening the correct door with the correct key pays 100 and terminates") {
  EnvInstance inst = make(5, 12);
  EnvState state;
  state.agent = inst.goal_cell();
  state.held_key = inst.correct_key;
  StepResult r = step(state, Action::kOpen, inst, 2000);
  CHECK(r.reward == 100.0);
  CHECK(r.terminal);
  CHECK_FALSE(r.truncated);
  CHECK(r.state.terminal);
}

TEST_CASE("take on an empty cell returns the held key to its home") {
  EnvInstance inst = make(5, 13);
  // Stand on key 2's home and take it.
  EnvState state;
  state.agent = inst.key_cell(2);
  StepResult took = step(state, Action::kTake, inst, 2000);
  REQUIRE(took.state.held_key == 2);
  CHECK(took.reward == -1.0);

  // Carry it to a keyless cell: the home goes dark, the agent cell lights up.
  Cell empty{};
  bool found = false;
  for (int r = 0; r < 5 && !found; ++r) {
    for (int c = 0; c < 5 && !found; ++c) {
      bool is_key = false;
      for (int k = 0; k < 5; ++k) {
        if (inst.key_cell(k) == Cell{r, c}) is_key = true;
      }
      if (!is_key) {
        empty = {r, c};
        found = true;
      }
    }
  }
  EnvState moved = took.state;
  moved.agent = empty;
  Observation carried = render(moved, inst);
  CHECK(carried.at(inst.key_rows[2], 2, 0) == 0.0);
  CHECK(carried.at(empty.row, empty.col, 0) == 1.0);

  // Take on the empty cell: nothing acquired, key 2 reappears at its home.
  StepResult dropped = step(moved, Action::kTake, inst, 2000);
  CHECK(dropped.reward == -1.0);
  CHECK_FALSE(dropped.state.held_key.has_value());
  CHECK(dropped.obs.at(inst.key_rows[2], 2, 0) == 1.0);
  CHECK(dropped.obs.at(empty.row, empty.col, 0) == 0.0);
}

TEST_CASE("moving off-grid is a position no-op that still costs one") {
  EnvInstance inst = make(5, 14);
  EnvState state;
  state.agent = {0, 0};
  StepResult r = step(state, Action::kUp, inst, 2000);
  CHECK(r.state.agent == Cell{0, 0});
  CHECK(r.reward == -1.0);
  r = step(state, Action::kLeft, inst, 2000);
  CHECK(r.state.agent == Cell{0, 0});
}

TEST_CASE("stepping a terminal state throws") {
  EnvInstance inst = make(5, 15);
  EnvState state;
  state.terminal = true;
  CHECK_THROWS_AS(step(state, Action::kWait, inst, 2000), std::logic_error);
}

TEST_CASE("hitting the cap truncates; the goal is not a truncation") {
  EnvInstance inst = make(5, 16);
  auto [state, obs] = reset(inst);
  StepResult r = step(state, Action::kWait, inst, 1);
  CHECK(r.state.terminal);
  CHECK(r.state.truncated);
  CHECK(r.truncated);
  CHECK_FALSE(r.terminal);

  EnvState at_goal;
  at_goal.agent = inst.goal_cell();
  at_goal.held_key = inst.correct_key;
  StepResult g = step(at_goal, Action::kOpen, inst, 1);
  CHECK(g.terminal);
  CHECK_FALSE(g.truncated);
}

TEST_CASE("render matches the reference renderer on random states") {
  Rng rng(99);
  for (int i = 0; i < 50; ++i) {
    EnvInstance inst = make(5, 3000 + i);
    refenv::RefWorld world = refenv::from_instance(inst);
    EnvState state;
    state.agent = {static_cast<int>(rng.uniform_index(5)),
                   static_cast<int>(rng.uniform_index(5))};
    refenv::RefState ref{state.agent.row, state.agent.col, -1, false};
    if (rng.next_double() < 0.5) {
      int held = static_cast<int>(rng.uniform_index(5));
      state.held_key = held;
      ref.held = held;
    }
    CHECK(render(state, inst).pixels == refenv::ref_render(world, ref));
  }
}

TEST_CASE("agent on a door lights both door and agent channels") {
  EnvInstance inst = make(5, 17);
  EnvState state;
  state.agent = inst.door_cell(3);
  Observation obs = render(state, inst);
  CHECK(obs.at(state.agent.row, state.agent.col, 1) == 1.0);
  CHECK(obs.at(state.agent.row, state.agent.col, 2) == 1.0);
}

TEST_CASE("door channel always sums to n") {
  EnvInstance inst = make(5, 18);
  Rng rng(4);
  EnvState state = reset(inst).first;
  for (int t = 0; t < 300 && !state.terminal; ++t) {
    StepResult r = step(state, static_cast<Action>(rng.uniform_index(kNumActions)), inst, 400);
    double doors = 0.0;
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 5; ++col) doors += r.obs.at(row, col, 1);
    }
    CHECK(doors == 5.0);
    state = r.state;
  }
}

TEST_CASE("key channel accounts for all n keys") {
  // Lit key cells equal n unless the carried key overlaps another key's home,
  // in which case two keys share one pixel.
  EnvInstance inst = make(5, 19);
  Rng rng(5);
  EnvState state = reset(inst).first;
  for (int t = 0; t < 500 && !state.terminal; ++t) {
    StepResult r = step(state, static_cast<Action>(rng.uniform_index(kNumActions)), inst, 600);
    state = r.state;
    int lit = 0;
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 5; ++col) lit += r.obs.at(row, col, 0) == 1.0;
    }
    bool overlap = false;
    if (state.held_key) {
      for (int k = 0; k < 5; ++k) {
        if (k != *state.held_key && inst.key_cell(k) == state.agent) overlap = true;
      }
    }
    CHECK(lit == (overlap ? 4 : 5));
  }
}

TEST_CASE("rewards only ever take the three task values") {
  EnvInstance inst = make(5, 20);
  Rng rng(6);
  EnvState state = reset(inst).first;
  for (int t = 0; t < 1000 && !state.terminal; ++t) {
    StepResult r = step(state, static_cast<Action>(rng.uniform_index(kNumActions)), inst, 1200);
    CHECK((r.reward == 0.0 || r.reward == -1.0 || r.reward == 100.0));
    state = r.state;
  }
}

TEST_CASE("ground-truth codes: injectivity, range and determinism") {
  EnvInstance inst = make(3, 21);
  std::set<int> codes;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      for (int held = -1; held < 3; ++held) {
        EnvState s;
        s.agent = {r, c};
        if (held >= 0) s.held_key = held;
        const int code = ground_truth_state(s, inst);
        CHECK(code >= 0);
        CHECK(code < ground_truth_state_count(3));
        CHECK(code == ground_truth_state(s, inst));
        codes.insert(code);
      }
    }
  }
  CHECK(static_cast<int>(codes.size()) == ground_truth_state_count(3));

  EnvState a, b;
  a.agent = {1, 1};
  b.agent = {1, 1};
  b.held_key = 0;
  CHECK(ground_truth_state(a, inst) != ground_truth_state(b, inst));
}

TEST_CASE("simulator agrees with the reference rules transition for transition") {
  // Breadth-first over all reachable (cell, held) states of n=3 instances,
  // probing all seven actions in each.
  for (int i = 0; i < 20; ++i) {
    EnvInstance inst = make(3, 4000 + i);
    refenv::RefWorld world = refenv::from_instance(inst);

    std::set<int> visited;
    std::vector<refenv::RefState> frontier{
        {inst.start_cell.row, inst.start_cell.col, -1, false}};
    while (!frontier.empty()) {
      refenv::RefState ref = frontier.back();
      frontier.pop_back();
      const int code = (ref.row * 3 + ref.col) * 4 + ref.held + 1;
      if (!visited.insert(code).second) continue;

      for (int a = 0; a < kNumActions; ++a) {
        EnvState state;
        state.agent = {ref.row, ref.col};
        if (ref.held >= 0) state.held_key = ref.held;

        refenv::RefStep expected = refenv::ref_transition(world, ref, a);
        StepResult actual = step(state, static_cast<Action>(a), inst, 1 << 20);

        CHECK(actual.reward == expected.reward);
        CHECK(actual.terminal == expected.goal);
        CHECK(actual.state.agent.row == expected.next.row);
        CHECK(actual.state.agent.col == expected.next.col);
        const int actual_held =
            actual.state.held_key ? *actual.state.held_key : -1;
        CHECK(actual_held == expected.next.held);
        CHECK(actual.obs.pixels == refenv::ref_render(world, expected.next));

        if (!expected.next.done) frontier.push_back(expected.next);
      }
    }
    // Every (cell, held) combination is reachable in KeysDoors.
    CHECK(visited.size() == 9u * 4u);
  }
}
