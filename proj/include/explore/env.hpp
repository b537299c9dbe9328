#pragma once

#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "explore/modulation.hpp"

namespace explore {

using Rng = std::mt19937_64;

/// Finite MDP with deterministic transitions, a single absorbing goal and
/// lethal lava transitions. The discount is treated as a per-step
/// continuation probability during rollouts.
struct TabularMDP {
  int num_states = 0;
  int num_actions = 0;
  double gamma = 0.99;
  int start_state = 0;
  int goal_state = -1;
  std::vector<int> next;      // [s * A + a] -> next state (s itself on lava)
  std::vector<double> reward; // [s * A + a]
  std::vector<char> lava;     // [s * A + a] -> transition enters lava

  int idx(int s, int a) const { return s * num_actions + a; }
};

struct LavaWorld {
  std::vector<std::string> grid;  // '#', '.', 'S', 'G'
  TabularMDP mdp;
  std::vector<int> cell_of_state;  // row * width + col per state
  int width = 0;
  int height = 0;
};

/// Fixed four-rooms layout: 96 reachable floor cells, lava everywhere else,
/// start in the top-left corner of the top-left room, absorbing goal in the
/// top-left corner of the top-right room.
LavaWorld build_lavaworld();

/// Parses an ASCII map ('#' lava, '.' floor, 'S' start, 'G' goal).
LavaWorld build_from_map(const std::vector<std::string>& rows, double gamma = 0.99);
LavaWorld load_map(const std::string& path, double gamma = 0.99);

enum class StepCause { None, Lava, Timeout };

struct StepResult {
  int next_state = 0;
  double reward = 0.0;
  bool terminated = false;
  StepCause cause = StepCause::None;
};

StepResult step(const TabularMDP& mdp, int state, int action, Rng& rng);

/// Plain value table, one entry per (state, action).
struct QTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> values;

  QTable() = default;
  QTable(int states, int actions, double fill = 0.0)
      : num_states(states), num_actions(actions),
        values(static_cast<std::size_t>(states) * actions, fill) {}
  double& at(int s, int a) { return values[static_cast<std::size_t>(s) * num_actions + a]; }
  double at(int s, int a) const { return values[static_cast<std::size_t>(s) * num_actions + a]; }
};

using PolicyTable = std::vector<std::vector<double>>;  // per-state distribution

/// Exact probability that one episode started at the start state reaches the
/// goal before lava or stochastic timeout, via a direct linear solve of
///   p(s) = sum_a pi(a|s) * gamma * p(next(s,a)),  p(goal)=1, p(lava)=0.
double success_probability(const TabularMDP& mdp, const PolicyTable& policy);

/// E[V_after(s0) - V_before(s0)], each value from a direct linear solve of
/// the policy evaluation equations.
double learning_progress(const TabularMDP& mdp, const PolicyTable& before,
                         const PolicyTable& after);

/// Per-state z-modulated distribution derived from a scalar Q table
/// (requires repeat_prob = 0 so the policy is a function of state alone).
PolicyTable modulated_policy_table(const TabularMDP& mdp, const QTable& q, const Modulation& z);

/// Greedy over Q with ties split uniformly.
PolicyTable greedy_policy_table(const TabularMDP& mdp, const QTable& q, double tol = 1e-9);

QTable optimal_q(const TabularMDP& mdp, double tol = 1e-10);

/// Stationary-setting oracle: LP(z) is exactly the reward-encounter
/// probability of the z-modulated policy built from q.
double exact_lp_oracle(const TabularMDP& mdp, const QTable& q, const Modulation& z);

/// Suppresses q(s,a) by 0.1 for each distinct into-lava transition in the
/// trajectory; returns true iff some suppressed pair had never been seen
/// before (the "something was learned" event).
bool lava_suppression_update(const TabularMDP& mdp, QTable& q,
                             std::span<const std::pair<int, int>> trajectory,
                             std::unordered_set<int>& seen);

inline double binary_lp_proxy(bool new_lava_found) { return new_lava_found ? 1.0 : 0.0; }

}  // namespace explore
