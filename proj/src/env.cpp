#include "explore/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

#include <Eigen/Dense>

#include "explore/policy.hpp"

namespace explore {

namespace {

// Four rooms of 24/24/24/20 floor cells plus four doorways = 96 states.
const std::vector<std::string> kLavaWorldMap = {
    "###############",
    "#S.....#G.....#",
    "#.............#",
    "#......#......#",
    "#......#......#",
    "###.######.####",
    "#......#.....##",
    "#......#.....##",
    "#............##",
    "#......#.....##",
    "###############",
};

void check_indices(const TabularMDP& mdp, int state, int action) {
  if (state < 0 || state >= mdp.num_states) throw std::out_of_range("invalid state index");
  if (action < 0 || action >= mdp.num_actions) throw std::out_of_range("invalid action index");
}

void check_policy(const TabularMDP& mdp, const PolicyTable& policy) {
  if (static_cast<int>(policy.size()) != mdp.num_states) {
    throw std::invalid_argument("policy must be defined on all states");
  }
  for (const auto& dist : policy) {
    if (static_cast<int>(dist.size()) != mdp.num_actions) {
      throw std::invalid_argument("policy row has wrong action count");
    }
  }
}

// V^pi via direct solve of (I - gamma P_pi) V = r_pi. Lava transitions
// contribute reward but no continuation value.
Eigen::VectorXd policy_values(const TabularMDP& mdp, const PolicyTable& policy) {
  const int n = mdp.num_states;
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double pi = policy[s][a];
      if (pi == 0.0) continue;
      const int i = mdp.idx(s, a);
      rhs(s) += pi * mdp.reward[i];
      if (!mdp.lava[i]) system(s, mdp.next[i]) -= mdp.gamma * pi;
    }
  }
  Eigen::VectorXd v = system.partialPivLu().solve(rhs);
  const double residual = (system * v - rhs).norm();
  if (!(residual < 1e-10)) throw std::runtime_error("policy value solve did not converge");
  return v;
}

}  // namespace

LavaWorld build_from_map(const std::vector<std::string>& rows, double gamma) {
  if (rows.empty()) throw std::invalid_argument("empty map");
  LavaWorld world;
  world.grid = rows;
  world.height = static_cast<int>(rows.size());
  world.width = static_cast<int>(rows[0].size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != world.width) throw std::invalid_argument("ragged map rows");
  }

  std::vector<int> state_of_cell(world.height * world.width, -1);
  int start_cell = -1;
  int goal_cell = -1;
  for (int r = 0; r < world.height; ++r) {
    for (int c = 0; c < world.width; ++c) {
      const char ch = rows[r][c];
      if (ch == '#') continue;
      if (ch != '.' && ch != 'S' && ch != 'G') throw std::invalid_argument("bad map character");
      const int cell = r * world.width + c;
      state_of_cell[cell] = static_cast<int>(world.cell_of_state.size());
      world.cell_of_state.push_back(cell);
      if (ch == 'S') {
        if (start_cell >= 0) throw std::invalid_argument("map has multiple start cells");
        start_cell = cell;
      }
      if (ch == 'G') {
        if (goal_cell >= 0) throw std::invalid_argument("map has multiple goal cells");
        goal_cell = cell;
      }
    }
  }
  if (start_cell < 0 || goal_cell < 0) throw std::invalid_argument("map needs one S and one G");

  TabularMDP& mdp = world.mdp;
  mdp.num_states = static_cast<int>(world.cell_of_state.size());
  mdp.num_actions = 4;
  mdp.gamma = gamma;
  mdp.start_state = state_of_cell[start_cell];
  mdp.goal_state = state_of_cell[goal_cell];
  mdp.next.assign(mdp.num_states * 4, 0);
  mdp.reward.assign(mdp.num_states * 4, 0.0);
  mdp.lava.assign(mdp.num_states * 4, 0);

  const int dr[4] = {-1, 1, 0, 0};  // up, down, left, right
  const int dc[4] = {0, 0, -1, 1};
  for (int s = 0; s < mdp.num_states; ++s) {
    const int cell = world.cell_of_state[s];
    const int r = cell / world.width;
    const int c = cell % world.width;
    for (int a = 0; a < 4; ++a) {
      const int i = mdp.idx(s, a);
      if (s == mdp.goal_state) {
        mdp.next[i] = s;  // absorbing
        continue;
      }
      const int nr = r + dr[a];
      const int nc = c + dc[a];
      if (nr < 0 || nr >= world.height || nc < 0 || nc >= world.width ||
          rows[nr][nc] == '#') {
        mdp.next[i] = s;
        mdp.lava[i] = 1;  // off-grid counts as lava too
        continue;
      }
      const int target = state_of_cell[nr * world.width + nc];
      mdp.next[i] = target;
      if (target == mdp.goal_state) mdp.reward[i] = 1.0;
    }
  }

  // All floor cells must be reachable from the start.
  std::vector<char> reached(mdp.num_states, 0);
  std::queue<int> frontier;
  frontier.push(mdp.start_state);
  reached[mdp.start_state] = 1;
  while (!frontier.empty()) {
    const int s = frontier.front();
    frontier.pop();
    for (int a = 0; a < 4; ++a) {
      const int i = mdp.idx(s, a);
      if (mdp.lava[i]) continue;
      if (!reached[mdp.next[i]]) {
        reached[mdp.next[i]] = 1;
        frontier.push(mdp.next[i]);
      }
    }
  }
  if (std::count(reached.begin(), reached.end(), 1) != mdp.num_states) {
    throw std::invalid_argument("map contains unreachable floor cells");
  }
  return world;
}

LavaWorld build_lavaworld() {
  LavaWorld world = build_from_map(kLavaWorldMap);
  if (world.mdp.num_states != 96) throw std::logic_error("lavaworld layout must have 96 states");
  return world;
}

LavaWorld load_map(const std::string& path, double gamma) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  return build_from_map(rows, gamma);
}

StepResult step(const TabularMDP& mdp, int state, int action, Rng& rng) {
  check_indices(mdp, state, action);
  const int i = mdp.idx(state, action);
  StepResult result;
  if (mdp.lava[i]) {
    result.next_state = state;
    result.terminated = true;
    result.cause = StepCause::Lava;
    return result;
  }
  result.next_state = mdp.next[i];
  result.reward = mdp.reward[i];
  if (mdp.gamma < 1.0 &&
      std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 1.0 - mdp.gamma) {
    result.terminated = true;
    result.cause = StepCause::Timeout;
  }
  return result;
}

double success_probability(const TabularMDP& mdp, const PolicyTable& policy) {
  check_policy(mdp, policy);
  if (mdp.goal_state < 0) throw std::invalid_argument("mdp has no goal state");
  if (mdp.start_state == mdp.goal_state) return 1.0;

  // Unknowns: all non-goal states.
  const int n = mdp.num_states;
  std::vector<int> row_of(n, -1);
  int rows = 0;
  for (int s = 0; s < n; ++s) {
    if (s != mdp.goal_state) row_of[s] = rows++;
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(rows, rows);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  for (int s = 0; s < n; ++s) {
    if (s == mdp.goal_state) continue;
    const int row = row_of[s];
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double pi = policy[s][a];
      if (pi == 0.0) continue;
      const int i = mdp.idx(s, a);
      if (mdp.lava[i]) continue;  // p = 0 past lava
      const int sn = mdp.next[i];
      if (sn == mdp.goal_state) {
        rhs(row) += mdp.gamma * pi;
      } else {
        system(row, row_of[sn]) -= mdp.gamma * pi;
      }
    }
  }
  Eigen::VectorXd p = system.partialPivLu().solve(rhs);
  const double residual = (system * p - rhs).norm();
  if (!(residual < 1e-10)) throw std::runtime_error("success probability solve did not converge");
  return p(row_of[mdp.start_state]);
}

double learning_progress(const TabularMDP& mdp, const PolicyTable& before,
                         const PolicyTable& after) {
  const Eigen::VectorXd v_before = policy_values(mdp, before);
  const Eigen::VectorXd v_after = policy_values(mdp, after);
  return v_after(mdp.start_state) - v_before(mdp.start_state);
}

PolicyTable modulated_policy_table(const TabularMDP& mdp, const QTable& q, const Modulation& z) {
  if (z.repeat_prob != 0.0) {
    throw std::invalid_argument("modulated_policy_table requires repeat_prob = 0");
  }
  if (q.num_states != mdp.num_states || q.num_actions != mdp.num_actions) {
    throw std::invalid_argument("Q table shape does not match MDP");
  }
  PolicyTable policy(mdp.num_states);
  std::vector<QuantileVector> per_action(mdp.num_actions);
  for (auto& qv : per_action) qv.values.resize(1);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) per_action[a].values[0] = q.at(s, a);
    policy[s] = action_distribution(per_action, z, std::nullopt);
  }
  return policy;
}

PolicyTable greedy_policy_table(const TabularMDP& mdp, const QTable& q, double tol) {
  if (q.num_states != mdp.num_states || q.num_actions != mdp.num_actions) {
    throw std::invalid_argument("Q table shape does not match MDP");
  }
  PolicyTable policy(mdp.num_states, std::vector<double>(mdp.num_actions, 0.0));
  for (int s = 0; s < mdp.num_states; ++s) {
    double best = q.at(s, 0);
    for (int a = 1; a < mdp.num_actions; ++a) best = std::max(best, q.at(s, a));
    std::vector<int> argmax;
    for (int a = 0; a < mdp.num_actions; ++a) {
      if (q.at(s, a) >= best - tol) argmax.push_back(a);
    }
    for (int a : argmax) policy[s][a] = 1.0 / argmax.size();
  }
  return policy;
}

QTable optimal_q(const TabularMDP& mdp, double tol) {
  QTable q(mdp.num_states, mdp.num_actions, 0.0);
  QTable next_q = q;
  for (int iter = 0; iter < 1000000; ++iter) {
    double delta = 0.0;
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        const int i = mdp.idx(s, a);
        double value = mdp.reward[i];
        if (!mdp.lava[i]) {
          const int sn = mdp.next[i];
          double best = q.at(sn, 0);
          for (int an = 1; an < mdp.num_actions; ++an) best = std::max(best, q.at(sn, an));
          value += mdp.gamma * best;
        }
        delta = std::max(delta, std::abs(value - q.at(s, a)));
        next_q.at(s, a) = value;
      }
    }
    std::swap(q, next_q);
    if (delta < tol) return q;
  }
  throw std::runtime_error("value iteration did not converge");
}

double exact_lp_oracle(const TabularMDP& mdp, const QTable& q, const Modulation& z) {
  return success_probability(mdp, modulated_policy_table(mdp, q, z));
}

bool lava_suppression_update(const TabularMDP& mdp, QTable& q,
                             std::span<const std::pair<int, int>> trajectory,
                             std::unordered_set<int>& seen) {
  bool new_found = false;
  std::unordered_set<int> in_this_update;
  for (const auto& [s, a] : trajectory) {
    check_indices(mdp, s, a);
    const int i = mdp.idx(s, a);
    if (!mdp.lava[i]) continue;
    if (!in_this_update.insert(i).second) continue;  // once per update call
    q.at(s, a) -= 0.1;
    if (seen.insert(i).second) new_found = true;
  }
  return new_found;
}

}  // namespace explore
