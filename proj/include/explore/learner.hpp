#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace explore {

using Rng = std::mt19937_64;

/// Tabular distributional value table: n quantile estimates per
/// (state, action) on the midpoint grid.
struct QuantileQTable {
  int num_states = 0;
  int num_actions = 0;
  int num_quantiles = 11;
  double learning_rate = 0.05;
  std::vector<double> values;  // [s][a][j]

  QuantileQTable() = default;
  QuantileQTable(int states, int actions, int quantiles, double lr = 0.05);

  std::span<double> quantiles(int s, int a);
  std::span<const double> quantiles(int s, int a) const;
  double mean(int s, int a) const;
};

struct Transition {
  int state = 0;
  int action = 0;
  std::vector<double> rewards;  // n-step fragment, in visitation order
  int bootstrap_state = 0;
  bool terminal = false;
};

/// n-step double-Q targets: discounted reward sum plus gamma^k times the
/// target table's quantiles at the bootstrap state, for the action greedy
/// under the online table. Terminal transitions use only the reward sum.
std::vector<double> td_target(const QuantileQTable& online, const QuantileQTable& target,
                              const Transition& t, double gamma);

/// One gradient step of the asymmetric quantile Huber loss
///   sum_j sum_m |nu_j - I[T_m < q_j]| * Huber_kappa(T_m - q_j) / n
/// at the configured learning rate, scaled by the importance weight.
/// Returns the mean absolute TD error for prioritization.
double quantile_huber_update(QuantileQTable& table, const Transition& t,
                             std::span<const double> targets, double weight = 1.0,
                             double kappa = 1.0);

/// Proportional prioritized replay: sampling probability prio^alpha, with
/// importance weights (N p)^-beta normalized by the batch maximum.
class PrioritizedReplay {
 public:
  explicit PrioritizedReplay(std::size_t capacity, double alpha = 0.6, double beta = 0.3);

  std::size_t size() const { return entries_.size(); }
  std::size_t insertions() const { return insertions_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  /// New transitions enter at the current max priority (1 on an empty buffer)
  /// unless an explicit positive priority is given.
  void add(Transition t, std::optional<double> priority = std::nullopt);

  struct Batch {
    std::vector<std::size_t> indices;
    std::vector<double> weights;
  };
  Batch sample(int batch_size, Rng& rng) const;

  const Transition& transition(std::size_t i) const { return entries_.at(i); }
  double priority(std::size_t i) const { return priorities_.at(i); }
  void set_priority(std::size_t i, double priority);

  void save_priorities(std::ostream& out) const;

 private:
  std::size_t capacity_;
  double alpha_;
  double beta_;
  std::vector<Transition> entries_;
  std::vector<double> priorities_;
  std::size_t cursor_ = 0;
  std::size_t insertions_ = 0;
};

/// One learner iteration: sample a batch, build targets against the target
/// table, apply weighted quantile updates, refresh priorities (|TD| + 1e-6),
/// and sync the target table every sync_period updates.
void learner_step(QuantileQTable& online, QuantileQTable& target, PrioritizedReplay& replay,
                  int batch_size, double gamma, Rng& rng, long& update_count,
                  int sync_period = 250);

void save_table(const QuantileQTable& table, std::ostream& out);
QuantileQTable load_table(std::istream& in);

}  // namespace explore
