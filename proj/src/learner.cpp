#include "explore/learner.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "explore/policy.hpp"

namespace explore {

QuantileQTable::QuantileQTable(int states, int actions, int quantiles, double lr)
    : num_states(states), num_actions(actions), num_quantiles(quantiles), learning_rate(lr),
      values(static_cast<std::size_t>(states) * actions * quantiles, 0.0) {
  if (states < 1 || actions < 1 || quantiles < 1) {
    throw std::invalid_argument("QuantileQTable: bad shape");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("QuantileQTable: learning rate must be positive");
}

std::span<double> QuantileQTable::quantiles(int s, int a) {
  const std::size_t base = (static_cast<std::size_t>(s) * num_actions + a) * num_quantiles;
  return {values.data() + base, static_cast<std::size_t>(num_quantiles)};
}

std::span<const double> QuantileQTable::quantiles(int s, int a) const {
  const std::size_t base = (static_cast<std::size_t>(s) * num_actions + a) * num_quantiles;
  return {values.data() + base, static_cast<std::size_t>(num_quantiles)};
}

double QuantileQTable::mean(int s, int a) const {
  const auto q = quantiles(s, a);
  return std::accumulate(q.begin(), q.end(), 0.0) / num_quantiles;
}

std::vector<double> td_target(const QuantileQTable& online, const QuantileQTable& target,
                              const Transition& t, double gamma) {
  double ret = 0.0;
  double discount = 1.0;
  for (double r : t.rewards) {
    ret += discount * r;
    discount *= gamma;
  }
  std::vector<double> targets(online.num_quantiles, ret);
  if (t.terminal) return targets;

  int best = 0;
  double best_mean = online.mean(t.bootstrap_state, 0);
  for (int a = 1; a < online.num_actions; ++a) {
    const double mean = online.mean(t.bootstrap_state, a);
    if (mean > best_mean) {
      best = a;
      best_mean = mean;
    }
  }
  const auto boot = target.quantiles(t.bootstrap_state, best);
  for (int j = 0; j < online.num_quantiles; ++j) targets[j] += discount * boot[j];
  return targets;
}

double quantile_huber_update(QuantileQTable& table, const Transition& t,
                             std::span<const double> targets, double weight, double kappa) {
  const int n = table.num_quantiles;
  if (static_cast<int>(targets.size()) != n) {
    throw std::invalid_argument("quantile_huber_update: wrong target length");
  }
  for (double v : targets) {
    if (!std::isfinite(v)) throw std::invalid_argument("quantile_huber_update: non-finite target");
  }
  auto q = table.quantiles(t.state, t.action);
  double abs_td = 0.0;
  std::vector<double> grad(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double nu = quantile_midpoint(j, n);
    for (double target : targets) {
      const double u = target - q[j];
      abs_td += std::abs(u);
      const double scale = std::abs(nu - (u < 0.0 ? 1.0 : 0.0));
      grad[j] -= scale * std::clamp(u, -kappa, kappa) / n;
    }
  }
  for (int j = 0; j < n; ++j) q[j] -= table.learning_rate * weight * grad[j];
  return abs_td / (static_cast<double>(n) * n);
}

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, double alpha, double beta)
    : capacity_(capacity), alpha_(alpha), beta_(beta) {
  if (capacity == 0) throw std::invalid_argument("PrioritizedReplay: zero capacity");
}

void PrioritizedReplay::add(Transition t, std::optional<double> priority) {
  double p;
  if (priority) {
    if (!(*priority > 0.0)) throw std::invalid_argument("PrioritizedReplay: priority must be positive");
    p = *priority;
  } else {
    p = priorities_.empty() ? 1.0 : *std::max_element(priorities_.begin(), priorities_.end());
  }
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(t));
    priorities_.push_back(p);
  } else {
    entries_[cursor_] = std::move(t);
    priorities_[cursor_] = p;
    cursor_ = (cursor_ + 1) % capacity_;
  }
  insertions_ += 1;
}

PrioritizedReplay::Batch PrioritizedReplay::sample(int batch_size, Rng& rng) const {
  if (entries_.empty()) throw std::runtime_error("PrioritizedReplay: sampling from empty buffer");
  const std::size_t n = entries_.size();
  std::vector<double> scaled(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = std::pow(priorities_[i], alpha_);
    total += scaled[i];
  }
  std::discrete_distribution<std::size_t> pick(scaled.begin(), scaled.end());
  Batch batch;
  batch.indices.resize(batch_size);
  batch.weights.resize(batch_size);
  double max_weight = 0.0;
  for (int b = 0; b < batch_size; ++b) {
    const std::size_t i = pick(rng);
    batch.indices[b] = i;
    const double prob = scaled[i] / total;
    batch.weights[b] = std::pow(n * prob, -beta_);
    max_weight = std::max(max_weight, batch.weights[b]);
  }
  for (double& w : batch.weights) w /= max_weight;
  return batch;
}

void PrioritizedReplay::set_priority(std::size_t i, double priority) {
  if (!(priority > 0.0)) throw std::invalid_argument("PrioritizedReplay: priority must be positive");
  priorities_.at(i) = priority;
}

void PrioritizedReplay::save_priorities(std::ostream& out) const {
  out.precision(17);
  out << "replay-priorities v1\n" << priorities_.size() << "\n";
  for (double p : priorities_) out << p << "\n";
}

void learner_step(QuantileQTable& online, QuantileQTable& target, PrioritizedReplay& replay,
                  int batch_size, double gamma, Rng& rng, long& update_count, int sync_period) {
  const auto batch = replay.sample(batch_size, rng);
  for (int b = 0; b < batch_size; ++b) {
    const std::size_t i = batch.indices[b];
    const auto& t = replay.transition(i);
    const auto targets = td_target(online, target, t, gamma);
    const double abs_td = quantile_huber_update(online, t, targets, batch.weights[b]);
    replay.set_priority(i, abs_td + 1e-6);
    update_count += 1;
    if (update_count % sync_period == 0) target = online;
  }
}

void save_table(const QuantileQTable& table, std::ostream& out) {
  out.precision(17);
  out << "quantile-table v1\n";
  out << table.num_states << " " << table.num_actions << " " << table.num_quantiles << " "
      << table.learning_rate << "\n";
  for (double v : table.values) out << v << "\n";
}

QuantileQTable load_table(std::istream& in) {
  std::string word, version;
  in >> word >> version;
  if (word != "quantile-table" || version != "v1") {
    throw std::runtime_error("table snapshot: bad header");
  }
  int states = 0, actions = 0, quantiles = 0;
  double lr = 0.0;
  in >> states >> actions >> quantiles >> lr;
  QuantileQTable table(states, actions, quantiles, lr);
  for (double& v : table.values) {
    in >> v;
    if (!in) throw std::runtime_error("table snapshot: truncated values");
  }
  return table;
}

}  // namespace explore
