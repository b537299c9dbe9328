#include "explore/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace explore {

double quantile_midpoint(int j, int n) {
  return (2.0 * j + 1.0) / (2.0 * n);
}

double optimism_aggregate(std::span<const double> q, double omega) {
  const int n = static_cast<int>(q.size());
  if (n == 0) throw std::invalid_argument("optimism_aggregate: empty quantile vector");
  if (!std::isfinite(omega)) throw std::invalid_argument("optimism_aggregate: non-finite omega");
  for (double v : q) {
    if (!std::isfinite(v)) throw std::invalid_argument("optimism_aggregate: non-finite quantile value");
  }
  // Shift midpoints by their mean (= 1/2) before exponentiating; the ratio is
  // invariant and the weights stay bounded for large |omega|.
  const double nu_mean = 0.5;
  double wsum = 0.0;
  double num = 0.0;
  for (int j = 0; j < n; ++j) {
    const double w = std::exp(-omega * (quantile_midpoint(j, n) - nu_mean));
    wsum += w;
    num += w * q[j];
  }
  return num / wsum;
}

std::vector<double> action_distribution(const std::vector<QuantileVector>& q_per_action,
                                        const Modulation& z,
                                        std::optional<int> prev_action) {
  const int num_actions = static_cast<int>(q_per_action.size());
  if (num_actions == 0) throw std::invalid_argument("action_distribution: no actions");
  if (!(z.temperature > 0.0)) throw std::invalid_argument("action_distribution: temperature must be positive");
  if (z.epsilon < 0.0 || z.epsilon > 1.0) throw std::invalid_argument("action_distribution: epsilon out of range");
  if (z.repeat_prob < 0.0 || z.repeat_prob >= 1.0) throw std::invalid_argument("action_distribution: repeat_prob out of range");
  if (prev_action && (*prev_action < 0 || *prev_action >= num_actions)) {
    throw std::invalid_argument("action_distribution: previous action out of range");
  }

  std::vector<double> logits(num_actions);
  for (int a = 0; a < num_actions; ++a) {
    const double bias = z.bias.empty() ? 0.0 : z.bias.at(a);
    logits[a] = (optimism_aggregate(q_per_action[a].values, z.optimism) + bias) / z.temperature;
    if (!std::isfinite(logits[a])) throw std::invalid_argument("action_distribution: non-finite logit");
  }

  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> soft(num_actions);
  double soft_sum = 0.0;
  for (int a = 0; a < num_actions; ++a) {
    soft[a] = std::exp(logits[a] - max_logit);
    soft_sum += soft[a];
  }

  const double rho = prev_action ? z.repeat_prob : 0.0;
  std::vector<double> p(num_actions);
  for (int a = 0; a < num_actions; ++a) {
    p[a] = (1.0 - z.epsilon) * (1.0 - rho) * soft[a] / soft_sum +
           z.epsilon * (1.0 - rho) / num_actions;
  }
  if (prev_action) p[*prev_action] += rho;
  return p;
}

int sample_action(std::span<const double> dist, Rng& rng) {
  if (dist.empty()) throw std::invalid_argument("sample_action: empty distribution");
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    acc += dist[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(dist.size()) - 1;  // rounding slack
}

int greedy_action(const std::vector<QuantileVector>& q_per_action) {
  if (q_per_action.empty()) throw std::invalid_argument("greedy_action: no actions");
  int best = 0;
  double best_mean = 0.0;
  for (int a = 0; a < static_cast<int>(q_per_action.size()); ++a) {
    const auto& q = q_per_action[a].values;
    if (q.empty()) throw std::invalid_argument("greedy_action: empty quantile vector");
    double mean = std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
    if (!std::isfinite(mean)) throw std::invalid_argument("greedy_action: non-finite value");
    if (a == 0 || mean > best_mean) {
      best = a;
      best_mean = mean;
    }
  }
  return best;
}

}  // namespace explore
