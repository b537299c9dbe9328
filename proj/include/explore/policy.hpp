#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "explore/modulation.hpp"

namespace explore {

using Rng = std::mt19937_64;

/// Per-(state,action) vector of n quantile value estimates on the midpoint
/// grid {1/(2n), 3/(2n), ..., (2n-1)/(2n)}.
struct QuantileVector {
  std::vector<double> values;
};

double quantile_midpoint(int j, int n);

/// Q_omega: exponentially nu-weighted mean of the quantile values.
/// omega = 0 recovers the arithmetic mean; weights are computed relative to
/// the mean midpoint so the ratio stays bounded for large |omega|.
double optimism_aggregate(std::span<const double> q, double omega);

/// The z-modulated behaviour distribution:
///   (1-eps)(1-rho) * softmax_T(Q_omega + b) + eps(1-rho)/|A| + rho * I[a=prev]
/// With no previous action the rho terms are dropped and the remainder is
/// renormalized (equivalent to rho = 0 for that step).
std::vector<double> action_distribution(const std::vector<QuantileVector>& q_per_action,
                                        const Modulation& z,
                                        std::optional<int> prev_action);

int sample_action(std::span<const double> dist, Rng& rng);

/// Argmax over quantile means, ties broken by lowest index.
int greedy_action(const std::vector<QuantileVector>& q_per_action);

}  // namespace explore
